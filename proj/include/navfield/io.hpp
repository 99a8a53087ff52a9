#pragma once

#include <string>
#include <vector>

#include "navfield/eval.hpp"

namespace navfield {

// Binary portable pixmap (P6). rgb is row-major, values clamped to [0,1].
void write_ppm(const std::string& path, int w, int h,
               const std::vector<double>& rgb);

// A 1-pixel strip stretched to `rows` rows for visibility.
void write_strip_ppm(const std::string& path, const std::vector<double>& rgb,
                     int rows = 16);

// Scalar strip rendered as grayscale after max-normalization.
void write_scalar_strip_ppm(const std::string& path,
                            const std::vector<double>& values, int rows = 16);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// step,x,y,theta per line with a header row.
std::string trajectory_csv(const std::vector<AgentPose>& trajectory);

// Line-delimited training log: episode,ce,aux,success,steps.
std::string episode_log_line(const EpisodeLogEntry& e);

void ensure_dir(const std::string& path);

}  // namespace navfield
