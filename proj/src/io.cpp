#include "navfield/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace navfield {

void write_ppm(const std::string& path, int w, int h,
               const std::vector<double>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(w) * h * 3)
    throw std::runtime_error("write_ppm: size mismatch for " + path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
  out << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> bytes(rgb.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    const double v = std::clamp(rgb[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(v * 255.0 + 0.5);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

void write_strip_ppm(const std::string& path, const std::vector<double>& rgb,
                     int rows) {
  const int w = static_cast<int>(rgb.size() / 3);
  std::vector<double> img(static_cast<std::size_t>(w) * rows * 3);
  for (int r = 0; r < rows; ++r)
    std::copy(rgb.begin(), rgb.end(),
              img.begin() + static_cast<std::ptrdiff_t>(r) * w * 3);
  write_ppm(path, w, rows, img);
}

void write_scalar_strip_ppm(const std::string& path,
                            const std::vector<double>& values, int rows) {
  double mx = 0.0;
  for (double v : values) mx = std::max(mx, v);
  std::vector<double> rgb(values.size() * 3);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = mx > 0.0 ? values[i] / mx : 0.0;
    rgb[i * 3 + 0] = rgb[i * 3 + 1] = rgb[i * 3 + 2] = g;
  }
  write_strip_ppm(path, rgb, rows);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trajectory_csv(const std::vector<AgentPose>& trajectory) {
  std::string out = "step,x,y,theta\n";
  char buf[96];
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f\n", i,
                  trajectory[i].x, trajectory[i].y, trajectory[i].theta);
    out += buf;
  }
  return out;
}

std::string episode_log_line(const EpisodeLogEntry& e) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "episode=%d ce=%.6f aux=%.6f success=%d steps=%d",
                e.episode, e.ce, e.aux, e.success ? 1 : 0, e.steps);
  return buf;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create directory " + path + ": " +
                                   ec.message());
}

}  // namespace navfield
