#pragma once

#include <string>

#include "navfield/optim.hpp"

namespace navfield {

// Flat binary checkpoint: magic "NFLDCKPT", u32 version, u64 param count,
// then per parameter: u32 name length, name bytes, u32 rank, u64 dims,
// raw little-endian f64 data.
void save_checkpoint(const std::string& path, const ParamSet& params);

// Loads into an existing ParamSet; names and shapes must match exactly.
void load_checkpoint(const std::string& path, ParamSet& params);

}  // namespace navfield
