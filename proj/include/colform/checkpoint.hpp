#pragma once

#include <string>

#include "colform/policy.hpp"

namespace colform {

// Flat binary checkpoint: magic, version, config words, then each named
// tensor as (name length, name, rank, dims, little-endian float32 data).
// Values are quantized to 32-bit on disk.
void save_checkpoint(const std::string& path, const PolicyParams& params);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace colform
