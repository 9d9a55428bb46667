#pragma once

#include <string>

#include "vlm/params.hpp"

namespace vlm {

// Checkpoint layout: <base>.json lists name/shape/dtype/byte offset per
// tensor; <base>.bin is one blob of little-endian 32-bit floats in manifest
// order. Round trips are bit-exact.
void save_checkpoint(const ParamStore<float>& store, const std::string& base_path);
void load_checkpoint(ParamStore<float>& store, const std::string& base_path);

// Listing for inspect-checkpoint; returns JSON text.
std::string describe_checkpoint(const std::string& base_path);

} // namespace vlm
