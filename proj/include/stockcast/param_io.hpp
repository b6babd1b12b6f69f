#pragma once

#include "stockcast/tensor.hpp"

#include <filesystem>
#include <string>

namespace stockcast {

/// Checkpoint layout: `<base>.bin` holds every tensor's float64 values
/// (little-endian) back to back in ParamSet order; `<base>.json` lists
/// `{name, shape, offset}` per tensor, offsets counted in elements.
void save_params(const ParamSet& params, const std::filesystem::path& base);

/// Throws MalformedInput when the blob and the manifest disagree.
ParamSet load_params(const std::filesystem::path& base);

std::string params_manifest(const ParamSet& params);

}  // namespace stockcast
