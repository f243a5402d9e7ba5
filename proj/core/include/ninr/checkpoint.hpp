#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ninr/network.hpp"

namespace ninr {

// Checkpoint layout, binary (little-endian):
//   "NINRCKPT" | u32 version=1 | u32 count
//   count x { u32 layer | u32 name_len | name bytes | u32 rank | rank x u64 dim
//             | prod(dims) x f64 row-major payload }
// Entries appear in canonical order: per layer weight, bias, w_ni, gamma, beta,
// running_mean, running_var (empty tensors omitted).
//
// JSON: {"format":"ninr-checkpoint","version":1,
//        "tensors":[{"layer":i,"name":"weight","shape":[..],"data":[..]}, ...]}

std::vector<std::uint8_t> checkpoint_to_bytes(const Params& params);
/// Rebuilds Params with `layer_count` layers. Throws FormatError on bad input.
Params checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes, std::size_t layer_count);

std::string checkpoint_to_json(const Params& params);
Params checkpoint_from_json(const std::string& text, std::size_t layer_count);

void save_checkpoint(const std::filesystem::path& path, const Params& params);
Params load_checkpoint(const std::filesystem::path& path, std::size_t layer_count);

}  // namespace ninr
