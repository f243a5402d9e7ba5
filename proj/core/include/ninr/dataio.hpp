#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "ninr/dataset.hpp"
#include "ninr/rng.hpp"

namespace ninr {

// IDX container: big-endian magic {0, 0, 0x08, rank}, rank u32 dimensions, u8 payload.
// Rank-1 files are labels and load as integer values; higher ranks are images and load
// scaled to [0, 1].

Tensor load_idx(std::span<const std::uint8_t> bytes);
/// Inverse of load_idx. Image values are mapped back with round(v * 255).
std::vector<std::uint8_t> save_idx(const Tensor& t);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Image/label IDX pair as an NHWC dataset (n x H x W x 1) with classes = max label + 1
/// unless `n_classes` is given.
Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                         std::string name, std::size_t n_classes = 0);

/// CIFAR-10 binary batches (3073-byte records: label, then R, G, B planes of 32x32),
/// returned as n x 32 x 32 x 3 in [0, 1].
Dataset load_cifar10(std::span<const std::filesystem::path> batches, std::string name = "cifar10");
Dataset parse_cifar10(std::span<const std::uint8_t> bytes, std::string name = "cifar10");

/// Aspect-preserving bilinear resize so the larger side is 20, centred on a 28 x 28 zero
/// canvas at offset floor((28 - side) / 2). Accepts H x W or H x W x 1.
Tensor usps_to_mnist_frame(const Tensor& img);
/// Applies usps_to_mnist_frame to every image of a dataset whose samples are h x w.
Dataset usps_dataset_to_mnist_frame(const Dataset& data, std::size_t h, std::size_t w);

/// x ~ N(0, sigma_x^2), y = M x, as n x 1 regression tensors.
Dataset synth_linear(std::size_t n, double M, double sigma_x, RngStream& rng);

/// Shuffled split into (first `fraction`, rest).
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double fraction, RngStream& rng);

/// First `per_class` samples of each class in original order (fewer if a class runs out).
Dataset balanced_subset(const Dataset& data, std::size_t per_class);

}  // namespace ninr
