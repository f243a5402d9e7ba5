#pragma once

#include <cstdint>
#include <string_view>

namespace ninr {

/// Counter-based random stream.
///
/// Draw `i` of a stream is `mix(key, i)`, so a stream is fully described by
/// (key, counter) and sub-streams derived with fork() are pure functions of the
/// parent key and the label. This makes per-sample noise a function of
/// (seed, epoch, sample index) regardless of batch order.
///
/// Normal variates use the Box-Muller transform on two consecutive uniforms;
/// the second variate of each pair is cached.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept;
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept;
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Independent child stream keyed by a label or index. Does not advance this stream.
  RngStream fork(std::string_view label) const noexcept;
  RngStream fork(std::uint64_t index) const noexcept;

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  static RngStream from_key(std::uint64_t seed, std::uint64_t key) noexcept;

  std::uint64_t seed_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

inline RngStream rng_new(std::uint64_t seed) noexcept { return RngStream(seed); }

/// Fisher-Yates permutation of [0, n).
void shuffle_indices(std::size_t* first, std::size_t n, RngStream& rng) noexcept;

}  // namespace ninr
