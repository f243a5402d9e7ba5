#include "ninr/rng.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace ninr {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) noexcept
    : seed_(seed), key_(mix64(seed + kGolden)) {}

RngStream RngStream::from_key(std::uint64_t seed, std::uint64_t key) noexcept {
  RngStream s(seed);
  s.key_ = key;
  return s;
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t c = counter_++;
  return mix64(key_ ^ mix64(c * kGolden + 0x632BE59BD9B4E019ULL));
}

double RngStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

double RngStream::normal(double mean, double stddev) noexcept {
  return mean + stddev * normal();
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
  // Rejection keeps the result unbiased for any n.
  const std::uint64_t limit = -n % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= limit) return r % n;
  }
}

RngStream RngStream::fork(std::string_view label) const noexcept {
  return from_key(seed_, mix64(key_ ^ mix64(fnv1a(label) + 0x2545F4914F6CDD1DULL)));
}

RngStream RngStream::fork(std::uint64_t index) const noexcept {
  return from_key(seed_, mix64(key_ ^ mix64(index * kGolden + 0xD1B54A32D192ED03ULL)));
}

void shuffle_indices(std::size_t* first, std::size_t n, RngStream& rng) noexcept {
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace ninr
