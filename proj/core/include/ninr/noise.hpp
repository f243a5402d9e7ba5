#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ninr/rng.hpp"

namespace ninr {

enum class NoiseKind { normal, uniform, double_gaussian };

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

/// Scalar distribution of the injected noise.
///
/// double_gaussian is the mixture
///   mix_weight * N(+sigma_eps, s^2) + (1 - mix_weight) * N(-sigma_eps, s^2)
/// with s = component_std (defaults to sigma_eps / 5 when unset).
struct NoiseDistribution {
  NoiseKind kind = NoiseKind::normal;
  double sigma_eps = 1.0;
  double mix_weight = 0.5;
  std::optional<double> component_std;

  /// Throws ConfigError on sigma_eps <= 0, mix_weight outside [0,1] or negative widths.
  void validate() const;
  double component_width() const { return component_std.value_or(sigma_eps / 5.0); }
  double mean() const;
  double variance() const;

  double draw(RngStream& rng) const;
};

std::vector<double> sample_noise(const NoiseDistribution& dist, std::size_t count,
                                 RngStream& rng);

}  // namespace ninr
