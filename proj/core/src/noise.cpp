#include "ninr/noise.hpp"

#include <cmath>

#include "ninr/error.hpp"

namespace ninr {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::normal: return "normal";
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::double_gaussian: return "double-gaussian";
  }
  return "?";
}

NoiseKind noise_kind_from_string(std::string_view name) {
  if (name == "normal" || name == "gaussian") return NoiseKind::normal;
  if (name == "uniform") return NoiseKind::uniform;
  if (name == "double-gaussian" || name == "double_gaussian") return NoiseKind::double_gaussian;
  throw ConfigError("unknown noise distribution '" + std::string(name) + "'");
}

void NoiseDistribution::validate() const {
  if (!(sigma_eps > 0.0) || !std::isfinite(sigma_eps)) {
    throw ConfigError("noise: sigma_eps must be finite and > 0");
  }
  if (kind == NoiseKind::double_gaussian) {
    if (!(mix_weight >= 0.0 && mix_weight <= 1.0)) {
      throw ConfigError("noise: mix_weight must lie in [0, 1]");
    }
    if (!(component_width() >= 0.0)) throw ConfigError("noise: component_std must be >= 0");
  }
}

double NoiseDistribution::mean() const {
  return kind == NoiseKind::double_gaussian ? (2.0 * mix_weight - 1.0) * sigma_eps : 0.0;
}

double NoiseDistribution::variance() const {
  switch (kind) {
    case NoiseKind::normal: return sigma_eps * sigma_eps;
    case NoiseKind::uniform: return sigma_eps * sigma_eps / 3.0;
    case NoiseKind::double_gaussian: {
      const double s = component_width();
      const double m = mean();
      return s * s + sigma_eps * sigma_eps - m * m;
    }
  }
  return 0.0;
}

double NoiseDistribution::draw(RngStream& rng) const {
  switch (kind) {
    case NoiseKind::normal: return sigma_eps * rng.normal();
    case NoiseKind::uniform: return rng.uniform(-sigma_eps, sigma_eps);
    case NoiseKind::double_gaussian: {
      const double centre = rng.uniform() < mix_weight ? sigma_eps : -sigma_eps;
      const double s = component_width();
      return s == 0.0 ? centre : centre + s * rng.normal();
    }
  }
  return 0.0;
}

std::vector<double> sample_noise(const NoiseDistribution& dist, std::size_t count,
                                 RngStream& rng) {
  dist.validate();
  std::vector<double> out(count);
  for (auto& v : out) v = dist.draw(rng);
  return out;
}

}  // namespace ninr
