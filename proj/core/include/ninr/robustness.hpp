#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ninr/dataset.hpp"
#include "ninr/network.hpp"

namespace ninr {

struct CorruptionSpec {
  double sigma_noise = 0.0;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class AttackKind { fgsm, pgd };

struct InputRange {
  double lo = 0.0, hi = 1.0;
};

struct AttackSpec {
  AttackKind kind = AttackKind::fgsm;
  double delta = 0.1;
  std::size_t k = 1;
  double step = 0.1;                      // pgd per-iteration magnitude
  std::optional<InputRange> clip;         // clamp to a valid input range
  std::optional<double> project_radius;   // pgd: optional L-inf ball around the clean input

  void validate() const;
};

struct RobustnessRow {
  double x = 0.0;  // sigma_noise or attack delta
  double acc_mean = 0.0;
  double acc_2std = 0.0;  // two sample standard deviations over repeats
  std::size_t n = 0;      // evaluated samples per repeat
};

struct RobustnessReport {
  std::vector<RobustnessRow> rows;

  /// Header: sigma_or_delta,acc_mean,acc_2std,n
  std::string to_csv() const;
};

/// x <- sqrt(1 - s^2) x + s * delta with delta ~ N(0, 1) drawn from rng.
void corrupt_row(std::span<double> x, double sigma, RngStream& rng);

/// Corrupts every row of a batch; row r uses rng.fork(r). sigma = 0 returns x unchanged.
Tensor corrupt_inputs(const Tensor& x, double sigma, const RngStream& rng);

/// Eval-mode accuracy per sigma, each averaged over `repeats` fresh corruptions.
RobustnessReport corruption_curve(const Network& net, const Params& params, const Dataset& test,
                                  std::span<const double> sigmas, std::size_t repeats,
                                  const RngStream& rng);

/// x + delta * sign(grad_x L) with sign(0) = 0, computed in eval mode.
Tensor fgsm_attack(const Network& net, const Params& params, const Tensor& x, const Tensor& y,
                   double delta, std::optional<InputRange> clip = std::nullopt);

/// k FGSM steps of size `step`, each at the current iterate. No projection unless a
/// radius is given.
Tensor pgd_attack(const Network& net, const Params& params, const Tensor& x, const Tensor& y,
                  std::size_t k, double step, std::optional<InputRange> clip = std::nullopt,
                  std::optional<double> project_radius = std::nullopt);

/// Accuracy on adversarial inputs for each delta (one row per delta, repeats = 1).
/// For pgd, delta is the per-iteration step and spec.k the iteration count.
RobustnessReport attack_curve(const Network& net, const Params& params, const Dataset& test,
                              const AttackSpec& spec, std::span<const double> deltas,
                              std::size_t chunk = 1000);

/// Plain eval-mode accuracy on a target-domain set preprocessed with source statistics.
RobustnessReport domain_shift_eval(const Network& net, const Params& params, const Dataset& target);

/// Eval-mode accuracy of a model on a dataset.
double clean_accuracy(const Network& net, const Params& params, const Dataset& data);

}  // namespace ninr
