#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ninr/diagnostics.hpp"
#include "ninr/rng.hpp"
#include "ninr/trace.hpp"

namespace ninr {

enum class PhiMode { drop, sample };

/// Univariate linear model y_hat = w1 * (w0 * x + w_ni * eps) fitted to y = M * x,
/// x ~ N(0, sigma_x^2), eps ~ N(0, sigma_eps^2).
struct LinearToyState {
  double w0 = 0.0;
  double w1 = 1.0;
  double w_ni = 1.0;
  double M = 1.0;
  double sigma_x = 1.0;
  double sigma_eps = 0.0;
  double eta = 0.01;
  PhiMode phi_mode = PhiMode::drop;
  std::size_t batch = 1;  // |B| used when phi_mode = sample

  void validate() const;
};

/// Batch-averaged loss. In sample mode Phi ~ N(0, 1) is drawn from `rng` (required).
double toy_loss(const LinearToyState& s, RngStream* rng = nullptr);
/// Same with an explicit Phi value (ignored in drop mode).
double toy_loss_at(const LinearToyState& s, double phi);

struct ToyRegularizers {
  double r1 = 0.0;
  double r2 = 0.0;
};
ToyRegularizers toy_r1_r2(const LinearToyState& s, double phi = 0.0);

/// One gradient step on (w1, w_ni) with w0 fixed. Drop mode uses the closed-form map;
/// sample mode adds the gradient of the Phi term with a fresh Phi from `rng`.
LinearToyState toy_step(const LinearToyState& s, RngStream* rng = nullptr);

/// True once a weight is non-finite or exceeds kToyDivergence in magnitude.
bool toy_diverged(const LinearToyState& s);
inline constexpr double kToyDivergence = 1e12;

/// Trajectory as a TrainTrace: one record per step, train_loss = toy_loss (drop mode),
/// niw_norms = {|w_ni|}, weight_norms = {|w0|, |w1|}. Stops early on divergence.
TrainTrace toy_trace(const LinearToyState& s0, std::size_t steps);

struct ToyBoundary {
  double sigma_eps_sq_star = 0.0;
  double lo = 0.0;  // largest sigma_eps^2 seen converging within the horizon
  double hi = 0.0;  // smallest sigma_eps^2 seen diverging within the horizon
  std::size_t iterations = 0;
};

/// Bisection over sigma_eps^2 for the divergence boundary, to a relative bracket of
/// `rel_tol`. Throws ConfigError if s0 diverges at sigma_eps = 0 and NumericError if
/// nothing diverges below `cap`.
ToyBoundary toy_phase_boundary(const LinearToyState& s0, std::size_t horizon,
                               double rel_tol = 1e-3, double cap = 1e12);

struct ToySweepRow {
  double eta = 0.0;
  double sigma_eps_sq = 0.0;
  std::size_t steps = 0;  // steps until convergence or divergence, horizon otherwise
  Phase label = Phase::decoupled;
};

/// Grid sweep. A run converges when toy_loss drops below `converge_tol`.
std::vector<ToySweepRow> toy_sweep(const LinearToyState& base, const std::vector<double>& etas,
                                   const std::vector<double>& sigma_eps_sqs, std::size_t horizon,
                                   const PhaseThresholds& th = {}, double converge_tol = 1e-10);
/// Header: eta,sigma_eps_sq,steps_to_converge_or_diverge,label
std::string toy_sweep_csv(const std::vector<ToySweepRow>& rows);

struct CrosscheckResult {
  double max_rel_deviation = 0.0;
  std::optional<std::size_t> toy_diverged_at;
  std::optional<std::size_t> net_diverged_at;
  std::vector<LinearToyState> toy_path;
  std::vector<std::pair<double, double>> net_path;  // (w1, w_ni) after each step
};

/// Runs the closed-form map next to SGD on the equivalent two-layer linear network
/// (w0 frozen, MSE). With sigma_eps > 0 every step draws `batch` fresh samples; with
/// sigma_eps = 0 one fixed dataset is reused and the map uses its empirical E[x^2].
CrosscheckResult toy_vs_network_crosscheck(const LinearToyState& s0, std::size_t steps,
                                           std::size_t batch = 1000000, std::uint64_t seed = 0);

}  // namespace ninr
