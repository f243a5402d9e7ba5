#pragma once

#include <string>
#include <vector>

#include "ninr/network.hpp"
#include "ninr/trace.hpp"

namespace ninr {

struct RegularizerEstimates {
  double r1 = 0.0;
  double r2 = 0.0;
  std::size_t batch_size = 0;
  double sigma_eps = 0.0;
};

/// R1 = sum over attachments of w_ni . <eps * g>, where g is the per-sample local
/// gradient at eps = 0 and eps are fresh draws from the network's NIN distribution.
double estimate_r1(const Network& net, const Params& params, const Tensor& batch,
                   const Tensor& labels, RngStream& rng);

/// [L(+a) + L(-a) - 2 L(0)] / 2 with a = sigma_eps applied to every attachment of the
/// batch. Throws NumericError if any probe loss is non-finite.
double estimate_r2(const Network& net, const Params& params, const Tensor& batch,
                   const Tensor& labels, double sigma_eps);

RegularizerEstimates estimate_regularizers(const Network& net, const Params& params,
                                           const Tensor& batch, const Tensor& labels,
                                           RngStream& rng);

struct CurvatureEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t probes = 0;
};

/// Monte-Carlo input curvature: mean over probes of [L(x+d) + L(x-d) - 2 L(x)] / 2 with
/// d ~ N(0, sigma_delta^2 I) drawn per sample. Evaluated in eval mode (eps = 0).
CurvatureEstimate estimate_input_curvature(const Network& net, const Params& params,
                                           const Tensor& batch, const Tensor& labels,
                                           double sigma_delta, std::size_t n_probes,
                                           RngStream& rng);

/// c * d_layer / eta, read as sigma_eps^2 at the decay/catapult transition.
double sigma_catapult_estimate(std::size_t d_layer, double eta, double c = 1.0);

enum class Phase { decoupled, decay, catapult, divergent };
std::string_view to_string(Phase p);
Phase phase_from_string(std::string_view s);

struct PhaseThresholds {
  double decay_ratio_max = 0.995;      // per-epoch |w_ni| ratio counted as shrinking
  std::size_t window = 10;             // early window in epochs
  double catapult_spike_factor = 2.0;  // loss multiple over the initial value
  double chance = 0.1;                 // chance accuracy
  double chance_factor = 1.5;
  double divergence_cap = 1e12;

  void validate() const;
};

struct PhaseEvidence {
  double initial_loss = 0.0;
  double peak_loss = 0.0;          // max train loss inside the window
  double final_loss = 0.0;
  double final_train_acc = 0.0;
  double niw_ratio_max = 0.0;      // largest per-epoch |w_ni| ratio in the window
  double niw_ratio_geomean = 0.0;  // geometric-mean ratio over the window
  bool diverged = false;
};

struct PhaseLabel {
  Phase phase = Phase::decoupled;
  PhaseEvidence evidence;
};

/// Rules, first match wins:
///   divergent: divergence flag, loss above the cap, or final train accuracy <= chance * factor
///   catapult:  max train loss in the window >= spike_factor * initial loss, and a later
///              epoch falls below the initial loss
///   decay:     every per-epoch ratio of the summed |w_ni| in the window is <= decay_ratio_max
///   decoupled: otherwise
/// Throws ConfigError if the trace is shorter than the window and did not diverge.
PhaseLabel classify_phase(const TrainTrace& trace, const PhaseThresholds& th = {});

}  // namespace ninr
