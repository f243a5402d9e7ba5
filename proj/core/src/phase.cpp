#include <algorithm>
#include <cmath>

#include "ninr/diagnostics.hpp"
#include "ninr/error.hpp"

namespace ninr {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::decoupled: return "decoupled";
    case Phase::decay: return "decay";
    case Phase::catapult: return "catapult";
    case Phase::divergent: return "divergent";
  }
  return "?";
}

Phase phase_from_string(std::string_view s) {
  if (s == "decoupled") return Phase::decoupled;
  if (s == "decay") return Phase::decay;
  if (s == "catapult") return Phase::catapult;
  if (s == "divergent") return Phase::divergent;
  throw ConfigError("unknown phase '" + std::string(s) + "'");
}

void PhaseThresholds::validate() const {
  if (!(decay_ratio_max > 0.0) || window == 0 || !(catapult_spike_factor > 0.0) ||
      !(chance > 0.0) || !(chance_factor > 0.0) || !(divergence_cap > 0.0)) {
    throw ConfigError("phase thresholds must all be positive");
  }
}

namespace {

double niw_total(const EpochRecord& r) {
  double s = 0.0;
  for (double v : r.niw_norms) s += v;
  return s;
}

}  // namespace

PhaseLabel classify_phase(const TrainTrace& trace, const PhaseThresholds& th) {
  th.validate();
  if (trace.epochs.size() < th.window && !trace.diverged) {
    throw ConfigError("classify_phase: trace has " + std::to_string(trace.epochs.size()) +
                      " epochs, window needs " + std::to_string(th.window));
  }
  PhaseLabel label;
  PhaseEvidence& ev = label.evidence;
  ev.diverged = trace.diverged;
  ev.initial_loss = trace.initial.train_loss;
  if (!trace.epochs.empty()) {
    ev.final_loss = trace.epochs.back().train_loss;
    ev.final_train_acc = trace.epochs.back().train_acc;
  } else {
    ev.final_loss = ev.initial_loss;
    ev.final_train_acc = trace.initial.train_acc;
  }
  const std::size_t w = std::min(th.window, trace.epochs.size());
  ev.peak_loss = ev.initial_loss;
  std::size_t peak_at = 0;
  for (std::size_t i = 0; i < w; ++i) {
    const double l = trace.epochs[i].train_loss;
    if (std::isnan(l) || l > ev.peak_loss) {
      ev.peak_loss = l;
      peak_at = i;
    }
  }

  bool blown = false;
  for (const auto& r : trace.epochs) {
    if (!std::isfinite(r.train_loss) || r.train_loss > th.divergence_cap) blown = true;
  }
  const bool at_chance =
      !std::isnan(ev.final_train_acc) && ev.final_train_acc <= th.chance * th.chance_factor;

  const bool has_niw = !trace.initial.niw_norms.empty();
  double prev = niw_total(trace.initial);
  double log_sum = 0.0;
  bool shrinking = has_niw && w > 0 && prev > 0.0;
  ev.niw_ratio_max = 0.0;
  for (std::size_t i = 0; i < w && has_niw; ++i) {
    const double cur = niw_total(trace.epochs[i]);
    const double ratio = prev > 0.0 ? cur / prev : 1.0;
    ev.niw_ratio_max = std::max(ev.niw_ratio_max, ratio);
    log_sum += std::log(std::max(ratio, 1e-300));
    if (!(ratio <= th.decay_ratio_max)) shrinking = false;
    prev = cur;
  }
  ev.niw_ratio_geomean = w > 0 && has_niw ? std::exp(log_sum / static_cast<double>(w)) : 1.0;

  if (trace.diverged || blown || at_chance) {
    label.phase = Phase::divergent;
    return label;
  }
  if (ev.peak_loss >= th.catapult_spike_factor * ev.initial_loss) {
    for (std::size_t i = peak_at + 1; i < trace.epochs.size(); ++i) {
      if (trace.epochs[i].train_loss < ev.initial_loss) {
        label.phase = Phase::catapult;
        return label;
      }
    }
  }
  label.phase = shrinking ? Phase::decay : Phase::decoupled;
  return label;
}

}  // namespace ninr
