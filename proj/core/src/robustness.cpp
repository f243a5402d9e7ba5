#include "ninr/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ninr/error.hpp"
#include "ninr/loss.hpp"
#include "ninr/trace.hpp"
#include "ninr/trainer.hpp"

namespace ninr {

namespace {

constexpr std::size_t kChunk = 1000;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

RobustnessRow summarize(double x, const std::vector<double>& accs, std::size_t n) {
  RobustnessRow row;
  row.x = x;
  row.n = n;
  // Shifted by the first value so identical repeats reproduce it exactly.
  double shift = 0.0;
  for (double a : accs) shift += a - accs.front();
  const double mean = accs.front() + shift / static_cast<double>(accs.size());
  row.acc_mean = mean;
  if (accs.size() > 1) {
    double ss = 0.0;
    for (double a : accs) ss += (a - mean) * (a - mean);
    row.acc_2std = 2.0 * std::sqrt(ss / static_cast<double>(accs.size() - 1));
  }
  return row;
}

void check_input(const Network& net, const Dataset& data, const char* what) {
  if (data.size() == 0) throw ConfigError(std::string(what) + ": empty dataset");
  if (data.inputs.row_size() != net.input_width()) {
    throw ShapeError(std::string(what) + ": inputs of width " + std::to_string(data.inputs.row_size()) +
                     " do not match network input " + shape_string(net.spec().input_shape));
  }
}

// One signed-gradient step from `x`, gradient taken at `x` in eval mode.
Tensor sign_step(const Network& net, const Params& params, const Tensor& x, const Tensor& y,
                 double step) {
  RngStream unused(0);
  ForwardResult fr = net.forward_with_noise(params, x, {}, unused, Mode::eval, true);
  Gradients g = net.backward(params, *fr.cache, y);
  Tensor out = x;
  const auto gi = g.input.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += step * sign(gi[i]);
  return out;
}

void clamp(Tensor& x, const std::optional<InputRange>& clip) {
  if (!clip) return;
  for (double& v : x.data()) v = std::clamp(v, clip->lo, clip->hi);
}

}  // namespace

void CorruptionSpec::validate() const {
  if (!(sigma_noise >= 0.0 && sigma_noise <= 1.0)) throw ConfigError("corruption: sigma_noise must lie in [0, 1]");
  if (repeats == 0) throw ConfigError("corruption: repeats must be >= 1");
}

void AttackSpec::validate() const {
  if (!(delta > 0.0)) throw ConfigError("attack: delta must be > 0");
  if (k == 0) throw ConfigError("attack: k must be >= 1");
  if (!(step >= 0.0)) throw ConfigError("attack: step must be >= 0");
  if (clip && !(clip->lo <= clip->hi)) throw ConfigError("attack: clip range is empty");
  if (project_radius && !(*project_radius >= 0.0)) throw ConfigError("attack: projection radius must be >= 0");
}

std::string RobustnessReport::to_csv() const {
  std::ostringstream os;
  os << "sigma_or_delta,acc_mean,acc_2std,n\r\n";
  for (const auto& r : rows) {
    os << format_double(r.x) << ',' << format_double(r.acc_mean) << ',' << format_double(r.acc_2std)
       << ',' << r.n << "\r\n";
  }
  return os.str();
}

void corrupt_row(std::span<double> x, double sigma, RngStream& rng) {
  const double keep = std::sqrt(1.0 - sigma * sigma);
  for (double& v : x) v = keep * v + sigma * rng.normal();
}

Tensor corrupt_inputs(const Tensor& x, double sigma, const RngStream& rng) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw ConfigError("corrupt_inputs: sigma must lie in [0, 1]");
  Tensor out = x;
  if (sigma == 0.0 || x.empty()) return out;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    RngStream s = rng.fork(r);
    corrupt_row(out.row(r), sigma, s);
  }
  return out;
}

double clean_accuracy(const Network& net, const Params& params, const Dataset& data) {
  check_input(net, data, "clean_accuracy");
  return evaluate(net, params, data, kChunk).accuracy;
}

RobustnessReport corruption_curve(const Network& net, const Params& params, const Dataset& test,
                                  std::span<const double> sigmas, std::size_t repeats,
                                  const RngStream& rng) {
  check_input(net, test, "corruption_curve");
  if (repeats == 0) throw ConfigError("corruption_curve: repeats must be >= 1");
  for (double s : sigmas) CorruptionSpec{s, repeats, 0}.validate();
  RobustnessReport report;
  const std::size_t n = test.size();
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    const double sigma = sigmas[si];
    std::vector<double> accs;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      const RngStream stream = rng.fork(si).fork(rep);
      if (sigma == 0.0) {
        accs.push_back(evaluate(net, params, test, kChunk).accuracy);
        continue;
      }
      std::size_t correct = 0;
      RngStream unused(0);
      for (std::size_t b = 0; b < n; b += kChunk) {
        const std::size_t e = std::min(n, b + kChunk);
        Tensor x = test.inputs.slice_rows(b, e);
        for (std::size_t r = 0; r < e - b; ++r) {
          RngStream s = stream.fork(b + r);
          corrupt_row(x.row(r), sigma, s);
        }
        ForwardResult fr = net.forward_with_noise(params, x, {}, unused, Mode::eval, false);
        correct += correct_count(fr.outputs, test.targets.slice_rows(b, e));
      }
      accs.push_back(static_cast<double>(correct) / static_cast<double>(n));
    }
    report.rows.push_back(summarize(sigma, accs, n));
  }
  return report;
}

Tensor fgsm_attack(const Network& net, const Params& params, const Tensor& x, const Tensor& y,
                   double delta, std::optional<InputRange> clip) {
  if (delta == 0.0) {
    Tensor out = x;
    clamp(out, clip);
    return out;
  }
  Tensor out = sign_step(net, params, x, y, delta);
  clamp(out, clip);
  return out;
}

Tensor pgd_attack(const Network& net, const Params& params, const Tensor& x, const Tensor& y,
                  std::size_t k, double step, std::optional<InputRange> clip,
                  std::optional<double> project_radius) {
  if (k == 0) throw ConfigError("pgd_attack: k must be >= 1");
  Tensor cur = x;
  for (std::size_t it = 0; it < k; ++it) {
    if (step == 0.0) break;
    cur = sign_step(net, params, cur, y, step);
    if (project_radius) {
      const double r = *project_radius;
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = std::clamp(cur[i], x[i] - r, x[i] + r);
    }
    clamp(cur, clip);
  }
  if (step == 0.0) clamp(cur, clip);
  return cur;
}

RobustnessReport attack_curve(const Network& net, const Params& params, const Dataset& test,
                              const AttackSpec& spec, std::span<const double> deltas,
                              std::size_t chunk) {
  check_input(net, test, "attack_curve");
  if (chunk == 0) chunk = kChunk;
  RobustnessReport report;
  const std::size_t n = test.size();
  for (double delta : deltas) {
    if (!(delta >= 0.0)) throw ConfigError("attack_curve: delta must be >= 0");
    std::size_t correct = 0;
    RngStream unused(0);
    for (std::size_t b = 0; b < n; b += chunk) {
      const std::size_t e = std::min(n, b + chunk);
      Tensor x = test.inputs.slice_rows(b, e);
      Tensor y = test.targets.slice_rows(b, e);
      Tensor adv = spec.kind == AttackKind::fgsm
                       ? fgsm_attack(net, params, x, y, delta, spec.clip)
                       : pgd_attack(net, params, x, y, spec.k, delta, spec.clip, spec.project_radius);
      ForwardResult fr = net.forward_with_noise(params, adv, {}, unused, Mode::eval, false);
      correct += correct_count(fr.outputs, y);
    }
    report.rows.push_back(summarize(delta, {static_cast<double>(correct) / static_cast<double>(n)}, n));
  }
  return report;
}

RobustnessReport domain_shift_eval(const Network& net, const Params& params, const Dataset& target) {
  check_input(net, target, "domain_shift_eval");
  RobustnessReport report;
  report.rows.push_back(summarize(0.0, {clean_accuracy(net, params, target)}, target.size()));
  return report;
}

}  // namespace ninr
