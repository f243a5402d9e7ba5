#include "ninr/lineartoy.hpp"

#include <cmath>
#include <sstream>

#include "ninr/error.hpp"
#include "ninr/network.hpp"
#include "ninr/optimizer.hpp"

namespace ninr {

void LinearToyState::validate() const {
  if (!(sigma_x > 0.0)) throw ConfigError("toy: sigma_x must be > 0");
  if (!(eta > 0.0)) throw ConfigError("toy: eta must be > 0");
  if (!(sigma_eps >= 0.0)) throw ConfigError("toy: sigma_eps must be >= 0");
  if (phi_mode == PhiMode::sample && batch == 0) throw ConfigError("toy: batch must be >= 1");
}

double toy_loss_at(const LinearToyState& s, double phi) {
  const double r = s.w1 * s.w0 - s.M;
  double cross = 0.0;
  if (s.phi_mode == PhiMode::sample) {
    cross = 2.0 * s.w1 * s.w_ni * r * s.sigma_x * s.sigma_eps * phi /
            std::sqrt(static_cast<double>(s.batch));
  }
  return 0.5 * (cross + r * r * s.sigma_x * s.sigma_x +
                s.w1 * s.w1 * s.w_ni * s.w_ni * s.sigma_eps * s.sigma_eps);
}

double toy_loss(const LinearToyState& s, RngStream* rng) {
  s.validate();
  if (s.phi_mode == PhiMode::drop) return toy_loss_at(s, 0.0);
  if (rng == nullptr) throw ConfigError("toy_loss: sample mode needs an rng");
  return toy_loss_at(s, rng->normal());
}

ToyRegularizers toy_r1_r2(const LinearToyState& s, double phi) {
  ToyRegularizers r;
  if (s.phi_mode == PhiMode::sample) {
    r.r1 = s.w_ni * s.w1 * (s.w1 * s.w0 - s.M) * s.sigma_x * s.sigma_eps * phi /
           std::sqrt(static_cast<double>(s.batch));
  }
  r.r2 = 0.5 * s.w1 * s.w1 * s.w_ni * s.w_ni * s.sigma_eps * s.sigma_eps;
  return r;
}

LinearToyState toy_step(const LinearToyState& s, RngStream* rng) {
  const double se2 = s.sigma_eps * s.sigma_eps;
  const double sx2 = s.sigma_x * s.sigma_x;
  const double r = s.w1 * s.w0 - s.M;
  LinearToyState n = s;
  n.w1 = s.w1 * (1.0 - s.eta * se2 * s.w_ni * s.w_ni) - s.eta * r * s.w0 * sx2;
  n.w_ni = s.w_ni * (1.0 - s.eta * se2 * s.w1 * s.w1);
  if (s.phi_mode == PhiMode::sample) {
    if (rng == nullptr) throw ConfigError("toy_step: sample mode needs an rng");
    const double k = s.sigma_x * s.sigma_eps * rng->normal() / std::sqrt(static_cast<double>(s.batch));
    n.w1 -= s.eta * s.w_ni * (2.0 * s.w1 * s.w0 - s.M) * k;
    n.w_ni -= s.eta * s.w1 * r * k;
  }
  return n;
}

bool toy_diverged(const LinearToyState& s) {
  return !std::isfinite(s.w1) || !std::isfinite(s.w_ni) || std::abs(s.w1) > kToyDivergence ||
         std::abs(s.w_ni) > kToyDivergence;
}

namespace {

EpochRecord toy_record(const LinearToyState& s, std::size_t step) {
  EpochRecord r;
  r.epoch = step;
  r.train_loss = toy_loss_at(s, 0.0);
  r.test_loss = r.train_loss;
  r.train_acc = r.test_acc = std::nan("");
  r.niw_norms = {std::abs(s.w_ni)};
  r.weight_norms = {std::abs(s.w0), std::abs(s.w1)};
  return r;
}

bool diverges_within(LinearToyState s, std::size_t horizon) {
  for (std::size_t t = 0; t < horizon; ++t) {
    s = toy_step(s);
    if (toy_diverged(s)) return true;
  }
  return false;
}

}  // namespace

TrainTrace toy_trace(const LinearToyState& s0, std::size_t steps) {
  s0.validate();
  LinearToyState s = s0;
  s.phi_mode = PhiMode::drop;
  TrainTrace trace;
  trace.initial = toy_record(s, 0);
  for (std::size_t t = 1; t <= steps; ++t) {
    s = toy_step(s);
    trace.epochs.push_back(toy_record(s, t));
    if (toy_diverged(s)) {
      trace.diverged = true;
      break;
    }
  }
  return trace;
}

ToyBoundary toy_phase_boundary(const LinearToyState& s0, std::size_t horizon, double rel_tol,
                               double cap) {
  s0.validate();
  if (horizon == 0) throw ConfigError("toy_phase_boundary: horizon must be >= 1");
  if (!(rel_tol > 0.0)) throw ConfigError("toy_phase_boundary: rel_tol must be > 0");
  auto at = [&](double se2) {
    LinearToyState s = s0;
    s.phi_mode = PhiMode::drop;
    s.sigma_eps = std::sqrt(se2);
    return s;
  };
  if (diverges_within(at(0.0), horizon)) {
    throw ConfigError("toy_phase_boundary: the noise-free map already diverges");
  }
  ToyBoundary b;
  double lo = 0.0;
  double hi = 1.0 / s0.eta;
  while (!diverges_within(at(hi), horizon)) {
    lo = hi;
    hi *= 2.0;
    if (hi > cap) throw NumericError("toy_phase_boundary: no divergence found below the cap");
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (diverges_within(at(mid), horizon)) {
      hi = mid;
    } else {
      lo = mid;
    }
    ++b.iterations;
  }
  b.lo = lo;
  b.hi = hi;
  b.sigma_eps_sq_star = 0.5 * (lo + hi);
  return b;
}

std::vector<ToySweepRow> toy_sweep(const LinearToyState& base, const std::vector<double>& etas,
                                   const std::vector<double>& sigma_eps_sqs, std::size_t horizon,
                                   const PhaseThresholds& th, double converge_tol) {
  PhaseThresholds t = th;
  t.window = std::min(t.window, std::max<std::size_t>(horizon, 1));
  std::vector<ToySweepRow> rows;
  for (double eta : etas) {
    for (double se2 : sigma_eps_sqs) {
      LinearToyState s = base;
      s.phi_mode = PhiMode::drop;
      s.eta = eta;
      s.sigma_eps = std::sqrt(se2);
      const TrainTrace trace = toy_trace(s, horizon);
      ToySweepRow row;
      row.eta = eta;
      row.sigma_eps_sq = se2;
      row.steps = trace.epochs.size();
      if (!trace.diverged) {
        for (const auto& r : trace.epochs) {
          if (r.train_loss < converge_tol) {
            row.steps = r.epoch;
            break;
          }
        }
      }
      row.label = classify_phase(trace, t).phase;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string toy_sweep_csv(const std::vector<ToySweepRow>& rows) {
  std::ostringstream os;
  os << "eta,sigma_eps_sq,steps_to_converge_or_diverge,label\r\n";
  for (const auto& r : rows) {
    os << format_double(r.eta) << ',' << format_double(r.sigma_eps_sq) << ',' << r.steps << ','
       << to_string(r.label) << "\r\n";
  }
  return os.str();
}

CrosscheckResult toy_vs_network_crosscheck(const LinearToyState& s0, std::size_t steps,
                                           std::size_t batch, std::uint64_t seed) {
  s0.validate();
  if (batch == 0) throw ConfigError("crosscheck: batch must be >= 1");
  const bool noisy = s0.sigma_eps > 0.0;

  NetworkSpec spec;
  spec.input_shape = {1};
  spec.layers = {LayerSpec::dense(1, 1, Activation::linear, false),
                 LayerSpec::dense(1, 1, Activation::linear, false)};
  spec.loss = LossKind::mse;
  NINConfig nin;
  nin.dist.kind = NoiseKind::normal;
  nin.dist.sigma_eps = noisy ? s0.sigma_eps : 1.0;  // the noiseless run feeds eps = 0 explicitly
  spec.nin = nin;
  const Network net(spec);

  Params p = net.zero_params();
  p.layers[0].weight[0] = s0.w0;
  p.layers[0].w_ni[0] = s0.w_ni;
  p.layers[1].weight[0] = s0.w1;
  OptimizerConfig oc;
  oc.kind = OptimizerKind::sgd;
  oc.eta = s0.eta;
  Optimizer opt(oc, 0.0, FreezeMask{{0, "weight"}});

  const RngStream root(seed);
  auto make_batch = [&](RngStream rng, Tensor& x, Tensor& y, NoiseDraws& eps) {
    x = Tensor({batch, 1});
    y = Tensor({batch, 1});
    eps = net.zero_noise(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      x[i] = s0.sigma_x * rng.normal();
      y[i] = s0.M * x[i];
      if (noisy) eps[0][i] = s0.sigma_eps * rng.normal();
    }
  };

  LinearToyState toy = s0;
  toy.phi_mode = PhiMode::drop;
  Tensor x, y;
  NoiseDraws eps;
  if (!noisy) {
    make_batch(root.fork("data"), x, y, eps);
    double m2 = 0.0;
    for (double v : x.data()) m2 += v * v;
    toy.sigma_x = std::sqrt(m2 / static_cast<double>(batch));
  }

  CrosscheckResult res;
  RngStream unused(0);
  for (std::size_t t = 1; t <= steps; ++t) {
    if (!res.toy_diverged_at) {
      toy = toy_step(toy);
      res.toy_path.push_back(toy);
      if (toy_diverged(toy)) res.toy_diverged_at = t;
    }
    if (!res.net_diverged_at) {
      if (noisy) make_batch(root.fork(t), x, y, eps);
      ForwardResult fr = net.forward_with_noise(p, x, eps, unused, Mode::train, true);
      Gradients g = net.backward(p, *fr.cache, y);
      opt.step(p, g.params);
      const double w1 = p.layers[1].weight[0];
      const double wn = p.layers[0].w_ni[0];
      res.net_path.emplace_back(w1, wn);
      if (!std::isfinite(w1) || !std::isfinite(wn) || std::abs(w1) > kToyDivergence ||
          std::abs(wn) > kToyDivergence) {
        res.net_diverged_at = t;
      }
    }
    if (!res.toy_diverged_at && !res.net_diverged_at) {
      auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); };
      const auto [w1, wn] = res.net_path.back();
      res.max_rel_deviation =
          std::max({res.max_rel_deviation, rel(w1, toy.w1), rel(wn, toy.w_ni)});
    }
    if (res.toy_diverged_at && res.net_diverged_at) break;
  }
  return res;
}

}  // namespace ninr
