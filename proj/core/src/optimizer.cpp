#include "ninr/optimizer.hpp"

#include <cmath>

#include "ninr/error.hpp"

namespace ninr {

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::rmsprop: return "rmsprop";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}

OptimizerKind optimizer_from_string(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "rmsprop") return OptimizerKind::rmsprop;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

void OptimizerConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("optimizer: eta must be > 0");
  auto open01 = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open01(rho)) throw ConfigError("optimizer: rho must lie in (0, 1)");
  if (!open01(beta1) || !open01(beta2)) throw ConfigError("optimizer: beta1/beta2 must lie in (0, 1)");
  if (!(eps_stab >= 0.0)) throw ConfigError("optimizer: eps_stab must be >= 0");
}

void sgd_step(std::span<double> w, std::span<const double> g, double eta) {
  if (w.size() != g.size()) throw ShapeError("sgd_step: size mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * g[i];
}

void rmsprop_step(std::span<double> w, std::span<const double> g, std::span<double> v,
                  const OptimizerConfig& cfg) {
  if (w.size() != g.size() || v.size() != w.size()) throw ShapeError("rmsprop_step: size mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = cfg.rho * v[i] + (1.0 - cfg.rho) * g[i] * g[i];
    w[i] -= cfg.eta * g[i] / (std::sqrt(v[i]) + cfg.eps_stab);
  }
}

void adam_step(std::span<double> w, std::span<const double> g, std::span<double> m,
               std::span<double> v, std::size_t t, const OptimizerConfig& cfg) {
  if (w.size() != g.size() || m.size() != w.size() || v.size() != w.size()) {
    throw ShapeError("adam_step: size mismatch");
  }
  if (t == 0) throw ConfigError("adam_step: step count is 1-based");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mh = m[i] / c1;
    const double vh = v[i] / c2;
    w[i] -= cfg.eta * mh / (std::sqrt(vh) + cfg.eps_stab);
  }
}

Optimizer::Optimizer(OptimizerConfig cfg, double l2_lambda, FreezeMask freeze)
    : cfg_(cfg), l2_(l2_lambda), freeze_(std::move(freeze)) {
  cfg_.validate();
  if (!(l2_ >= 0.0)) throw ConfigError("optimizer: l2_lambda must be >= 0");
}

void Optimizer::step(Params& params, const Params& grads) {
  ++t_;
  std::size_t slot = 0;
  std::vector<double> g_eff;
  params.for_each_trainable([&](ParamRef ref, Tensor& w) {
    const std::size_t k = slot++;
    if (m_.size() <= k) {
      m_.emplace_back(w.shape());
      v_.emplace_back(w.shape());
    }
    if (freeze_.contains({ref.layer, std::string(ref.name)})) return;
    const Tensor* g = grads.find(ref.name, ref.layer);
    if (g == nullptr || g->empty()) return;
    if (g->size() != w.size()) throw ShapeError("optimizer: gradient/parameter size mismatch");
    std::span<const double> gs = g->data();
    if (l2_ > 0.0 && ref.name == "weight") {
      g_eff.assign(gs.begin(), gs.end());
      for (std::size_t i = 0; i < g_eff.size(); ++i) g_eff[i] += l2_ * w[i];
      gs = g_eff;
    }
    switch (cfg_.kind) {
      case OptimizerKind::sgd: sgd_step(w.data(), gs, cfg_.eta); break;
      case OptimizerKind::rmsprop: rmsprop_step(w.data(), gs, v_[k].data(), cfg_); break;
      case OptimizerKind::adam: adam_step(w.data(), gs, m_[k].data(), v_[k].data(), t_, cfg_); break;
    }
  });
}

}  // namespace ninr
