#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ninr/network.hpp"

namespace ninr {

enum class OptimizerKind { sgd, rmsprop, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double eta = 0.05;
  double rho = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stab = 1e-7;

  void validate() const;
};

/// Parameters held fixed during training, addressed as (layer, tensor name).
using FreezeMask = std::set<std::pair<std::size_t, std::string>>;

// Element-wise update rules on flat buffers.
void sgd_step(std::span<double> w, std::span<const double> g, double eta);
void rmsprop_step(std::span<double> w, std::span<const double> g, std::span<double> v,
                  const OptimizerConfig& cfg);
/// `t` is the 1-based step count used for bias correction.
void adam_step(std::span<double> w, std::span<const double> g, std::span<double> m,
               std::span<double> v, std::size_t t, const OptimizerConfig& cfg);

/// Stateful optimizer over a Params layout. Weight decay adds l2_lambda * W to the
/// gradient of every weight/kernel tensor (biases, w_ni and batchnorm affine excluded).
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, double l2_lambda = 0.0, FreezeMask freeze = {});

  void step(Params& params, const Params& grads);
  std::size_t steps() const noexcept { return t_; }
  const OptimizerConfig& config() const noexcept { return cfg_; }

 private:
  OptimizerConfig cfg_;
  double l2_;
  FreezeMask freeze_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace ninr
