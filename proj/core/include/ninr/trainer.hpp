#pragma once

#include <optional>

#include "ninr/dataset.hpp"
#include "ninr/network.hpp"
#include "ninr/optimizer.hpp"
#include "ninr/trace.hpp"

namespace ninr {

struct RegularizerConfig {
  double l2_lambda = 0.0;
  double dropout_p = 0.0;  // consumed when building the network (see with_dropout)
  double cdt_sigma = 0.0;  // training-time input corruption scale

  void validate() const;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  RegularizerConfig reg;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 500;
  double stop_train_acc = 0.98;
  std::uint64_t seed = 0;
  FreezeMask freeze_mask;
  std::size_t eval_batch = 1000;
  bool evaluate_test = true;

  void validate() const;
};

struct TrainResult {
  Params params;
  TrainTrace trace;
};

/// Weights ~ N(0, 1/fan_in), biases 0, w_ni ~ N(0, 1/fan_in of the injected layer).
/// Dense fan-in counts the noise node when one is attached.
Params init_params(const Network& net, RngStream& rng);

/// Mini-batch training with a fresh shuffle per epoch. Stops at max_epochs, when
/// the epoch's training accuracy reaches stop_train_acc, or on divergence (any
/// non-finite value or a mini-batch loss above kDivergenceLoss), which sets
/// trace.diverged instead of throwing.
TrainResult train(const Network& net, const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& cfg, std::optional<Params> initial = std::nullopt);

/// In-place input corruption x <- sqrt(1 - s^2) x + s * delta, delta ~ N(0, 1),
/// with delta for dataset row `index` drawn from rng.fork(index).
void cdt_corrupt_batch(Tensor& batch, std::span<const std::size_t> indices, double sigma,
                       const RngStream& rng);

inline constexpr double kDivergenceLoss = 1e12;

/// Evaluates loss and accuracy in eval mode over a dataset in chunks.
struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  bool finite = true;
};
EvalResult evaluate(const Network& net, const Params& params, const Dataset& data,
                    std::size_t chunk = 1000);

}  // namespace ninr
