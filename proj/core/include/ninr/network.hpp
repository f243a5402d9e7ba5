#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ninr/noise.hpp"
#include "ninr/rng.hpp"
#include "ninr/tensor.hpp"

namespace ninr {

enum class Activation { linear, relu, elu };
enum class LayerKind { dense, conv2d, maxpool, batchnorm, flatten, dropout };
enum class LossKind { mse, cross_entropy };
enum class Mode { train, eval };

std::string_view to_string(Activation a);
std::string_view to_string(LayerKind k);
std::string_view to_string(LossKind k);
Activation activation_from_string(std::string_view s);
LossKind loss_from_string(std::string_view s);

/// One layer of a feed-forward stack. Only the fields of `kind` are meaningful.
///
/// Image tensors are NHWC. Convolutions are stride 1 with no padding; pooling
/// windows do not overlap.
struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  Activation activation = Activation::linear;

  std::size_t d_in = 0, d_out = 0;  // dense
  bool bias = true;                 // dense, conv2d

  std::size_t in_ch = 0, out_ch = 0, kernel_h = 0, kernel_w = 0;  // conv2d
  std::size_t pool_h = 0, pool_w = 0;                             // maxpool
  std::size_t channels = 0;                                       // batchnorm
  double p_drop = 0.0;                                            // dropout

  static LayerSpec dense(std::size_t d_in, std::size_t d_out,
                         Activation act = Activation::linear, bool bias = true);
  static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh,
                          std::size_t kw, Activation act = Activation::linear);
  static LayerSpec maxpool(std::size_t h, std::size_t w);
  static LayerSpec batchnorm(std::size_t channels);
  static LayerSpec flatten();
  static LayerSpec dropout(double p);

  bool injectable() const { return kind == LayerKind::dense || kind == LayerKind::conv2d; }
};

enum class NinTopology { input_only, full };
enum class NoiseResample { per_sample_per_epoch, once_before_training };

std::string_view to_string(NinTopology t);
NinTopology topology_from_string(std::string_view s);

struct NINConfig {
  NinTopology topology = NinTopology::input_only;
  NoiseDistribution dist;
  NoiseResample resample = NoiseResample::per_sample_per_epoch;
  /// full topology only: one epsilon per sample shared by every attachment.
  bool shared_eps = false;
};

struct NetworkSpec {
  Shape input_shape;  // per-sample, e.g. {784} or {28, 28, 1}
  std::vector<LayerSpec> layers;
  LossKind loss = LossKind::cross_entropy;
  std::optional<NINConfig> nin;
};

/// Where a noise-injection node couples into the network.
///
/// Dense layers: the pre-activation is shifted, z -> z + eps * w_ni, with
/// w_ni of shape {d_out}. This is the same as appending eps to the layer input.
/// Conv layers: the layer input is shifted pixel-wise, x -> x + eps * w_ni,
/// with w_ni of the per-sample input shape.
struct Attachment {
  std::size_t layer = 0;
  bool pixelwise = false;
  Shape shape;           // shape of w_ni
  std::size_t fan_in = 0;  // d of the injected layer, counting the noise node
};

/// Trainable tensors and running statistics of one layer. Unused tensors are empty.
struct LayerParams {
  Tensor weight, bias, w_ni;
  Tensor gamma, beta;
  Tensor running_mean, running_var;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct ParamRef {
  std::size_t layer;
  std::string_view name;
};

struct Params {
  std::vector<LayerParams> layers;

  /// Visits trainable tensors (weight, bias, w_ni, gamma, beta) in canonical order.
  void for_each_trainable(const std::function<void(ParamRef, Tensor&)>& fn);
  void for_each_trainable(const std::function<void(ParamRef, const Tensor&)>& fn) const;
  /// Visits every non-empty tensor, running statistics included.
  void for_each_tensor(const std::function<void(ParamRef, const Tensor&)>& fn) const;
  Tensor* find(std::string_view name, std::size_t layer);
  const Tensor* find(std::string_view name, std::size_t layer) const;

  bool all_finite() const;
  std::size_t trainable_count() const;
  /// Sum of squared entries of all weight/kernel tensors (not biases or w_ni).
  double weight_squared_norm() const;

  friend bool operator==(const Params&, const Params&) = default;
};

/// Per-attachment noise values: eps[a][i] is the draw of attachment a for sample i.
using NoiseDraws = std::vector<std::vector<double>>;

struct LayerCache {
  Tensor input;   // layer input after any pixel-wise noise shift
  Tensor pre;     // pre-activation (dense/conv) or normalized input (batchnorm)
  Tensor output;
  Tensor aux;     // im2col matrix (conv) or dropout mask
  std::vector<std::uint32_t> argmax;  // maxpool
  std::vector<double> mean, inv_std;  // batchnorm statistics used in the forward
  std::vector<double> batch_var;
};

struct ForwardCache {
  Mode mode = Mode::train;
  std::size_t batch = 0;
  Tensor batch_input;
  std::vector<LayerCache> layers;
  NoiseDraws eps;
};

struct ForwardResult {
  Tensor outputs;
  std::optional<ForwardCache> cache;
  bool diverged = false;  // non-finite parameter or output encountered
};

struct Gradients {
  Params params;       // same layout as the network Params; running stats empty
  Tensor input;        // dL/dx for the batch input
  std::vector<Tensor> attachment;  // dL/d(shifted representation) per attachment
};

class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const noexcept { return spec_; }
  const std::vector<Attachment>& attachments() const noexcept { return attachments_; }
  const Shape& layer_input_shape(std::size_t i) const { return in_shapes_.at(i); }
  const Shape& layer_output_shape(std::size_t i) const { return out_shapes_.at(i); }
  std::size_t output_width() const { return shape_size(out_shapes_.back()); }
  std::size_t input_width() const { return shape_size(spec_.input_shape); }

  /// Parameters with all tensors zero-initialized (batchnorm gamma/running_var = 1).
  Params zero_params() const;
  /// Throws ShapeError if `params` does not match this network's layout.
  void check_params(const Params& params) const;

  /// Draws fresh noise from the NIN distribution (train mode) and evaluates the batch.
  /// Eval mode forces eps = 0 and skips dropout; batchnorm uses running statistics.
  ForwardResult forward(const Params& params, const Tensor& batch, RngStream& rng,
                        Mode mode) const;
  /// Same as forward() with caller-provided noise. `eps` may be empty (no noise).
  /// `rng` feeds dropout masks only.
  ForwardResult forward_with_noise(const Params& params, const Tensor& batch,
                                   const NoiseDraws& eps, RngStream& rng, Mode mode,
                                   bool keep_cache) const;

  /// Exact reverse-mode gradients of the batch-mean loss.
  Gradients backward(const Params& params, const ForwardCache& cache,
                     const Tensor& labels) const;

  /// Per-sample gradient of the per-sample loss w.r.t. the injected representation of
  /// `attachment`, evaluated with eps = 0. Shape: batch x prod(attachment shape).
  Tensor local_gradient(const Params& params, const Tensor& batch, const Tensor& labels,
                        std::size_t attachment) const;

  /// Folds the batch statistics in `cache` into the running averages (momentum 0.9).
  void update_running_stats(Params& params, const ForwardCache& cache) const;

  NoiseDraws zero_noise(std::size_t batch) const;
  NoiseDraws draw_noise(std::size_t batch, RngStream& rng) const;

  static constexpr double kBatchNormMomentum = 0.9;
  static constexpr double kBatchNormEpsilon = 1e-5;

 private:
  NetworkSpec spec_;
  std::vector<Shape> in_shapes_, out_shapes_;
  std::vector<Attachment> attachments_;
  std::vector<int> attachment_of_layer_;
};

/// Returns x_rep + eps * w_ni element-wise. Throws ShapeError on mismatch.
Tensor cnin_apply(const Tensor& x_rep, const Tensor& w_ni, double eps);

/// Copy of `spec` with Dropout(p) inserted after every hidden dense/conv block.
NetworkSpec with_dropout(const NetworkSpec& spec, double p);
/// Copy of `spec` without noise-injection nodes.
NetworkSpec without_nin(const NetworkSpec& spec);

}  // namespace ninr
