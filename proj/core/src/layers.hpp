#pragma once

// Per-layer forward/backward kernels. Internal to ninr_core.

#include "ninr/network.hpp"

namespace ninr::detail {

void activation_forward(Activation act, const Tensor& pre, Tensor& out);
/// grad <- grad * act'(pre), using out where cheaper.
void activation_backward(Activation act, const Tensor& pre, const Tensor& out, Tensor& grad);

struct DenseShift {
  const Tensor* w_ni = nullptr;
  const std::vector<double>* eps = nullptr;
};

void dense_forward(const LayerSpec& spec, const LayerParams& p, const Tensor& x,
                   const DenseShift& shift, LayerCache& cache);
/// Returns dL/dx; writes parameter grads into g. dz is left in `dz_out` when non-null.
Tensor dense_backward(const LayerSpec& spec, const LayerParams& p, const LayerCache& cache,
                      Tensor grad_out, const std::vector<double>* eps, LayerParams& g,
                      Tensor* dz_out);

void conv_forward(const LayerSpec& spec, const LayerParams& p, const Tensor& x,
                  LayerCache& cache);
Tensor conv_backward(const LayerSpec& spec, const LayerParams& p, const LayerCache& cache,
                     Tensor grad_out, LayerParams& g);

void maxpool_forward(const LayerSpec& spec, const Tensor& x, LayerCache& cache);
Tensor maxpool_backward(const LayerCache& cache, const Tensor& grad_out);

void batchnorm_forward(const LayerParams& p, const Tensor& x, Mode mode, LayerCache& cache);
Tensor batchnorm_backward(const LayerParams& p, const LayerCache& cache, Mode mode,
                          const Tensor& grad_out, LayerParams& g);

void dropout_forward(const LayerSpec& spec, const Tensor& x, Mode mode, RngStream& rng,
                     LayerCache& cache);
Tensor dropout_backward(const LayerCache& cache, Mode mode, const Tensor& grad_out);

}  // namespace ninr::detail
