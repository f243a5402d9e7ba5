#include "layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ninr/error.hpp"

namespace ninr::detail {

void activation_forward(Activation act, const Tensor& pre, Tensor& out) {
  out = pre;
  auto d = out.data();
  switch (act) {
    case Activation::linear: break;
    case Activation::relu:
      for (double& v : d) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::elu:
      for (double& v : d) v = v > 0.0 ? v : std::expm1(v);
      break;
  }
}

void activation_backward(Activation act, const Tensor& pre, const Tensor& out, Tensor& grad) {
  auto g = grad.data();
  const auto z = pre.data();
  switch (act) {
    case Activation::linear: break;
    case Activation::relu:
      // Subgradient convention: derivative 0 at z == 0.
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = z[i] > 0.0 ? g[i] : 0.0;
      break;
    case Activation::elu: {
      const auto y = out.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= z[i] > 0.0 ? 1.0 : y[i] + 1.0;
      break;
    }
  }
}

void dense_forward(const LayerSpec& spec, const LayerParams& p, const Tensor& x,
                   const DenseShift& shift, LayerCache& cache) {
  const std::size_t n = x.rows();
  if (x.row_size() != spec.d_in) {
    throw ShapeError("dense: expected " + std::to_string(spec.d_in) + " inputs per sample, got " +
                     std::to_string(x.row_size()));
  }
  cache.input = x;
  Tensor z({n, spec.d_out});
  kernels::gemm_nn(n, spec.d_out, spec.d_in, x.data().data(), p.weight.data().data(),
                   z.data().data());
  if (spec.bias) {
    for (std::size_t i = 0; i < n; ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < spec.d_out; ++j) row[j] += p.bias[j];
    }
  }
  if (shift.w_ni != nullptr && shift.eps != nullptr) {
    for (std::size_t i = 0; i < n; ++i) {
      const double e = (*shift.eps)[i];
      if (e == 0.0) continue;
      auto row = z.row(i);
      for (std::size_t j = 0; j < spec.d_out; ++j) row[j] += e * (*shift.w_ni)[j];
    }
  }
  activation_forward(spec.activation, z, cache.output);
  cache.pre = std::move(z);
}

Tensor dense_backward(const LayerSpec& spec, const LayerParams& p, const LayerCache& cache,
                      Tensor grad_out, const std::vector<double>* eps, LayerParams& g,
                      Tensor* dz_out) {
  const std::size_t n = cache.input.rows();
  Tensor dz = std::move(grad_out).reshaped({n, spec.d_out});
  activation_backward(spec.activation, cache.pre, cache.output, dz);

  g.weight = Tensor({spec.d_in, spec.d_out});
  kernels::gemm_tn(spec.d_in, spec.d_out, n, cache.input.data().data(), dz.data().data(),
                   g.weight.data().data());
  if (spec.bias) {
    g.bias = Tensor({spec.d_out});
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = dz.row(i);
      for (std::size_t j = 0; j < spec.d_out; ++j) g.bias[j] += row[j];
    }
  }
  if (eps != nullptr) {
    g.w_ni = Tensor({spec.d_out});
    for (std::size_t i = 0; i < n; ++i) {
      const double e = (*eps)[i];
      if (e == 0.0) continue;
      const auto row = dz.row(i);
      for (std::size_t j = 0; j < spec.d_out; ++j) g.w_ni[j] += e * row[j];
    }
  }
  Tensor dx(cache.input.shape());
  kernels::gemm_nt(n, spec.d_in, spec.d_out, dz.data().data(), p.weight.data().data(),
                   dx.data().data());
  if (dz_out != nullptr) *dz_out = std::move(dz);
  return dx;
}

namespace {

struct ConvGeom {
  std::size_t n, h, w, c, kh, kw, oh, ow, oc;
  std::size_t patch() const { return kh * kw * c; }
};

ConvGeom conv_geom(const LayerSpec& spec, const Shape& in) {
  if (in.size() != 4 || in[3] != spec.in_ch) {
    throw ShapeError("conv2d: expected NHWC input with " + std::to_string(spec.in_ch) +
                     " channels, got " + shape_string(in));
  }
  if (in[1] < spec.kernel_h || in[2] < spec.kernel_w) {
    throw ShapeError("conv2d: kernel larger than input " + shape_string(in));
  }
  return {in[0], in[1], in[2], in[3], spec.kernel_h, spec.kernel_w,
          in[1] - spec.kernel_h + 1, in[2] - spec.kernel_w + 1, spec.out_ch};
}

}  // namespace

void conv_forward(const LayerSpec& spec, const LayerParams& p, const Tensor& x,
                  LayerCache& cache) {
  const ConvGeom g = conv_geom(spec, x.shape());
  const std::size_t rows = g.n * g.oh * g.ow;
  const std::size_t patch = g.patch();
  Tensor cols({rows, patch});
  double* out = cols.data().data();
  const double* in = x.data().data();
  for (std::size_t b = 0; b < g.n; ++b) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const double* src = in + ((b * g.h + oy + ky) * g.w + ox) * g.c;
          std::copy_n(src, g.kw * g.c, out);
          out += g.kw * g.c;
        }
      }
    }
  }
  Tensor z({g.n, g.oh, g.ow, g.oc});
  kernels::gemm_nn(rows, g.oc, patch, cols.data().data(), p.weight.data().data(),
                   z.data().data());
  if (spec.bias) {
    double* zd = z.data().data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t o = 0; o < g.oc; ++o) zd[r * g.oc + o] += p.bias[o];
  }
  cache.input = x;
  cache.aux = std::move(cols);
  activation_forward(spec.activation, z, cache.output);
  cache.pre = std::move(z);
}

Tensor conv_backward(const LayerSpec& spec, const LayerParams& p, const LayerCache& cache,
                     Tensor grad_out, LayerParams& gp) {
  const ConvGeom g = conv_geom(spec, cache.input.shape());
  const std::size_t rows = g.n * g.oh * g.ow;
  const std::size_t patch = g.patch();
  Tensor dz = std::move(grad_out).reshaped({g.n, g.oh, g.ow, g.oc});
  activation_backward(spec.activation, cache.pre, cache.output, dz);

  gp.weight = Tensor(p.weight.shape());
  kernels::gemm_tn(patch, g.oc, rows, cache.aux.data().data(), dz.data().data(),
                   gp.weight.data().data());
  if (spec.bias) {
    gp.bias = Tensor({g.oc});
    const double* d = dz.data().data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t o = 0; o < g.oc; ++o) gp.bias[o] += d[r * g.oc + o];
  }
  Tensor dcols({rows, patch});
  kernels::gemm_nt(rows, patch, g.oc, dz.data().data(), p.weight.data().data(),
                   dcols.data().data());
  Tensor dx(cache.input.shape());
  double* dst = dx.data().data();
  const double* src = dcols.data().data();
  for (std::size_t b = 0; b < g.n; ++b) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          double* d = dst + ((b * g.h + oy + ky) * g.w + ox) * g.c;
          for (std::size_t t = 0; t < g.kw * g.c; ++t) d[t] += src[t];
          src += g.kw * g.c;
        }
      }
    }
  }
  return dx;
}

void maxpool_forward(const LayerSpec& spec, const Tensor& x, LayerCache& cache) {
  const Shape& in = x.shape();
  if (in.size() != 4) throw ShapeError("maxpool: expected NHWC input, got " + shape_string(in));
  const std::size_t n = in[0], h = in[1], w = in[2], c = in[3];
  const std::size_t oh = h / spec.pool_h, ow = w / spec.pool_w;
  if (oh == 0 || ow == 0) throw ShapeError("maxpool: window larger than input");
  Tensor out({n, oh, ow, c});
  cache.argmax.assign(out.size(), 0);
  const double* src = x.data().data();
  double* dst = out.data().data();
  std::size_t k = 0;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        for (std::size_t ch = 0; ch < c; ++ch, ++k) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t py = 0; py < spec.pool_h; ++py) {
            for (std::size_t px = 0; px < spec.pool_w; ++px) {
              const std::size_t idx =
                  ((b * h + oy * spec.pool_h + py) * w + ox * spec.pool_w + px) * c + ch;
              if (src[idx] > best || (py == 0 && px == 0)) {
                best = src[idx];
                best_idx = idx;
              }
            }
          }
          dst[k] = best;
          cache.argmax[k] = static_cast<std::uint32_t>(best_idx);
        }
      }
    }
  }
  cache.input = x;
  cache.output = std::move(out);
}

Tensor maxpool_backward(const LayerCache& cache, const Tensor& grad_out) {
  Tensor dx(cache.input.shape());
  for (std::size_t k = 0; k < grad_out.size(); ++k) dx[cache.argmax[k]] += grad_out[k];
  return dx;
}

void batchnorm_forward(const LayerParams& p, const Tensor& x, Mode mode, LayerCache& cache) {
  const std::size_t c = p.gamma.size();
  if (x.shape().back() != c) throw ShapeError("batchnorm: channel count mismatch");
  const std::size_t m = x.size() / c;
  cache.mean.assign(c, 0.0);
  cache.inv_std.assign(c, 0.0);
  cache.batch_var.assign(c, 0.0);
  const double* src = x.data().data();
  if (mode == Mode::train) {
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t ch = 0; ch < c; ++ch) cache.mean[ch] += src[r * c + ch];
    for (double& v : cache.mean) v /= static_cast<double>(m);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double d = src[r * c + ch] - cache.mean[ch];
        cache.batch_var[ch] += d * d;
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      cache.batch_var[ch] /= static_cast<double>(m);
      cache.inv_std[ch] = 1.0 / std::sqrt(cache.batch_var[ch] + Network::kBatchNormEpsilon);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      cache.mean[ch] = p.running_mean[ch];
      cache.inv_std[ch] = 1.0 / std::sqrt(p.running_var[ch] + Network::kBatchNormEpsilon);
    }
  }
  Tensor xhat(x.shape());
  Tensor out(x.shape());
  double* xh = xhat.data().data();
  double* y = out.data().data();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t i = r * c + ch;
      xh[i] = (src[i] - cache.mean[ch]) * cache.inv_std[ch];
      y[i] = p.gamma[ch] * xh[i] + p.beta[ch];
    }
  }
  cache.pre = std::move(xhat);
  cache.output = std::move(out);
}

Tensor batchnorm_backward(const LayerParams& p, const LayerCache& cache, Mode mode,
                          const Tensor& grad_out, LayerParams& g) {
  const std::size_t c = p.gamma.size();
  const std::size_t m = grad_out.size() / c;
  g.gamma = Tensor({c});
  g.beta = Tensor({c});
  const double* dy = grad_out.data().data();
  const double* xh = cache.pre.data().data();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      g.gamma[ch] += dy[r * c + ch] * xh[r * c + ch];
      g.beta[ch] += dy[r * c + ch];
    }
  }
  Tensor dx(grad_out.shape());
  double* out = dx.data().data();
  if (mode == Mode::eval) {
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t ch = 0; ch < c; ++ch)
        out[r * c + ch] = dy[r * c + ch] * p.gamma[ch] * cache.inv_std[ch];
    return dx;
  }
  // d xhat = dy * gamma; dx = inv_std/m * (m*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat))
  const auto md = static_cast<double>(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t i = r * c + ch;
      const double sum_dxhat = g.beta[ch] * p.gamma[ch];
      const double sum_dxhat_xhat = g.gamma[ch] * p.gamma[ch];
      out[i] = cache.inv_std[ch] / md *
               (md * dy[i] * p.gamma[ch] - sum_dxhat - xh[i] * sum_dxhat_xhat);
    }
  }
  return dx;
}

void dropout_forward(const LayerSpec& spec, const Tensor& x, Mode mode, RngStream& rng,
                     LayerCache& cache) {
  if (mode == Mode::eval || spec.p_drop == 0.0) {
    cache.output = x;
    cache.aux = Tensor();
    return;
  }
  const double keep = 1.0 - spec.p_drop;
  Tensor mask(x.shape());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
    out[i] = x[i] * mask[i];
  }
  cache.aux = std::move(mask);
  cache.output = std::move(out);
}

Tensor dropout_backward(const LayerCache& cache, Mode mode, const Tensor& grad_out) {
  if (mode == Mode::eval || cache.aux.empty()) return grad_out;
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * cache.aux[i];
  return dx;
}

}  // namespace ninr::detail
