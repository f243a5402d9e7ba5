#include "ninr/network.hpp"

#include <algorithm>
#include <cmath>

#include "layers.hpp"
#include "ninr/error.hpp"
#include "ninr/loss.hpp"

namespace ninr {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
  }
  return "?";
}

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dropout: return "dropout";
  }
  return "?";
}

std::string_view to_string(LossKind k) {
  return k == LossKind::mse ? "mse" : "cross-entropy";
}

std::string_view to_string(NinTopology t) {
  return t == NinTopology::input_only ? "input-only" : "full";
}

Activation activation_from_string(std::string_view s) {
  if (s == "linear") return Activation::linear;
  if (s == "relu") return Activation::relu;
  if (s == "elu") return Activation::elu;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

LossKind loss_from_string(std::string_view s) {
  if (s == "mse") return LossKind::mse;
  if (s == "cross-entropy" || s == "ce" || s == "cross_entropy") return LossKind::cross_entropy;
  throw ConfigError("unknown loss '" + std::string(s) + "'");
}

NinTopology topology_from_string(std::string_view s) {
  if (s == "input-only" || s == "input" || s == "in") return NinTopology::input_only;
  if (s == "full") return NinTopology::full;
  throw ConfigError("unknown NIN topology '" + std::string(s) + "'");
}

LayerSpec LayerSpec::dense(std::size_t d_in, std::size_t d_out, Activation act, bool bias) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.d_in = d_in;
  s.d_out = d_out;
  s.activation = act;
  s.bias = bias;
  return s;
}

LayerSpec LayerSpec::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh,
                            std::size_t kw, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.activation = act;
  return s;
}

LayerSpec LayerSpec::maxpool(std::size_t h, std::size_t w) {
  LayerSpec s;
  s.kind = LayerKind::maxpool;
  s.pool_h = h;
  s.pool_w = w;
  return s;
}

LayerSpec LayerSpec::batchnorm(std::size_t channels) {
  LayerSpec s;
  s.kind = LayerKind::batchnorm;
  s.channels = channels;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::flatten;
  return s;
}

LayerSpec LayerSpec::dropout(double p) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.p_drop = p;
  return s;
}

// ---------------------------------------------------------------------------
// Params

namespace {

template <class LP, class F>
void visit_layer(std::size_t layer, LP& lp, bool with_state, F&& fn) {
  auto visit = [&](std::string_view name, auto& t) {
    if (!t.empty()) fn(ParamRef{layer, name}, t);
  };
  visit("weight", lp.weight);
  visit("bias", lp.bias);
  visit("w_ni", lp.w_ni);
  visit("gamma", lp.gamma);
  visit("beta", lp.beta);
  if (with_state) {
    visit("running_mean", lp.running_mean);
    visit("running_var", lp.running_var);
  }
}

}  // namespace

void Params::for_each_trainable(const std::function<void(ParamRef, Tensor&)>& fn) {
  for (std::size_t i = 0; i < layers.size(); ++i) visit_layer(i, layers[i], false, fn);
}

void Params::for_each_trainable(const std::function<void(ParamRef, const Tensor&)>& fn) const {
  for (std::size_t i = 0; i < layers.size(); ++i) visit_layer(i, layers[i], false, fn);
}

void Params::for_each_tensor(const std::function<void(ParamRef, const Tensor&)>& fn) const {
  for (std::size_t i = 0; i < layers.size(); ++i) visit_layer(i, layers[i], true, fn);
}

Tensor* Params::find(std::string_view name, std::size_t layer) {
  return const_cast<Tensor*>(std::as_const(*this).find(name, layer));
}

const Tensor* Params::find(std::string_view name, std::size_t layer) const {
  if (layer >= layers.size()) return nullptr;
  const LayerParams& lp = layers[layer];
  if (name == "weight") return &lp.weight;
  if (name == "bias") return &lp.bias;
  if (name == "w_ni") return &lp.w_ni;
  if (name == "gamma") return &lp.gamma;
  if (name == "beta") return &lp.beta;
  if (name == "running_mean") return &lp.running_mean;
  if (name == "running_var") return &lp.running_var;
  return nullptr;
}

bool Params::all_finite() const {
  bool ok = true;
  for_each_tensor([&](ParamRef, const Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

std::size_t Params::trainable_count() const {
  std::size_t n = 0;
  for_each_trainable([&](ParamRef, const Tensor& t) { n += t.size(); });
  return n;
}

double Params::weight_squared_norm() const {
  double s = 0.0;
  for (const auto& lp : layers) s += lp.weight.squared_norm();
  return s;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  if (spec_.layers.empty()) throw ConfigError("network: no layers");
  if (spec_.nin) spec_.nin->dist.validate();
  Shape cur = spec_.input_shape;
  if (cur.empty() || shape_size(cur) == 0) throw ShapeError("network: empty input shape");
  attachment_of_layer_.assign(spec_.layers.size(), -1);
  bool first_injectable = true;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    in_shapes_.push_back(cur);
    const std::string where = "layer " + std::to_string(i) + " (" + std::string(to_string(l.kind)) + ")";
    switch (l.kind) {
      case LayerKind::dense:
        if (shape_size(cur) != l.d_in || l.d_out == 0) {
          throw ShapeError(where + ": input " + shape_string(cur) + " does not match d_in " +
                           std::to_string(l.d_in));
        }
        cur = {l.d_out};
        break;
      case LayerKind::conv2d:
        if (cur.size() != 3 || cur[2] != l.in_ch || cur[0] < l.kernel_h || cur[1] < l.kernel_w ||
            l.out_ch == 0 || l.kernel_h == 0 || l.kernel_w == 0) {
          throw ShapeError(where + ": incompatible with input " + shape_string(cur));
        }
        cur = {cur[0] - l.kernel_h + 1, cur[1] - l.kernel_w + 1, l.out_ch};
        break;
      case LayerKind::maxpool:
        if (cur.size() != 3 || l.pool_h == 0 || l.pool_w == 0 || cur[0] < l.pool_h ||
            cur[1] < l.pool_w) {
          throw ShapeError(where + ": incompatible with input " + shape_string(cur));
        }
        cur = {cur[0] / l.pool_h, cur[1] / l.pool_w, cur[2]};
        break;
      case LayerKind::batchnorm:
        if (cur.back() != l.channels) {
          throw ShapeError(where + ": channel count " + std::to_string(l.channels) +
                           " does not match input " + shape_string(cur));
        }
        break;
      case LayerKind::flatten:
        cur = {shape_size(cur)};
        break;
      case LayerKind::dropout:
        if (!(l.p_drop >= 0.0 && l.p_drop < 1.0)) throw ConfigError(where + ": p_drop must be in [0,1)");
        break;
    }
    out_shapes_.push_back(cur);

    if (spec_.nin && l.injectable() &&
        (first_injectable || spec_.nin->topology == NinTopology::full)) {
      Attachment a;
      a.layer = i;
      a.pixelwise = l.kind == LayerKind::conv2d;
      if (a.pixelwise) {
        a.shape = in_shapes_.back();
        a.fan_in = shape_size(a.shape);
      } else {
        a.shape = {l.d_out};
        a.fan_in = l.d_in + 1;
      }
      attachment_of_layer_[i] = static_cast<int>(attachments_.size());
      attachments_.push_back(std::move(a));
    }
    if (l.injectable()) first_injectable = false;
  }
  if (spec_.loss == LossKind::cross_entropy && shape_size(cur) < 2) {
    throw ShapeError("network: cross-entropy needs at least two outputs");
  }
}

Params Network::zero_params() const {
  Params p;
  p.layers.resize(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    LayerParams& lp = p.layers[i];
    if (l.kind == LayerKind::dense) {
      lp.weight = Tensor({l.d_in, l.d_out});
      if (l.bias) lp.bias = Tensor({l.d_out});
    } else if (l.kind == LayerKind::conv2d) {
      lp.weight = Tensor({l.kernel_h, l.kernel_w, l.in_ch, l.out_ch});
      if (l.bias) lp.bias = Tensor({l.out_ch});
    } else if (l.kind == LayerKind::batchnorm) {
      lp.gamma = Tensor({l.channels}, 1.0);
      lp.beta = Tensor({l.channels});
      lp.running_mean = Tensor({l.channels});
      lp.running_var = Tensor({l.channels}, 1.0);
    }
    if (attachment_of_layer_[i] >= 0) {
      lp.w_ni = Tensor(attachments_[static_cast<std::size_t>(attachment_of_layer_[i])].shape);
    }
  }
  return p;
}

void Network::check_params(const Params& params) const {
  const Params ref = zero_params();
  if (params.layers.size() != ref.layers.size()) {
    throw ShapeError("params: expected " + std::to_string(ref.layers.size()) + " layers, got " +
                     std::to_string(params.layers.size()));
  }
  ref.for_each_tensor([&](ParamRef r, const Tensor& t) {
    const Tensor* have = params.find(r.name, r.layer);
    if (have == nullptr || have->shape() != t.shape()) {
      throw ShapeError("params: layer " + std::to_string(r.layer) + " " + std::string(r.name) +
                       " should have shape " + shape_string(t.shape()));
    }
  });
  params.for_each_tensor([&](ParamRef r, const Tensor& t) {
    const Tensor* want = ref.find(r.name, r.layer);
    if (want == nullptr || want->empty()) {
      throw ShapeError("params: layer " + std::to_string(r.layer) + " has an unexpected " +
                       std::string(r.name) + " tensor " + shape_string(t.shape()));
    }
  });
}

NoiseDraws Network::zero_noise(std::size_t batch) const {
  return NoiseDraws(attachments_.size(), std::vector<double>(batch, 0.0));
}

NoiseDraws Network::draw_noise(std::size_t batch, RngStream& rng) const {
  NoiseDraws eps = zero_noise(batch);
  if (!spec_.nin || attachments_.empty()) return eps;
  const NoiseDistribution& d = spec_.nin->dist;
  if (spec_.nin->shared_eps) {
    for (std::size_t i = 0; i < batch; ++i) {
      const double e = d.draw(rng);
      for (auto& a : eps) a[i] = e;
    }
  } else {
    for (auto& a : eps)
      for (double& e : a) e = d.draw(rng);
  }
  return eps;
}

ForwardResult Network::forward(const Params& params, const Tensor& batch, RngStream& rng,
                               Mode mode) const {
  const std::size_t n = batch.rows();
  NoiseDraws eps = mode == Mode::train ? draw_noise(n, rng) : zero_noise(n);
  return forward_with_noise(params, batch, eps, rng, mode, mode == Mode::train);
}

ForwardResult Network::forward_with_noise(const Params& params, const Tensor& batch,
                                          const NoiseDraws& eps_in, RngStream& rng, Mode mode,
                                          bool keep_cache) const {
  if (batch.rank() == 0 || batch.row_size() != input_width()) {
    throw ShapeError("forward: batch " + shape_string(batch.shape()) +
                     " does not match input shape " + shape_string(spec_.input_shape));
  }
  if (params.layers.size() != spec_.layers.size()) throw ShapeError("forward: params/layers mismatch");
  const std::size_t n = batch.rows();
  NoiseDraws eps = (mode == Mode::eval || eps_in.empty()) ? zero_noise(n) : eps_in;
  if (eps.size() != attachments_.size()) throw ShapeError("forward: noise/attachment count mismatch");
  for (const auto& e : eps) {
    if (e.size() != n) throw ShapeError("forward: noise draws do not match batch size");
  }

  ForwardResult result;
  result.diverged = !params.all_finite();
  ForwardCache cache;
  cache.mode = mode;
  cache.batch = n;
  cache.layers.resize(spec_.layers.size());

  Shape full = {n};
  full.insert(full.end(), spec_.input_shape.begin(), spec_.input_shape.end());
  Tensor x = batch.reshaped(full);
  if (keep_cache) cache.batch_input = x;

  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const LayerParams& p = params.layers[i];
    LayerCache& lc = cache.layers[i];
    const int att = attachment_of_layer_[i];
    switch (l.kind) {
      case LayerKind::dense: {
        detail::DenseShift shift;
        if (att >= 0) shift = {&p.w_ni, &eps[static_cast<std::size_t>(att)]};
        detail::dense_forward(l, p, x, shift, lc);
        break;
      }
      case LayerKind::conv2d: {
        if (att >= 0) {
          const auto& e = eps[static_cast<std::size_t>(att)];
          const std::size_t w = x.row_size();
          for (std::size_t s = 0; s < n; ++s) {
            if (e[s] == 0.0) continue;
            auto row = x.row(s);
            for (std::size_t j = 0; j < w; ++j) row[j] += e[s] * p.w_ni[j];
          }
        }
        detail::conv_forward(l, p, x, lc);
        break;
      }
      case LayerKind::maxpool:
        detail::maxpool_forward(l, x, lc);
        break;
      case LayerKind::batchnorm:
        detail::batchnorm_forward(p, x, mode, lc);
        break;
      case LayerKind::flatten:
        lc.output = x.reshaped({n, x.row_size()});
        break;
      case LayerKind::dropout:
        detail::dropout_forward(l, x, mode, rng, lc);
        break;
    }
    x = lc.output;
    if (!keep_cache) lc = LayerCache{};
  }
  Shape out_shape = {n};
  out_shape.insert(out_shape.end(), out_shapes_.back().begin(), out_shapes_.back().end());
  result.outputs = std::move(x).reshaped(out_shape.size() == 2 ? out_shape : Shape{n, output_width()});
  if (!result.outputs.all_finite()) result.diverged = true;
  if (keep_cache) {
    cache.eps = std::move(eps);
    result.cache = std::move(cache);
  }
  return result;
}

Gradients Network::backward(const Params& params, const ForwardCache& cache,
                            const Tensor& labels) const {
  if (cache.layers.size() != spec_.layers.size() || cache.batch == 0 ||
      cache.layers.back().output.empty()) {
    throw StateError("backward: cache does not come from a forward pass of this network");
  }
  if (labels.rows() != cache.batch) throw StateError("backward: labels do not match cached batch");
  const std::size_t n = cache.batch;
  Tensor outputs = cache.layers.back().output.reshaped({n, output_width()});
  LossGrad lg = loss_with_grad(outputs, labels, spec_.loss);

  Gradients g;
  g.params.layers.resize(spec_.layers.size());
  g.attachment.resize(attachments_.size());
  Tensor grad = std::move(lg.grad);
  for (std::size_t ii = spec_.layers.size(); ii-- > 0;) {
    const LayerSpec& l = spec_.layers[ii];
    const LayerParams& p = params.layers[ii];
    const LayerCache& lc = cache.layers[ii];
    LayerParams& gp = g.params.layers[ii];
    const int att = attachment_of_layer_[ii];
    grad = std::move(grad).reshaped(lc.output.shape());
    switch (l.kind) {
      case LayerKind::dense: {
        const std::vector<double>* eps =
            att >= 0 ? &cache.eps[static_cast<std::size_t>(att)] : nullptr;
        Tensor dz;
        grad = detail::dense_backward(l, p, lc, std::move(grad), eps, gp, att >= 0 ? &dz : nullptr);
        if (att >= 0) g.attachment[static_cast<std::size_t>(att)] = std::move(dz);
        break;
      }
      case LayerKind::conv2d: {
        grad = detail::conv_backward(l, p, lc, std::move(grad), gp);
        if (att >= 0) {
          const auto& e = cache.eps[static_cast<std::size_t>(att)];
          gp.w_ni = Tensor(p.w_ni.shape());
          const std::size_t w = grad.row_size();
          for (std::size_t s = 0; s < n; ++s) {
            if (e[s] == 0.0) continue;
            const auto row = grad.row(s);
            for (std::size_t j = 0; j < w; ++j) gp.w_ni[j] += e[s] * row[j];
          }
          g.attachment[static_cast<std::size_t>(att)] = grad.reshaped({n, w});
        }
        break;
      }
      case LayerKind::maxpool:
        grad = detail::maxpool_backward(lc, grad);
        break;
      case LayerKind::batchnorm:
        grad = detail::batchnorm_backward(p, lc, cache.mode, grad, gp);
        break;
      case LayerKind::flatten:
        break;
      case LayerKind::dropout:
        grad = detail::dropout_backward(lc, cache.mode, grad);
        break;
    }
    if (ii > 0) {
      Shape s = {n};
      s.insert(s.end(), in_shapes_[ii].begin(), in_shapes_[ii].end());
      grad = std::move(grad).reshaped(s);
    }
  }
  Shape s = {n};
  s.insert(s.end(), spec_.input_shape.begin(), spec_.input_shape.end());
  g.input = std::move(grad).reshaped(s);
  return g;
}

Tensor Network::local_gradient(const Params& params, const Tensor& batch, const Tensor& labels,
                               std::size_t attachment) const {
  if (attachment >= attachments_.size()) {
    throw StateError("local_gradient: attachment " + std::to_string(attachment) + " not present");
  }
  RngStream rng(0);
  ForwardResult fr = forward_with_noise(params, batch, zero_noise(batch.rows()), rng,
                                        Mode::train, true);
  Gradients g = backward(params, *fr.cache, labels);
  Tensor local = std::move(g.attachment[attachment]);
  // The batch loss is a mean, so the per-sample gradient is |B| times its share.
  const auto scale = static_cast<double>(batch.rows());
  for (double& v : local.data()) v *= scale;
  return local;
}

void Network::update_running_stats(Params& params, const ForwardCache& cache) const {
  if (cache.mode != Mode::train) return;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (spec_.layers[i].kind != LayerKind::batchnorm) continue;
    LayerParams& lp = params.layers[i];
    const LayerCache& lc = cache.layers[i];
    for (std::size_t c = 0; c < lp.running_mean.size(); ++c) {
      lp.running_mean[c] = kBatchNormMomentum * lp.running_mean[c] +
                           (1.0 - kBatchNormMomentum) * lc.mean[c];
      lp.running_var[c] = kBatchNormMomentum * lp.running_var[c] +
                          (1.0 - kBatchNormMomentum) * lc.batch_var[c];
    }
  }
}

Tensor cnin_apply(const Tensor& x_rep, const Tensor& w_ni, double eps) {
  if (x_rep.shape() != w_ni.shape()) {
    throw ShapeError("cnin_apply: representation " + shape_string(x_rep.shape()) +
                     " vs noise weights " + shape_string(w_ni.shape()));
  }
  Tensor out = x_rep;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += eps * w_ni[i];
  return out;
}

NetworkSpec with_dropout(const NetworkSpec& spec, double p) {
  NetworkSpec out = spec;
  out.layers.clear();
  std::size_t last_injectable = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (spec.layers[i].injectable()) last_injectable = i;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    out.layers.push_back(spec.layers[i]);
    if (!spec.layers[i].injectable() || i == last_injectable) continue;
    // Place dropout after the block's trailing batchnorm/pooling, before the next weights.
    std::size_t j = i + 1;
    while (j < spec.layers.size() && !spec.layers[j].injectable() &&
           spec.layers[j].kind != LayerKind::flatten && spec.layers[j].kind != LayerKind::dropout) {
      out.layers.push_back(spec.layers[j]);
      ++j;
    }
    out.layers.push_back(LayerSpec::dropout(p));
    i = j - 1;
  }
  return out;
}

NetworkSpec without_nin(const NetworkSpec& spec) {
  NetworkSpec out = spec;
  out.nin.reset();
  return out;
}

}  // namespace ninr
