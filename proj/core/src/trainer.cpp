#include "ninr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "ninr/error.hpp"
#include "ninr/loss.hpp"
#include "ninr/robustness.hpp"

namespace ninr {

void RegularizerConfig::validate() const {
  if (!(l2_lambda >= 0.0)) throw ConfigError("regularizer: l2_lambda must be >= 0");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("regularizer: dropout_p must lie in [0, 1)");
  if (!(cdt_sigma >= 0.0 && cdt_sigma <= 1.0)) throw ConfigError("regularizer: cdt_sigma must lie in [0, 1]");
}

void TrainConfig::validate() const {
  optimizer.validate();
  reg.validate();
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (!(stop_train_acc > 0.0 && stop_train_acc <= 1.0)) {
    throw ConfigError("train: stop_train_acc must lie in (0, 1]");
  }
  if (eval_batch == 0) throw ConfigError("train: eval_batch must be >= 1");
}

Params init_params(const Network& net, RngStream& rng) {
  Params p = net.zero_params();
  const auto& layers = net.spec().layers;
  std::vector<const Attachment*> att(layers.size(), nullptr);
  for (const auto& a : net.attachments()) att[a.layer] = &a;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (!l.injectable()) continue;
    RngStream r = rng.fork(i);
    std::size_t fan_in = l.kind == LayerKind::dense ? l.d_in : l.kernel_h * l.kernel_w * l.in_ch;
    if (att[i] != nullptr && !att[i]->pixelwise) fan_in = att[i]->fan_in;
    const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : p.layers[i].weight.data()) w = r.normal(0.0, sd);
    if (att[i] != nullptr) {
      const double sd_ni = 1.0 / std::sqrt(static_cast<double>(att[i]->fan_in));
      for (double& w : p.layers[i].w_ni.data()) w = r.normal(0.0, sd_ni);
    }
  }
  return p;
}

void cdt_corrupt_batch(Tensor& batch, std::span<const std::size_t> indices, double sigma,
                       const RngStream& rng) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw ConfigError("cdt: sigma must lie in [0, 1]");
  if (indices.size() != batch.rows()) throw ShapeError("cdt: index count does not match batch");
  if (sigma == 0.0) return;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    RngStream s = rng.fork(indices[r]);
    corrupt_row(batch.row(r), sigma, s);
  }
}

EvalResult evaluate(const Network& net, const Params& params, const Dataset& data,
                    std::size_t chunk) {
  EvalResult res;
  const std::size_t n = data.size();
  if (n == 0) throw ConfigError("evaluate: empty dataset");
  if (chunk == 0) chunk = n;
  const bool classify = net.spec().loss == LossKind::cross_entropy;
  RngStream unused(0);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < n; b += chunk) {
    const std::size_t e = std::min(n, b + chunk);
    Tensor x = data.inputs.slice_rows(b, e);
    Tensor y = data.targets.slice_rows(b, e);
    ForwardResult fr = net.forward_with_noise(params, x, {}, unused, Mode::eval, false);
    const double l = loss_with_grad(fr.outputs, y, net.spec().loss).value;
    if (!std::isfinite(l) || fr.diverged) res.finite = false;
    loss_sum += l * static_cast<double>(e - b);
    if (classify) correct += correct_count(fr.outputs, y);
  }
  res.loss = loss_sum / static_cast<double>(n);
  res.accuracy = classify ? static_cast<double>(correct) / static_cast<double>(n) : std::nan("");
  return res;
}

namespace {

// Noise of dataset row `index` comes from stream.fork(index), so a sample's draw does
// not depend on which mini-batch it lands in.
NoiseDraws per_sample_noise(const Network& net, std::span<const std::size_t> idx,
                            const RngStream& stream) {
  NoiseDraws eps = net.zero_noise(idx.size());
  const auto& nin = net.spec().nin;
  if (!nin || eps.empty()) return eps;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    RngStream s = stream.fork(idx[j]);
    if (nin->shared_eps) {
      const double e = nin->dist.draw(s);
      for (auto& a : eps) a[j] = e;
    } else {
      for (auto& a : eps) a[j] = nin->dist.draw(s);
    }
  }
  return eps;
}

void fill_norms(const Network& net, const Params& p, EpochRecord& r) {
  r.niw_norms.clear();
  r.weight_norms.clear();
  for (const auto& a : net.attachments()) r.niw_norms.push_back(p.layers[a.layer].w_ni.norm());
  for (const auto& lp : p.layers) {
    if (!lp.weight.empty()) r.weight_norms.push_back(lp.weight.norm());
  }
}

bool has_dropout(const NetworkSpec& spec) {
  for (const auto& l : spec.layers) {
    if (l.kind == LayerKind::dropout) return true;
  }
  return false;
}

}  // namespace

TrainResult train(const Network& net, const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& cfg, std::optional<Params> initial) {
  cfg.validate();
  train_set.validate();
  if (train_set.size() == 0) throw ConfigError("train: empty training set");
  if (train_set.sample_shape() != net.spec().input_shape &&
      shape_size(train_set.sample_shape()) != net.input_width()) {
    throw ConfigError("train: dataset sample shape " + shape_string(train_set.sample_shape()) +
                      " does not fit network input " + shape_string(net.spec().input_shape));
  }
  if (cfg.reg.dropout_p > 0.0 && !has_dropout(net.spec())) {
    throw ConfigError("train: dropout_p > 0 but the network has no dropout layers");
  }
  const bool classify = net.spec().loss == LossKind::cross_entropy;
  const bool with_test = cfg.evaluate_test && test_set.size() > 0;
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  const RngStream root(cfg.seed);
  TrainResult out;
  if (initial) {
    out.params = std::move(*initial);
  } else {
    RngStream r = root.fork("init");
    out.params = init_params(net, r);
  }
  net.check_params(out.params);
  Params& params = out.params;
  TrainTrace& trace = out.trace;

  const RngStream nin_root = root.fork("nin");
  const RngStream shuffle_root = root.fork("shuffle");
  const RngStream cdt_root = root.fork("cdt");
  const RngStream drop_root = root.fork("dropout");
  const bool once = net.spec().nin && net.spec().nin->resample == NoiseResample::once_before_training;
  const std::size_t n = train_set.size();
  const std::size_t bs = std::min(cfg.batch_size, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  // Training-mode loss and accuracy at initialization, before any update.
  {
    EpochRecord& r = trace.initial;
    const RngStream nin_init = once ? nin_root.fork(std::uint64_t{0}) : nin_root.fork("initial");
    RngStream drop = drop_root.fork("initial");
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < n; b += bs) {
      const std::size_t e = std::min(n, b + bs);
      std::span<const std::size_t> idx(order.data() + b, e - b);
      Tensor x = train_set.inputs.slice_rows(b, e);
      Tensor y = train_set.targets.slice_rows(b, e);
      if (cfg.reg.cdt_sigma > 0.0) cdt_corrupt_batch(x, idx, cfg.reg.cdt_sigma, cdt_root.fork("initial"));
      ForwardResult fr = net.forward_with_noise(params, x, per_sample_noise(net, idx, nin_init), drop,
                                                Mode::train, false);
      loss_sum += loss_with_grad(fr.outputs, y, net.spec().loss).value * static_cast<double>(e - b);
      if (classify) correct += correct_count(fr.outputs, y);
    }
    r.train_loss = loss_sum / static_cast<double>(n);
    r.train_acc = classify ? static_cast<double>(correct) / static_cast<double>(n) : std::nan("");
    if (with_test) {
      EvalResult ev = evaluate(net, params, test_set, cfg.eval_batch);
      r.test_loss = ev.loss;
      r.test_acc = ev.accuracy;
    } else {
      r.test_loss = r.test_acc = std::nan("");
    }
    fill_norms(net, params, r);
  }

  Optimizer opt(cfg.optimizer, cfg.reg.l2_lambda, cfg.freeze_mask);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    RngStream shuffle = shuffle_root.fork(epoch);
    shuffle_indices(order.data(), n, shuffle);
    RngStream drop = drop_root.fork(epoch);
    const RngStream nin_epoch = nin_root.fork(once ? std::uint64_t{0} : epoch);
    const RngStream cdt_epoch = cdt_root.fork(epoch);

    double loss_sum = 0.0;
    std::size_t seen = 0, correct = 0;
    bool diverged = false;
    for (std::size_t b = 0; b < n && !diverged; b += bs) {
      const std::size_t e = std::min(n, b + bs);
      std::span<const std::size_t> idx(order.data() + b, e - b);
      Tensor x = train_set.inputs.gather_rows(idx);
      Tensor y = train_set.targets.gather_rows(idx);
      if (cfg.reg.cdt_sigma > 0.0) cdt_corrupt_batch(x, idx, cfg.reg.cdt_sigma, cdt_epoch);
      ForwardResult fr = net.forward_with_noise(params, x, per_sample_noise(net, idx, nin_epoch), drop,
                                                Mode::train, true);
      const double loss = loss_with_grad(fr.outputs, y, net.spec().loss).value;
      loss_sum += loss * static_cast<double>(e - b);
      seen += e - b;
      if (classify) correct += correct_count(fr.outputs, y);
      if (fr.diverged || !std::isfinite(loss) || loss > kDivergenceLoss) {
        diverged = true;
        break;
      }
      Gradients g = net.backward(params, *fr.cache, y);
      opt.step(params, g.params);
      net.update_running_stats(params, *fr.cache);
      if (!params.all_finite()) diverged = true;
    }

    EpochRecord r;
    r.epoch = epoch;
    r.train_loss = loss_sum / static_cast<double>(seen);
    r.train_acc = classify ? static_cast<double>(correct) / static_cast<double>(seen) : std::nan("");
    if (with_test) {
      EvalResult ev = evaluate(net, params, test_set, cfg.eval_batch);
      r.test_loss = ev.loss;
      r.test_acc = ev.accuracy;
      if (!ev.finite) diverged = true;
    } else {
      r.test_loss = r.test_acc = std::nan("");
    }
    fill_norms(net, params, r);
    r.wall_clock_s = elapsed();
    trace.epochs.push_back(std::move(r));
    if (diverged) {
      trace.diverged = true;
      break;
    }
    if (classify && trace.epochs.back().train_acc >= cfg.stop_train_acc) {
      trace.stopped_early = true;
      break;
    }
  }
  return out;
}

}  // namespace ninr
