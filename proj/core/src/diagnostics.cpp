#include "ninr/diagnostics.hpp"

#include <cmath>

#include "ninr/error.hpp"
#include "ninr/loss.hpp"

namespace ninr {

namespace {

void require_nin(const Network& net, const char* what) {
  if (net.attachments().empty() || !net.spec().nin) {
    throw StateError(std::string(what) + ": network has no noise-injection attachment");
  }
}

// Training-mode loss with every attachment shifted by the same eps for all samples.
// Dropout masks come from a fixed stream so that probes differ only in eps.
double probe_loss(const Network& net, const Params& params, const Tensor& batch,
                  const Tensor& labels, double eps) {
  NoiseDraws draws = net.zero_noise(batch.rows());
  for (auto& a : draws) std::fill(a.begin(), a.end(), eps);
  RngStream masks(0);
  ForwardResult fr = net.forward_with_noise(params, batch, draws, masks, Mode::train, false);
  return loss_eval(fr.outputs, labels, net.spec().loss);
}

double eval_loss(const Network& net, const Params& params, const Tensor& batch,
                 const Tensor& labels) {
  RngStream unused(0);
  ForwardResult fr = net.forward_with_noise(params, batch, {}, unused, Mode::eval, false);
  return loss_eval(fr.outputs, labels, net.spec().loss);
}

}  // namespace

double estimate_r1(const Network& net, const Params& params, const Tensor& batch,
                   const Tensor& labels, RngStream& rng) {
  require_nin(net, "estimate_r1");
  const std::size_t n = batch.rows();
  const NoiseDraws eps = net.draw_noise(n, rng);
  double r1 = 0.0;
  for (std::size_t a = 0; a < net.attachments().size(); ++a) {
    const Tensor& w_ni = params.layers[net.attachments()[a].layer].w_ni;
    const Tensor g = net.local_gradient(params, batch, labels, a);
    const std::size_t w = g.row_size();
    std::vector<double> avg(w, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = g.row(i);
      for (std::size_t j = 0; j < w; ++j) avg[j] += eps[a][i] * row[j];
    }
    for (std::size_t j = 0; j < w; ++j) r1 += w_ni[j] * avg[j] / static_cast<double>(n);
  }
  return r1;
}

double estimate_r2(const Network& net, const Params& params, const Tensor& batch,
                   const Tensor& labels, double sigma_eps) {
  require_nin(net, "estimate_r2");
  const double lp = probe_loss(net, params, batch, labels, sigma_eps);
  const double lm = probe_loss(net, params, batch, labels, -sigma_eps);
  const double l0 = probe_loss(net, params, batch, labels, 0.0);
  return (lp + lm - 2.0 * l0) / 2.0;
}

RegularizerEstimates estimate_regularizers(const Network& net, const Params& params,
                                           const Tensor& batch, const Tensor& labels,
                                           RngStream& rng) {
  require_nin(net, "estimate_regularizers");
  RegularizerEstimates est;
  est.batch_size = batch.rows();
  est.sigma_eps = std::sqrt(net.spec().nin->dist.variance());
  est.r1 = estimate_r1(net, params, batch, labels, rng);
  est.r2 = estimate_r2(net, params, batch, labels, est.sigma_eps);
  return est;
}

CurvatureEstimate estimate_input_curvature(const Network& net, const Params& params,
                                           const Tensor& batch, const Tensor& labels,
                                           double sigma_delta, std::size_t n_probes,
                                           RngStream& rng) {
  if (n_probes == 0) throw ConfigError("estimate_input_curvature: n_probes must be >= 1");
  if (!(sigma_delta >= 0.0)) throw ConfigError("estimate_input_curvature: sigma_delta must be >= 0");
  CurvatureEstimate est;
  est.probes = n_probes;
  if (sigma_delta == 0.0) return est;
  const double l0 = eval_loss(net, params, batch, labels);
  double sum = 0.0, sum_sq = 0.0;
  Tensor plus = batch, minus = batch;
  for (std::size_t p = 0; p < n_probes; ++p) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double d = sigma_delta * rng.normal();
      plus[i] = batch[i] + d;
      minus[i] = batch[i] - d;
    }
    const double v = (eval_loss(net, params, plus, labels) + eval_loss(net, params, minus, labels) -
                      2.0 * l0) / 2.0;
    sum += v;
    sum_sq += v * v;
  }
  const double np = static_cast<double>(n_probes);
  est.value = sum / np;
  if (n_probes > 1) {
    const double var = std::max(0.0, (sum_sq - np * est.value * est.value) / (np - 1.0));
    est.std_error = std::sqrt(var / np);
  }
  return est;
}

double sigma_catapult_estimate(std::size_t d_layer, double eta, double c) {
  if (d_layer == 0) throw ConfigError("sigma_catapult_estimate: d_layer must be >= 1");
  if (!(eta > 0.0)) throw ConfigError("sigma_catapult_estimate: eta must be > 0");
  if (std::isinf(eta)) return 0.0;
  return c * static_cast<double>(d_layer) / eta;
}

}  // namespace ninr
