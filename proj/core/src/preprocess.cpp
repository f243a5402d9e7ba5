#include "ninr/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "ninr/error.hpp"

namespace ninr {

PreprocessStats standardize_fit(const Dataset& train, StandardizeScope scope,
                                StandardizeDivisor divisor) {
  if (train.size() == 0) throw ConfigError("standardize_fit: empty training set");
  PreprocessStats st;
  st.scope = scope;
  st.divisor = divisor;
  const std::size_t n = train.size();
  const std::size_t d = train.inputs.row_size();
  const std::size_t f = scope == StandardizeScope::global ? 1 : d;
  std::vector<double> sum(f, 0.0), sq(f, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = train.inputs.row(i);
    for (std::size_t j = 0; j < d; ++j) sum[f == 1 ? 0 : j] += row[j];
  }
  const double count = static_cast<double>(f == 1 ? n * d : n);
  st.mean.resize(f);
  for (std::size_t k = 0; k < f; ++k) st.mean[k] = sum[k] / count;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = train.inputs.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t k = f == 1 ? 0 : j;
      const double c = row[j] - st.mean[k];
      sq[k] += c * c;
    }
  }
  st.scale.resize(f);
  for (std::size_t k = 0; k < f; ++k) {
    const double var = sq[k] / count;
    const double sd = std::sqrt(var);
    double s = divisor == StandardizeDivisor::std ? sd : var;
    // Rounding leaves a tiny nonzero spread on constant features.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(st.mean[k]))) || !std::isfinite(s)) {
      s = 1.0;
      st.degenerate = true;
    }
    st.scale[k] = s;
  }
  return st;
}

Tensor standardize_apply(const PreprocessStats& stats, const Tensor& inputs) {
  if (stats.mean.empty() || stats.mean.size() != stats.scale.size()) {
    throw ConfigError("standardize_apply: statistics are not fitted");
  }
  Tensor out = inputs;
  if (out.empty()) return out;
  const std::size_t d = out.row_size();
  const bool global = stats.features() == 1;
  if (!global && stats.features() != d) {
    throw ShapeError("standardize_apply: statistics cover " + std::to_string(stats.features()) +
                     " features, data has " + std::to_string(d));
  }
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t k = global ? 0 : j;
      row[j] = (row[j] - stats.mean[k]) / stats.scale[k];
    }
  }
  return out;
}

Dataset standardize_apply(const PreprocessStats& stats, const Dataset& data) {
  Dataset out = data;
  out.inputs = standardize_apply(stats, data.inputs);
  return out;
}

}  // namespace ninr
