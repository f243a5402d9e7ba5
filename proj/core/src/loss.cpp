#include "ninr/loss.hpp"

#include <algorithm>
#include <cmath>

#include "ninr/error.hpp"

namespace ninr {
namespace {

bool is_index_labels(const Tensor& labels, std::size_t n) {
  return labels.rank() == 1 && labels.size() == n;
}

std::size_t label_class(const Tensor& labels, std::size_t i, std::size_t k) {
  if (labels.rank() == 1) {
    const double v = labels[i];
    if (!(v >= 0.0) || v >= static_cast<double>(k) || v != std::floor(v)) {
      throw ShapeError("labels: class index out of range");
    }
    return static_cast<std::size_t>(v);
  }
  const auto row = labels.row(i);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

void check_labels(const Tensor& outputs, const Tensor& labels, LossKind kind) {
  if (outputs.rank() != 2) throw ShapeError("loss: outputs must be n x k");
  const std::size_t n = outputs.dim(0), k = outputs.dim(1);
  if (labels.rows() != n) throw ShapeError("loss: label count does not match batch");
  if (kind == LossKind::mse) {
    if (labels.size() != n * k) {
      throw ShapeError("loss: MSE targets " + shape_string(labels.shape()) + " vs outputs " +
                       shape_string(outputs.shape()));
    }
  } else if (!is_index_labels(labels, n) && labels.size() != n * k) {
    throw ShapeError("loss: cross-entropy labels must be class indices or n x k rows");
  }
}

}  // namespace

LossGrad loss_with_grad(const Tensor& outputs, const Tensor& labels, LossKind kind) {
  check_labels(outputs, labels, kind);
  const std::size_t n = outputs.dim(0), k = outputs.dim(1);
  const double inv_n = 1.0 / static_cast<double>(n);
  LossGrad r;
  r.grad = Tensor(outputs.shape());
  if (kind == LossKind::mse) {
    for (std::size_t i = 0; i < n * k; ++i) {
      const double d = outputs[i] - labels[i];
      r.value += 0.5 * d * d;
      r.grad[i] = d * inv_n;
    }
    r.value *= inv_n;
    return r;
  }
  const bool indices = is_index_labels(labels, n);
  std::vector<double> p(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = outputs.row(i);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p[j] = std::exp(z[j] - zmax);
      denom += p[j];
    }
    const double log_denom = std::log(denom) + zmax;
    auto g = r.grad.row(i);
    if (indices) {
      const std::size_t y = label_class(labels, i, k);
      r.value += log_denom - z[y];
      for (std::size_t j = 0; j < k; ++j) g[j] = p[j] / denom * inv_n;
      g[y] -= inv_n;
    } else {
      const auto t = labels.row(i);
      double tsum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        r.value -= t[j] * (z[j] - log_denom);
        tsum += t[j];
      }
      for (std::size_t j = 0; j < k; ++j) g[j] = (tsum * p[j] / denom - t[j]) * inv_n;
    }
  }
  r.value *= inv_n;
  return r;
}

double loss_eval(const Tensor& outputs, const Tensor& labels, LossKind kind) {
  if (!outputs.all_finite()) throw NumericError("loss: non-finite network output");
  return loss_with_grad(outputs, labels, kind).value;
}

std::vector<double> per_sample_loss(const Tensor& outputs, const Tensor& labels, LossKind kind) {
  check_labels(outputs, labels, kind);
  const std::size_t n = outputs.dim(0);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor o = outputs.slice_rows(i, i + 1);
    Tensor l = labels.slice_rows(i, i + 1);
    out[i] = loss_with_grad(o, l, kind).value;
  }
  return out;
}

std::size_t correct_count(const Tensor& outputs, const Tensor& labels) {
  if (outputs.rank() != 2 || labels.rows() != outputs.dim(0)) {
    throw ShapeError("accuracy: outputs/labels mismatch");
  }
  const std::size_t n = outputs.dim(0), k = outputs.dim(1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = outputs.row(i);
    const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    if (pred == label_class(labels, i, k)) ++correct;
  }
  return correct;
}

double accuracy(const Tensor& outputs, const Tensor& labels) {
  if (outputs.rows() == 0) return 0.0;
  return static_cast<double>(correct_count(outputs, labels)) / static_cast<double>(outputs.rows());
}

}  // namespace ninr
