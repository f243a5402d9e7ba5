#pragma once

#include "ninr/network.hpp"
#include "ninr/tensor.hpp"

namespace ninr {

// Label tensors: for cross-entropy either class indices (rank 1, length n) or
// one-hot/probability rows (n x K); for MSE a target tensor with the output's
// shape (rank 1 is accepted for single-output networks).

/// Batch-mean loss. MSE is 1/(2|B|) * sum of squared errors. Throws NumericError
/// on non-finite outputs and ShapeError on mismatched labels.
double loss_eval(const Tensor& outputs, const Tensor& labels, LossKind kind);

struct LossGrad {
  double value = 0.0;
  Tensor grad;  // d(batch-mean loss)/d(outputs)
};

/// Loss value and output gradient; does not throw on non-finite values.
LossGrad loss_with_grad(const Tensor& outputs, const Tensor& labels, LossKind kind);

/// Per-sample loss values.
std::vector<double> per_sample_loss(const Tensor& outputs, const Tensor& labels,
                                    LossKind kind);

/// Fraction of rows whose argmax matches the label's class.
double accuracy(const Tensor& outputs, const Tensor& labels);
std::size_t correct_count(const Tensor& outputs, const Tensor& labels);

}  // namespace ninr
