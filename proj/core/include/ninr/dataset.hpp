#pragma once

#include <span>
#include <string>

#include "ninr/tensor.hpp"

namespace ninr {

/// In-memory labelled data. `inputs` is n x (per-sample shape); `targets` holds
/// class indices (rank 1) for classification or n x k regression targets.
struct Dataset {
  std::string name;
  Tensor inputs;
  Tensor targets;
  std::size_t n_classes = 0;  // 0 for regression

  std::size_t size() const { return inputs.empty() ? 0 : inputs.rows(); }
  Shape sample_shape() const { return Shape(inputs.shape().begin() + 1, inputs.shape().end()); }
  Dataset slice(std::size_t begin, std::size_t end) const;
  Dataset gather(std::span<const std::size_t> indices) const;
  /// Throws ShapeError/ConfigError when sizes or label ranges are inconsistent.
  void validate() const;
};

}  // namespace ninr
