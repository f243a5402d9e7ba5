#pragma once

#include <vector>

#include "ninr/dataset.hpp"

namespace ninr {

enum class StandardizeScope { global, per_pixel };
enum class StandardizeDivisor { std, variance };

struct PreprocessStats {
  StandardizeScope scope = StandardizeScope::global;
  StandardizeDivisor divisor = StandardizeDivisor::std;
  std::vector<double> mean;   // one entry (global) or one per feature
  std::vector<double> scale;  // divisor actually applied, always > 0
  bool degenerate = false;    // some zero-variance scale was forced to 1

  std::size_t features() const { return mean.size(); }
};

/// Mean and population std (or variance) of the training inputs.
PreprocessStats standardize_fit(const Dataset& train, StandardizeScope scope = StandardizeScope::global,
                                StandardizeDivisor divisor = StandardizeDivisor::std);
Tensor standardize_apply(const PreprocessStats& stats, const Tensor& inputs);
Dataset standardize_apply(const PreprocessStats& stats, const Dataset& data);

}  // namespace ninr
