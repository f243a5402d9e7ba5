#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ninr {

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the state at initialization
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_acc = 0.0;  // running accuracy of the training-mode forward passes
  double test_acc = 0.0;   // eval mode (eps = 0)
  std::vector<double> niw_norms;     // L2 norm of w_ni, one per attachment
  std::vector<double> weight_norms;  // L2 norm of each weight/kernel tensor
  double wall_clock_s = 0.0;
};

/// Per-epoch history of one training run.
///
/// CSV header (one row per completed epoch, no timing columns so that reruns
/// are byte-identical; the initial state is in the JSON form only):
///   epoch,train_loss,test_loss,train_acc,test_acc,niw_norm_0..,w_norm_0..,diverged
/// JSON: {"initial": record, "epochs": [record...], "diverged": bool,
///        "stopped_early": bool, "diagnostics": {key: value}}
struct TrainTrace {
  EpochRecord initial;
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  bool stopped_early = false;  // reached the target training accuracy
  std::vector<std::pair<std::string, double>> diagnostics;

  void set_diagnostic(const std::string& key, double value);
  double total_wall_clock() const;

  std::string to_csv() const;
  std::string to_json() const;
  static TrainTrace from_json(const std::string& text);

  void write_csv(const std::filesystem::path& path) const;
  void write_json(const std::filesystem::path& path) const;
  static TrainTrace read_json(const std::filesystem::path& path);
};

/// Shortest round-trip decimal form used by every CSV/JSON writer in the project.
std::string format_double(double v);

}  // namespace ninr
