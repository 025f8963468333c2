#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ssvep/dataset.hpp"
#include "ssvep/filterbank.hpp"
#include "ssvep/training.hpp"

namespace ssvep {

// Rows are true classes, columns predictions.
struct ConfusionMatrix {
  int n_classes = 0;
  std::vector<long> counts;

  explicit ConfusionMatrix(int m = 0) : n_classes(m), counts(static_cast<std::size_t>(m) * m, 0) {}
  long& at(int truth, int predicted) { return counts[static_cast<std::size_t>(truth) * n_classes + predicted]; }
  long at(int truth, int predicted) const { return counts[static_cast<std::size_t>(truth) * n_classes + predicted]; }
  long total() const;
  long trace() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

// Bits per minute for accuracy `p` over `m` classes and `seconds` per
// selection, with 0 * log 0 = 0.
double itr_bits_per_min(double p, int m, double seconds);

double accuracy(std::span<const int> predictions, std::span<const int> labels);
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, int m);

struct SubjectResult {
  std::string subject_id;
  std::vector<double> fold_accuracy;         // fine-tuned model, per test block
  std::vector<double> fold_global_accuracy;  // stage-1 model on the same block
  double accuracy = 0.0;
  double global_accuracy = 0.0;
  double itr = 0.0;
};

struct DurationResult {
  double duration_s = 0.0;
  double mean_acc = 0.0;
  double acc_se = 0.0;
  double mean_itr = 0.0;
  double itr_se = 0.0;
  ConfusionMatrix confusion;
  std::vector<SubjectResult> subjects;
};

struct EvalReport {
  int n_classes = 0;
  double gaze_shift_s = 0.5;
  std::vector<DurationResult> rows;
};

struct ProtocolOptions {
  std::vector<double> durations{0.4};
  std::vector<std::string> channels;  // empty: every channel
  FilterBankSpec bank;
  StageConfig stage1 = StageConfig::benchmark_global();
  StageConfig stage2 = StageConfig::benchmark_subject();
  double gaze_shift_s = 0.5;
  int jobs = 1;
  // When set, every trained model is saved here as <T>_fold<k>_<who>.ckpt.
  std::optional<std::filesystem::path> checkpoint_dir;
};

// Sample standard deviation over sqrt(n); 0 for fewer than two values.
double standard_error(std::span<const double> values);

// Leave-one-block-out two-stage evaluation. For every duration and fold the
// global model is retrained on the pooled training blocks, then fine-tuned
// per subject and scored on that subject's held-out block.
EvalReport run_protocol(const std::vector<SsvepArchive>& archives, const ProtocolOptions& options);

std::string report_csv(const EvalReport& report);
std::string confusion_csv(const ConfusionMatrix& cm);
nlohmann::json report_json(const EvalReport& report);

// "setting,mean_acc_pct,acc_se_pct,summary" rows such as
// "9 channels,79.89,2.81,79.89±2.81" at one duration.
std::string accuracy_table_csv(const std::vector<std::pair<std::string, DurationResult>>& rows);

}  // namespace ssvep
