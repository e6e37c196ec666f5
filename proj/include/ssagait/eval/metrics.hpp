#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssagait/core.hpp"

namespace ssagait::eval {

/// Counts with rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  explicit ConfusionMatrix(int classes = kNumEmotions);
  explicit ConfusionMatrix(Counts counts);

  int classes() const { return static_cast<int>(counts_.rows()); }
  void add(int truth, int predicted, std::int64_t n = 1);
  std::int64_t total() const { return counts_.sum(); }
  std::int64_t operator()(int truth, int predicted) const { return counts_(truth, predicted); }
  const Counts& counts() const { return counts_; }

  static ConfusionMatrix from_predictions(const std::vector<int>& truth, const std::vector<int>& predicted,
                                          int classes = kNumEmotions);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  Counts counts_;
};

enum class F1Mode {
  kWeighted,       // sum_i w_i F1_i
  kUnweightedSum,  // sum_i F1_i, may exceed 1
};

struct MetricsReport {
  double accuracy = 0;
  double precision = 0;  // w-weighted
  double recall = 0;     // w-weighted
  double f1 = 0;
  F1Mode f1_mode = F1Mode::kWeighted;
  std::vector<double> class_precision;
  std::vector<double> class_recall;
  std::vector<double> class_f1;
  std::vector<double> weights;  // true-class proportions
  ConfusionMatrix confusion;
};

/// Accuracy = trace / total; precision, recall and F1 are averaged with
/// weights w_i = support_i / total. A ratio with a zero denominator is 0.
MetricsReport compute_metrics(const ConfusionMatrix& cm, F1Mode f1_mode = F1Mode::kWeighted);

/// Plain-text report: headline metrics, per-class table, confusion matrix.
std::string to_text(const MetricsReport& report);

}  // namespace ssagait::eval
