#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

// Classification metrics over the three task branches: per-task weighted F1
// (class-support weights over {0,1}) and a global micro-averaged F1 that
// pools positive-class counts across all tasks.

namespace mmtk::metrics {

// label = 1 iff prob >= threshold
std::vector<int> binarize(const std::vector<float>& probs,
                          float threshold = 0.5f);

// Per-class F1 over classes {0,1} averaged with class-support weights; a
// class with zero support contributes weight 0, and a class F1 with a zero
// denominator is defined as 0. Throws on empty or mismatched inputs.
double weighted_f1(const std::vector<int>& pred, const std::vector<int>& truth);

// 2*sum(TP) / (2*sum(TP) + sum(FP) + sum(FN)) with positive-class counts
// pooled over the three tasks. A zero denominator (no positives anywhere in
// pred or truth) yields 0 and sets *zero_denominator when provided.
double global_micro_f1(const std::array<std::vector<int>, 3>& preds,
                       const std::array<std::vector<int>, 3>& trues,
                       bool* zero_denominator = nullptr);

// positive-class confusion counts for one task
struct TaskCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricsReport {
  double global_f1 = 0.0;
  std::array<double, 3> task_f1{};  // (mental_demand, effort, temporal_demand)
  std::array<TaskCounts, 3> counts{};
  double threshold = 0.5;
  std::size_t sample_count = 0;
  bool zero_denominator_warning = false;
};

// Binarizes probabilities at the threshold and assembles the full report.
MetricsReport compute_report(const std::array<std::vector<float>, 3>& probs,
                             const std::array<std::vector<int>, 3>& labels,
                             double threshold = 0.5);

// key: value lines, column order (Global, Mental Demand, Effort,
// Temporal Demand)
std::string report_text(const MetricsReport& r);
// machine-readable JSON mirroring MetricsReport
std::string report_json(const MetricsReport& r);

}  // namespace mmtk::metrics
