#include "mmtk/metrics.hpp"

#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mmtk::metrics {

namespace {

const std::array<const char*, 3> kTaskLabels = {"mental_demand", "effort",
                                                "temporal_demand"};
const std::array<const char*, 3> kTaskTitles = {"Mental Demand", "Effort",
                                                "Temporal Demand"};

void check_lengths(const std::vector<int>& pred, const std::vector<int>& truth,
                   const char* who) {
  if (pred.empty()) {
    throw std::invalid_argument(std::string(who) + ": empty input");
  }
  if (pred.size() != truth.size()) {
    throw std::invalid_argument(
        std::string(who) + ": length mismatch (" +
        std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) +
        ")");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if ((pred[i] != 0 && pred[i] != 1) || (truth[i] != 0 && truth[i] != 1)) {
      throw std::invalid_argument(std::string(who) +
                                  ": labels must lie in {0,1}");
    }
  }
}

TaskCounts positive_counts(const std::vector<int>& pred,
                           const std::vector<int>& truth) {
  TaskCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && truth[i] == 1) ++c.tp;
    else if (pred[i] == 1 && truth[i] == 0) ++c.fp;
    else if (pred[i] == 0 && truth[i] == 1) ++c.fn;
    else ++c.tn;
  }
  return c;
}

}  // namespace

std::vector<int> binarize(const std::vector<float>& probs, float threshold) {
  std::vector<int> labels(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    labels[i] = probs[i] >= threshold ? 1 : 0;
  }
  return labels;
}

double weighted_f1(const std::vector<int>& pred,
                   const std::vector<int>& truth) {
  check_lengths(pred, truth, "weighted_f1");
  double acc = 0.0;
  for (int cls = 0; cls <= 1; ++cls) {
    long tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred[i] == cls, t = truth[i] == cls;
      if (t) ++support;
      if (p && t) ++tp;
      else if (p && !t) ++fp;
      else if (!p && t) ++fn;
    }
    const long denom = 2 * tp + fp + fn;
    const double f1 =
        denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    acc += static_cast<double>(support) * f1;
  }
  return acc / static_cast<double>(pred.size());
}

double global_micro_f1(const std::array<std::vector<int>, 3>& preds,
                       const std::array<std::vector<int>, 3>& trues,
                       bool* zero_denominator) {
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    check_lengths(preds[k], trues[k], "global_micro_f1");
    if (preds[k].size() != preds[0].size()) {
      throw std::invalid_argument(
          "global_micro_f1: task lengths differ across tasks");
    }
    const TaskCounts c = positive_counts(preds[k], trues[k]);
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
  }
  if (zero_denominator != nullptr) *zero_denominator = false;
  const long denom = 2 * tp + fp + fn;
  if (denom == 0) {
    if (zero_denominator != nullptr) *zero_denominator = true;
    return 0.0;
  }
  return 2.0 * static_cast<double>(tp) / denom;
}

MetricsReport compute_report(const std::array<std::vector<float>, 3>& probs,
                             const std::array<std::vector<int>, 3>& labels,
                             double threshold) {
  MetricsReport r;
  r.threshold = threshold;
  std::array<std::vector<int>, 3> preds;
  for (std::size_t k = 0; k < 3; ++k) {
    preds[k] = binarize(probs[k], static_cast<float>(threshold));
    r.task_f1[k] = weighted_f1(preds[k], labels[k]);
    r.counts[k] = positive_counts(preds[k], labels[k]);
  }
  r.sample_count = labels[0].size();
  r.global_f1 = global_micro_f1(preds, labels, &r.zero_denominator_warning);
  return r;
}

std::string report_text(const MetricsReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "samples: " << r.sample_count << "\n";
  out << "threshold: " << r.threshold << "\n";
  out << "global_micro_f1: " << r.global_f1 << "\n";
  for (std::size_t k = 0; k < 3; ++k) {
    out << kTaskLabels[k] << "_weighted_f1: " << r.task_f1[k] << "\n";
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const TaskCounts& c = r.counts[k];
    out << kTaskLabels[k] << "_counts: tp=" << c.tp << " fp=" << c.fp
        << " fn=" << c.fn << " tn=" << c.tn << "\n";
  }
  if (r.zero_denominator_warning) {
    out << "warning: global micro F1 denominator was zero (no positive "
           "labels or predictions); reported 0\n";
  }
  // summary row in report column order
  out << "F1 | Global: " << r.global_f1;
  for (std::size_t k = 0; k < 3; ++k) {
    out << " | " << kTaskTitles[k] << ": " << r.task_f1[k];
  }
  out << "\n";
  return out.str();
}

std::string report_json(const MetricsReport& r) {
  nlohmann::json j;
  j["samples"] = r.sample_count;
  j["threshold"] = r.threshold;
  j["global_micro_f1"] = r.global_f1;
  j["zero_denominator_warning"] = r.zero_denominator_warning;
  for (std::size_t k = 0; k < 3; ++k) {
    nlohmann::json t;
    t["weighted_f1"] = r.task_f1[k];
    t["tp"] = r.counts[k].tp;
    t["fp"] = r.counts[k].fp;
    t["fn"] = r.counts[k].fn;
    t["tn"] = r.counts[k].tn;
    j["tasks"][kTaskLabels[k]] = t;
  }
  return j.dump(2) + "\n";
}

}  // namespace mmtk::metrics
