#ifndef MLGAN_METRICS_H_
#define MLGAN_METRICS_H_

// Multi-label precision / recall / F1. Prediction and truth sets are
// (n, |S|) tensors of exact 0/1 entries. Every 0/0 ratio is taken as 0.

#include <cstdint>
#include <string>
#include <vector>

#include "mlgan/tensor.h"

namespace mlgan {

struct ConfusionCounts {
  std::vector<std::int64_t> tp, fp, fn;  // one entry per label

  std::size_t num_labels() const { return tp.size(); }
  friend bool operator==(const ConfusionCounts&,
                         const ConfusionCounts&) = default;
};

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricReport {
  PrecisionRecallF1 macro;  // C-P, C-R, C-F1
  PrecisionRecallF1 micro;  // O-P, O-R, O-F1
  double mean_labels = 0.0;
};

// Throws ShapeError on differing shapes, DomainError on non-binary entries.
ConfusionCounts CountConfusion(const Tensor& preds, const Tensor& truths);

// Per-label ratios averaged uniformly; f1 is the mean of per-label F1.
PrecisionRecallF1 MacroPrf1(const ConfusionCounts& counts);
// Ratios of counts pooled over labels.
PrecisionRecallF1 MicroPrf1(const ConfusionCounts& counts);

// Mean number of positive labels per row. Throws on an empty set.
double MeanLabels(const Tensor& preds);

MetricReport Evaluate(const Tensor& preds, const Tensor& truths);

std::string MetricCsvHeader();
// method,C-P,C-R,C-F1,O-P,O-R,O-F1,mean_labels with 6 decimals.
std::string MetricCsvRow(const std::string& method, const MetricReport& r);

}  // namespace mlgan

#endif  // MLGAN_METRICS_H_
