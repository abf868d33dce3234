#include "mlgan/metrics.h"

#include "mlgan/text_format.h"

namespace mlgan {

namespace {

double Ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

PrecisionRecallF1 FromCounts(double tp, double fp, double fn) {
  PrecisionRecallF1 r;
  r.precision = Ratio(tp, tp + fp);
  r.recall = Ratio(tp, tp + fn);
  r.f1 = Ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

void CheckBinary(const Tensor& t, const char* what) {
  for (double v : t.data()) {
    if (v != 0.0 && v != 1.0) {
      throw DomainError(std::string("metrics: ") + what +
                        " must hold 0/1 entries, got " + FormatDouble(v));
    }
  }
}

}  // namespace

ConfusionCounts CountConfusion(const Tensor& preds, const Tensor& truths) {
  if (preds.shape() != truths.shape() || preds.rank() != 2) {
    throw ShapeError("metrics: predictions " + ShapeString(preds.shape()) +
                     " vs truths " + ShapeString(truths.shape()));
  }
  CheckBinary(preds, "predictions");
  CheckBinary(truths, "truths");
  const std::size_t n = preds.rows(), s = preds.cols();
  ConfusionCounts c;
  c.tp.assign(s, 0);
  c.fp.assign(s, 0);
  c.fn.assign(s, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < s; ++l) {
      const bool p = preds.at(i, l) == 1.0, t = truths.at(i, l) == 1.0;
      if (p && t) ++c.tp[l];
      if (p && !t) ++c.fp[l];
      if (!p && t) ++c.fn[l];
    }
  }
  return c;
}

PrecisionRecallF1 MacroPrf1(const ConfusionCounts& counts) {
  PrecisionRecallF1 sum;
  const std::size_t s = counts.num_labels();
  if (s == 0) return sum;
  for (std::size_t l = 0; l < s; ++l) {
    const PrecisionRecallF1 r =
        FromCounts(static_cast<double>(counts.tp[l]),
                   static_cast<double>(counts.fp[l]),
                   static_cast<double>(counts.fn[l]));
    sum.precision += r.precision;
    sum.recall += r.recall;
    sum.f1 += r.f1;
  }
  const double k = static_cast<double>(s);
  return {sum.precision / k, sum.recall / k, sum.f1 / k};
}

PrecisionRecallF1 MicroPrf1(const ConfusionCounts& counts) {
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t l = 0; l < counts.num_labels(); ++l) {
    tp += counts.tp[l];
    fp += counts.fp[l];
    fn += counts.fn[l];
  }
  return FromCounts(static_cast<double>(tp), static_cast<double>(fp),
                    static_cast<double>(fn));
}

double MeanLabels(const Tensor& preds) {
  if (preds.rank() != 2 || preds.rows() == 0) {
    throw Error("mean labels: needs a non-empty (n, |S|) prediction set");
  }
  CheckBinary(preds, "predictions");
  double total = 0.0;
  for (double v : preds.data()) total += v;
  return total / static_cast<double>(preds.rows());
}

MetricReport Evaluate(const Tensor& preds, const Tensor& truths) {
  const ConfusionCounts c = CountConfusion(preds, truths);
  return {MacroPrf1(c), MicroPrf1(c), MeanLabels(preds)};
}

std::string MetricCsvHeader() {
  return "method,C-P,C-R,C-F1,O-P,O-R,O-F1,mean_labels";
}

std::string MetricCsvRow(const std::string& method, const MetricReport& r) {
  std::string row = method;
  for (double v : {r.macro.precision, r.macro.recall, r.macro.f1,
                   r.micro.precision, r.micro.recall, r.micro.f1,
                   r.mean_labels}) {
    row += ',' + FormatFixed(v, 6);
  }
  return row;
}

}  // namespace mlgan
