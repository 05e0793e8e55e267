#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "see/data.hpp"
#include "see/inference.hpp"
#include "see/model.hpp"

namespace see {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

Confusion confusion(std::span<const int> predictions, std::span<const int> labels);
double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Unweighted mean of the F1 scores of class 0 and class 1. A class whose F1
// denominator is zero contributes 0.
double macro_f1(std::span<const int> predictions, std::span<const int> labels);

// Mann-Whitney AUC from average ranks; tied scores earn half credit. Throws
// DataError when only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double auc = 0.0;
  Confusion counts;
  std::size_t n = 0;
};

// Binarizes scores at 0.5 and computes all three metrics.
MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels);
MetricsReport evaluate(std::span<const InferenceTrace> traces);

struct SweepPoint {
  double tau = 0.0;
  double accuracy = 0.0;
  double termination_ratio = 0.0;
  std::vector<std::size_t> exit_histogram;
};

struct SweepCurve {
  std::vector<SweepPoint> points;
  double best_tau = 0.0;
  double best_accuracy = 0.0;
};

// 0.50, 0.51, ..., 0.95.
std::vector<double> default_tau_grid();
std::vector<double> tau_grid(double lo, double hi, double step);

// Runs batch_infer for each tau (strictly increasing, within [0, 1]) and
// picks the most accurate one; ties go to the smaller tau.
SweepCurve sweep_tau(std::span<const Sample> samples, const Model& model, std::span<const double> grid,
                     unsigned threads = 1);

// Whitespace-separated columns: tau accuracy termination_ratio hist_1..hist_N fallback
void write_curve(std::ostream& out, const SweepCurve& curve);

// Best thresholds reported for the four public benchmarks with BERT
// embeddings. Kept for reference; desk-scale synthetic runs do not
// reproduce them.
struct ReferenceThreshold {
  std::string_view dataset;
  double tau;
};
inline constexpr ReferenceThreshold kReferenceThresholds[] = {
    {"Weibo21", 0.745},
    {"GossipCop", 0.660},
    {"Snopes", 0.715},
    {"PolitiFact", 0.690},
};

}  // namespace see
