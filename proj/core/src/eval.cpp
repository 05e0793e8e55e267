#include "see/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "see/error.hpp"

namespace see {
namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("metric inputs differ in length: " + std::to_string(a) + " vs " + std::to_string(b));
  }
  if (a == 0) throw DataError("metric inputs are empty");
}

void check_binary(int v) {
  if (v != 0 && v != 1) throw LabelError("metric inputs must be binary, got " + std::to_string(v));
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

Confusion confusion(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size());
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check_binary(predictions[i]);
    check_binary(labels[i]);
    if (predictions[i] == 1) {
      labels[i] == 1 ? ++c.tp : ++c.fp;
    } else {
      labels[i] == 0 ? ++c.tn : ++c.fn;
    }
  }
  return c;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  const Confusion c = confusion(predictions, labels);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels) {
  const Confusion c = confusion(predictions, labels);
  // For class 0 the roles of positives and negatives swap.
  return 0.5 * (f1(c.tp, c.fp, c.fn) + f1(c.tn, c.fn, c.fp));
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      check_binary(labels[order[k]]);
      if (labels[order[k]] == 1) {
        positive_rank_sum += rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw DataError("AUC is undefined when only one class is present");
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  std::vector<int> predictions(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) predictions[i] = scores[i] >= kDecisionThreshold ? 1 : 0;
  MetricsReport r;
  r.counts = confusion(predictions, labels);
  r.n = scores.size();
  r.accuracy = static_cast<double>(r.counts.tp + r.counts.tn) / static_cast<double>(r.n);
  r.macro_f1 = macro_f1(predictions, labels);
  r.auc = auc(scores, labels);
  return r;
}

MetricsReport evaluate(std::span<const InferenceTrace> traces) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(traces.size());
  labels.reserve(traces.size());
  for (const auto& t : traces) {
    scores.push_back(t.final_prediction);
    labels.push_back(t.label);
  }
  return evaluate(scores, labels);
}

std::vector<double> tau_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo <= hi)) throw ConfigError("tau grid needs lo <= hi and a positive step");
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) {
    // Round to 12 decimals so 0.5 + 23 * 0.01 prints and compares as 0.73.
    grid.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  }
  return grid;
}

std::vector<double> default_tau_grid() { return tau_grid(0.50, 0.95, 0.01); }

SweepCurve sweep_tau(std::span<const Sample> samples, const Model& model, std::span<const double> grid,
                     unsigned threads) {
  if (grid.empty()) throw ConfigError("tau grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw ConfigError("tau grid values must lie in [0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError("tau grid must be strictly increasing");
  }
  SweepCurve curve;
  for (double tau : grid) {
    const BatchResult r = batch_infer(samples, model, tau, threads);
    curve.points.push_back({tau, r.summary.accuracy, r.summary.termination_ratio, r.summary.exit_histogram});
  }
  const auto best = std::max_element(curve.points.begin(), curve.points.end(),
                                     [](const SweepPoint& a, const SweepPoint& b) { return a.accuracy < b.accuracy; });
  curve.best_tau = best->tau;
  curve.best_accuracy = best->accuracy;
  return curve;
}

void write_curve(std::ostream& out, const SweepCurve& curve) {
  const std::size_t buckets = curve.points.empty() ? 0 : curve.points.front().exit_histogram.size();
  out << "tau accuracy termination_ratio";
  for (std::size_t k = 1; k < buckets; ++k) out << " hist_" << k;
  out << " fallback\n";
  for (const auto& p : curve.points) {
    out << p.tau << ' ' << p.accuracy << ' ' << p.termination_ratio;
    for (auto c : p.exit_histogram) out << ' ' << c;
    out << '\n';
  }
  out << "# best_tau=" << curve.best_tau << " best_accuracy=" << curve.best_accuracy << '\n';
}

}  // namespace see
