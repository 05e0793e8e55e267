#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "see/data.hpp"
#include "see/model.hpp"

namespace see {

struct StepRecord {
  std::size_t step = 0;       // 1-based time-step k
  double confidence = 0.0;    // s_k
  double prediction = 0.0;    // y_hat_k
};

struct InferenceTrace {
  std::uint64_t sample_id = 0;
  int label = 0;
  std::vector<StepRecord> steps;
  std::optional<std::size_t> exit_step;  // first k with s_k > tau
  std::size_t best_step = 0;             // earliest argmax of s over visited steps
  double final_prediction = 0.0;
  bool terminated_early = false;
  std::size_t decoder_evaluations = 0;
};

// Examines evidences in order and stops at the first step whose confidence
// strictly exceeds tau; otherwise predicts from the most confident state.
// Throws NumericError if a confidence score is NaN.
InferenceTrace infer(const Sample& sample, const Model& model, double tau);

struct StepSelection {
  std::optional<std::size_t> exit_step;
  std::size_t best_step = 0;
};

// The selection rule applied to a complete score vector: the first k with
// s_k > tau, otherwise the earliest maximum.
StepSelection select_step(std::span<const double> scores, double tau);

// Computes every state, score and prediction first, then applies the same
// selection rule to the complete score vector. Used for differential testing.
InferenceTrace infer_oracle(const Sample& sample, const Model& model, double tau);

inline constexpr double kDecisionThreshold = 0.5;

struct BatchSummary {
  double accuracy = 0.0;
  double termination_ratio = 0.0;
  // Buckets 0..N-1 count threshold exits at steps 1..N; bucket N counts
  // samples that fell back to the most confident state.
  std::vector<std::size_t> exit_histogram;
};

struct BatchResult {
  std::vector<InferenceTrace> traces;
  BatchSummary summary;
};

// Runs infer on every sample. Work may fan out over `threads` workers; the
// traces are always returned in input order.
BatchResult batch_infer(std::span<const Sample> samples, const Model& model, double tau,
                        unsigned threads = 1);

BatchSummary summarize(std::span<const InferenceTrace> traces, std::size_t max_evidence);

// One JSON object per line:
//   {"sample_id", "label", "exit_step" (-1 when none), "best_step",
//    "final_prediction", "terminated_early", "scores": [s_1..s_k],
//    "predictions": [y_1..y_k]}
void write_traces(std::ostream& out, std::span<const InferenceTrace> traces);
std::vector<InferenceTrace> read_traces(std::istream& in);

}  // namespace see
