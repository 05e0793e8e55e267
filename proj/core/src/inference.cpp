#include "see/inference.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <thread>

#include "json.hpp"
#include "see/error.hpp"

namespace see {
namespace {

void check_inputs(const Sample& sample, const Model& model, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1], got " + std::to_string(tau));
  const std::size_t n = model.config().max_evidence;
  if (n == 0) throw ConfigError("model has no decoders");
  if (sample.evidences.size() != n) {
    throw DimensionError("sample " + std::to_string(sample.id) + " carries " +
                         std::to_string(sample.evidences.size()) + " evidence blocks, model expects " +
                         std::to_string(n));
  }
}

double checked_confidence(const Model& model, const Tensor& hidden, std::size_t step) {
  const double s = model.confidence(nullptr, hidden).item();
  if (std::isnan(s)) throw NumericError("confidence at step " + std::to_string(step) + " is NaN");
  return s;
}

}  // namespace

InferenceTrace infer(const Sample& sample, const Model& model, double tau) {
  check_inputs(sample, model, tau);
  InferenceTrace trace;
  trace.sample_id = sample.id;
  trace.label = sample.label;

  const std::size_t n = model.config().max_evidence;
  std::vector<Tensor> states;
  states.reserve(n);
  Tensor state = model.embed(nullptr, sample.news);
  double best_score = -1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    Tensor hidden = model.decode(nullptr, k, state, model.embed(nullptr, sample.evidences[k - 1]));
    ++trace.decoder_evaluations;
    const double s = checked_confidence(model, hidden, k);
    states.push_back(hidden);
    const double y = model.predict(nullptr, states).item();
    trace.steps.push_back({k, s, y});
    if (s > tau) {
      trace.exit_step = k;
      trace.best_step = k;
      trace.final_prediction = y;
      trace.terminated_early = true;
      return trace;
    }
    if (s > best_score) {
      best_score = s;
      trace.best_step = k;
    }
    state = std::move(hidden);
  }
  trace.final_prediction = trace.steps[trace.best_step - 1].prediction;
  return trace;
}

StepSelection select_step(std::span<const double> scores, double tau) {
  if (scores.empty()) throw DimensionError("select_step needs at least one score");
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (std::isnan(scores[k])) throw NumericError("confidence at step " + std::to_string(k + 1) + " is NaN");
  }
  StepSelection pick;
  const auto crossing = std::find_if(scores.begin(), scores.end(), [tau](double s) { return s > tau; });
  if (crossing != scores.end()) {
    pick.exit_step = static_cast<std::size_t>(crossing - scores.begin()) + 1;
    pick.best_step = *pick.exit_step;
  } else {
    // max_element returns the first of equal maxima.
    pick.best_step = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin()) + 1;
  }
  return pick;
}

InferenceTrace infer_oracle(const Sample& sample, const Model& model, double tau) {
  check_inputs(sample, model, tau);
  const std::size_t n = model.config().max_evidence;

  std::vector<Tensor> states;
  std::vector<double> scores, predictions;
  Tensor state = model.embed(nullptr, sample.news);
  for (std::size_t k = 1; k <= n; ++k) {
    state = model.decode(nullptr, k, state, model.embed(nullptr, sample.evidences[k - 1]));
    states.push_back(state);
    scores.push_back(checked_confidence(model, state, k));
    predictions.push_back(model.predict(nullptr, states).item());
  }

  InferenceTrace trace;
  trace.sample_id = sample.id;
  trace.label = sample.label;
  trace.decoder_evaluations = n;
  const StepSelection pick = select_step(scores, tau);
  const std::size_t visited = pick.exit_step.value_or(n);
  trace.exit_step = pick.exit_step;
  trace.terminated_early = pick.exit_step.has_value();
  trace.best_step = pick.best_step;
  for (std::size_t k = 1; k <= visited; ++k) trace.steps.push_back({k, scores[k - 1], predictions[k - 1]});
  trace.final_prediction = predictions[trace.best_step - 1];
  return trace;
}

BatchSummary summarize(std::span<const InferenceTrace> traces, std::size_t max_evidence) {
  if (traces.empty()) throw DataError("cannot summarize an empty split");
  BatchSummary summary;
  summary.exit_histogram.assign(max_evidence + 1, 0);
  std::size_t correct = 0, early = 0;
  for (const auto& t : traces) {
    const int predicted = t.final_prediction >= kDecisionThreshold ? 1 : 0;
    if (predicted == t.label) ++correct;
    if (t.terminated_early) {
      ++early;
      ++summary.exit_histogram[*t.exit_step - 1];
    } else {
      ++summary.exit_histogram[max_evidence];
    }
  }
  const auto total = static_cast<double>(traces.size());
  summary.accuracy = static_cast<double>(correct) / total;
  summary.termination_ratio = static_cast<double>(early) / total;
  return summary;
}

BatchResult batch_infer(std::span<const Sample> samples, const Model& model, double tau, unsigned threads) {
  if (samples.empty()) throw DataError("batch_infer needs a non-empty split");
  BatchResult result;
  result.traces.resize(samples.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(samples.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) result.traces[i] = infer(samples[i], model, tau);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < samples.size(); i += threads) {
            result.traces[i] = infer(samples[i], model, tau);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  result.summary = summarize(result.traces, model.config().max_evidence);
  return result;
}

void write_traces(std::ostream& out, std::span<const InferenceTrace> traces) {
  for (const auto& t : traces) {
    nlohmann::json j;
    j["sample_id"] = t.sample_id;
    j["label"] = t.label;
    j["exit_step"] = t.exit_step ? static_cast<long long>(*t.exit_step) : -1LL;
    j["best_step"] = t.best_step;
    j["final_prediction"] = t.final_prediction;
    j["terminated_early"] = t.terminated_early;
    auto& scores = j["scores"] = nlohmann::json::array();
    auto& preds = j["predictions"] = nlohmann::json::array();
    for (const auto& s : t.steps) {
      scores.push_back(s.confidence);
      preds.push_back(s.prediction);
    }
    out << j.dump() << '\n';
  }
}

std::vector<InferenceTrace> read_traces(std::istream& in) {
  std::vector<InferenceTrace> traces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      InferenceTrace t;
      t.sample_id = j.at("sample_id").get<std::uint64_t>();
      t.label = j.at("label").get<int>();
      const auto exit = j.at("exit_step").get<long long>();
      if (exit >= 1) t.exit_step = static_cast<std::size_t>(exit);
      t.best_step = j.at("best_step").get<std::size_t>();
      t.final_prediction = j.at("final_prediction").get<double>();
      t.terminated_early = j.at("terminated_early").get<bool>();
      const auto& scores = j.at("scores");
      const auto& preds = j.at("predictions");
      if (scores.size() != preds.size()) throw FormatError("scores/predictions length mismatch");
      for (std::size_t k = 0; k < scores.size(); ++k) {
        t.steps.push_back({k + 1, scores[k].get<double>(), preds[k].get<double>()});
      }
      t.decoder_evaluations = t.steps.size();
      traces.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return traces;
}

}  // namespace see
