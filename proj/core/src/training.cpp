#include "see/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "see/error.hpp"
#include "see/eval.hpp"
#include "see/inference.hpp"
#include "see/random.hpp"

namespace see {

void TrainingConfig::validate() const {
  if (!(lr_extractor > 0.0) || !(lr_rest > 0.0)) throw ConfigError("learning rates must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (!(assessor_weight >= 0.0)) throw ConfigError("assessor_weight must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw ConfigError("invalid Adam coefficients");
  }
}

Adam::Adam(const ModelParams& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : list_parameters(params)) {
    m_.emplace_back(p.tensor.size(), 0.0);
    v_.emplace_back(p.tensor.size(), 0.0);
    t_.push_back(0);
  }
}

void Adam::step(ModelParams& params, std::span<const ParamGroup> groups, double lr_extractor, double lr_rest) {
  auto list = list_parameters(params);
  if (list.size() != m_.size()) throw StateError("optimizer state does not match the model layout");
  for (std::size_t i = 0; i < list.size(); ++i) {
    Tensor& t = list[i].tensor;
    const bool selected = std::find(groups.begin(), groups.end(), list[i].group) != groups.end();
    if (selected && t.has_grad()) {
      const double lr = list[i].group == ParamGroup::extractor ? lr_extractor : lr_rest;
      ++t_[i];
      const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_[i]));
      const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_[i]));
      auto g = t.grad();
      auto values = t.mutable_values();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < values.size(); ++j) {
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
        values[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
      }
    }
    t.zero_grad();
  }
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::one: return "one";
    case Stage::two: return "two";
    case Stage::single: return "single";
  }
  return "one";
}

namespace {

constexpr ParamGroup kTrunk[] = {ParamGroup::extractor, ParamGroup::classifier};
constexpr ParamGroup kAssessorOnly[] = {ParamGroup::assessor};
constexpr ParamGroup kEverything[] = {ParamGroup::extractor, ParamGroup::classifier, ParamGroup::assessor};

Tensor batch_mean(Tape* tape, const std::vector<Tensor>& losses) {
  Tensor total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = add(tape, total, losses[i]);
  return scale(tape, total, 1.0 / static_cast<double>(losses.size()));
}

void require_data(std::span<const Sample> data) {
  if (data.empty()) throw DataError("training split is empty");
}

template <typename BatchFn>
LossReport run_batches(std::span<const Sample> train, TrainState& state, const TrainingConfig& config,
                       BatchFn&& batch_loss, std::span<const ParamGroup> groups) {
  require_data(train);
  LossReport report;
  const auto order = epoch_order(train.size(), state.seed, state.epoch);
  std::vector<Sample> batch;
  for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config.batch_size);
    batch.clear();
    for (std::size_t i = begin; i < end; ++i) batch.push_back(train[order[i]]);
    Tape tape;
    const Tensor loss = batch_loss(&tape, batch, report);
    if (!std::isfinite(loss.item())) throw NumericError("non-finite training loss");
    tape.backward(loss);
    state.optimizer.step(state.model.params(), groups, config.lr_extractor, config.lr_rest);
    report.batch_losses.push_back(loss.item());
  }
  report.mean_loss = std::accumulate(report.batch_losses.begin(), report.batch_losses.end(), 0.0) /
                     static_cast<double>(report.batch_losses.size());
  ++state.epoch;
  return report;
}

}  // namespace

TrainState::TrainState(Model m, const TrainingConfig& config, Stage s)
    : model(std::move(m)),
      optimizer(model.params(), config.beta1, config.beta2, config.adam_eps),
      stage(Stage::one),
      seed(config.seed) {
  enter_stage(s);
}

void TrainState::enter_stage(Stage next) {
  stage = next;
  epoch = 0;
  frozen_snapshot.reset();
  if (next == Stage::two) frozen_snapshot = snapshot(model.params(), kTrunk);
}

double bce_loss(int label, double prediction) {
  return binary_cross_entropy(nullptr, Tensor::scalar(prediction), label).item();
}

double confidence_target(int label, double prediction) {
  if (label != 0 && label != 1) throw LabelError("label must be 0 or 1");
  return 1.0 - std::fabs(static_cast<double>(label) - prediction);
}

double assessor_loss(std::span<const double> targets, std::span<const double> scores) {
  if (targets.size() != scores.size()) {
    throw DimensionError("assessor_loss: " + std::to_string(targets.size()) + " targets vs " +
                         std::to_string(scores.size()) + " scores");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) total += std::fabs(targets[k] - scores[k]);
  return total;
}

Tensor assessor_loss(Tape* tape, std::span<const double> targets, std::span<const Tensor> scores) {
  if (targets.size() != scores.size() || scores.empty()) {
    throw DimensionError("assessor_loss: " + std::to_string(targets.size()) + " targets vs " +
                         std::to_string(scores.size()) + " scores");
  }
  Tensor total;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const Tensor term = abs(tape, add_scalar(tape, scores[k], -targets[k]));
    total = k == 0 ? term : add(tape, total, term);
  }
  return total;
}

Tensor stage_one_batch_loss(Tape* tape, const Model& model, std::span<const Sample> batch) {
  require_data(batch);
  std::vector<Tensor> losses;
  losses.reserve(batch.size());
  const std::size_t n = model.config().max_evidence;
  for (const auto& s : batch) {
    std::vector<Tensor> states;
    Tensor state = model.embed(tape, s.news);
    for (std::size_t k = 1; k <= n; ++k) {
      state = model.decode(tape, k, state, model.embed(tape, s.evidences[k - 1]));
      states.push_back(state);
    }
    losses.push_back(binary_cross_entropy(tape, model.predict(tape, states), s.label));
  }
  return batch_mean(tape, losses);
}

Tensor stage_two_batch_loss(Tape* tape, const Model& model, std::span<const Sample> batch,
                            std::vector<double>* targets_out, std::vector<double>* scores_out) {
  require_data(batch);
  std::vector<Tensor> losses;
  const std::size_t n = model.config().max_evidence;
  for (const auto& s : batch) {
    std::vector<Tensor> states, scores;
    std::vector<double> targets;
    Tensor state = model.embed(nullptr, s.news);
    for (std::size_t k = 1; k <= n; ++k) {
      state = model.decode(nullptr, k, state, model.embed(nullptr, s.evidences[k - 1]));
      states.push_back(state);
      targets.push_back(confidence_target(s.label, model.predict(nullptr, states).item()));
      scores.push_back(model.confidence(tape, state));
    }
    if (targets_out) targets_out->insert(targets_out->end(), targets.begin(), targets.end());
    if (scores_out) {
      for (const auto& sc : scores) scores_out->push_back(sc.item());
    }
    losses.push_back(assessor_loss(tape, targets, scores));
  }
  return batch_mean(tape, losses);
}

Tensor single_stage_sample_loss(Tape* tape, const Model& model, const Sample& sample, double tau,
                                double assessor_weight, std::vector<double>* targets_out,
                                std::vector<double>* scores_out, std::size_t* exit_step,
                                std::span<const double> fixed_targets) {
  const std::size_t n = model.config().max_evidence;
  std::vector<Tensor> states, scores;
  std::vector<double> targets;
  Tensor prediction;
  std::size_t visited = n;
  Tensor state = model.embed(tape, sample.news);
  for (std::size_t k = 1; k <= n; ++k) {
    state = model.decode(tape, k, state, model.embed(tape, sample.evidences[k - 1]));
    states.push_back(state);
    const Tensor score = model.confidence(tape, state);
    prediction = model.predict(tape, states);
    scores.push_back(score);
    targets.push_back(k <= fixed_targets.size() ? fixed_targets[k - 1]
                                                 : confidence_target(sample.label, prediction.item()));
    if (score.item() > tau) {
      visited = k;
      break;
    }
  }
  if (targets_out) targets_out->insert(targets_out->end(), targets.begin(), targets.end());
  if (scores_out) {
    for (const auto& sc : scores) scores_out->push_back(sc.item());
  }
  if (exit_step) *exit_step = visited;
  const Tensor cls = binary_cross_entropy(tape, prediction, sample.label);
  return add(tape, cls, scale(tape, assessor_loss(tape, targets, scores), assessor_weight));
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0xe90c0000ULL + epoch));
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

LossReport stage_one_epoch(std::span<const Sample> train, TrainState& state, const TrainingConfig& config) {
  if (state.stage != Stage::one) throw StateError("stage_one_epoch called in stage " + std::string(to_string(state.stage)));
  return run_batches(
      train, state, config,
      [&](Tape* tape, std::span<const Sample> batch, LossReport&) {
        return stage_one_batch_loss(tape, state.model, batch);
      },
      kTrunk);
}

LossReport stage_two_epoch(std::span<const Sample> train, TrainState& state, const TrainingConfig& config) {
  if (state.stage != Stage::two) throw StateError("stage_two_epoch called in stage " + std::string(to_string(state.stage)));
  if (!state.frozen_snapshot) throw StateError("stage two has no stage-one snapshot");
  LossReport report = run_batches(
      train, state, config,
      [&](Tape* tape, std::span<const Sample> batch, LossReport& r) {
        return stage_two_batch_loss(tape, state.model, batch, &r.targets, &r.scores);
      },
      kAssessorOnly);
  if (!matches_snapshot(state.model.params(), kTrunk, *state.frozen_snapshot)) {
    throw StateError("stage two modified frozen parameters");
  }
  return report;
}

LossReport single_stage_epoch(std::span<const Sample> train, TrainState& state, const TrainingConfig& config,
                              double tau) {
  if (state.stage != Stage::single) throw StateError("single_stage_epoch called in stage " + std::string(to_string(state.stage)));
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1], got " + std::to_string(tau));
  return run_batches(
      train, state, config,
      [&](Tape* tape, std::span<const Sample> batch, LossReport& r) {
        std::vector<Tensor> losses;
        for (const auto& s : batch) {
          losses.push_back(single_stage_sample_loss(tape, state.model, s, tau, config.assessor_weight,
                                                    &r.targets, &r.scores));
        }
        return batch_mean(tape, losses);
      },
      kEverything);
}

std::string format_epoch_log(const EpochLog& log) {
  char line[256];
  std::snprintf(line, sizeof line,
                "stage=%s epoch=%zu mean_loss=%.6f val_accuracy=%.6f val_f1=%.6f val_auc=%.6f wall_ms=%lld",
                std::string(to_string(log.stage)).c_str(), log.epoch, log.mean_loss, log.val_accuracy,
                log.val_f1, log.val_auc, log.wall_ms);
  return line;
}

namespace {

using Clock = std::chrono::steady_clock;

long long elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

MetricsReport full_examination_metrics(const Model& model, std::span<const Sample> samples) {
  std::vector<double> scores;
  std::vector<int> labels;
  const std::size_t n = model.config().max_evidence;
  for (const auto& s : samples) {
    std::vector<Tensor> states;
    Tensor state = model.embed(nullptr, s.news);
    for (std::size_t k = 1; k <= n; ++k) {
      state = model.decode(nullptr, k, state, model.embed(nullptr, s.evidences[k - 1]));
      states.push_back(state);
    }
    scores.push_back(model.predict(nullptr, states).item());
    labels.push_back(s.label);
  }
  return evaluate(scores, labels);
}

void emit(std::ostream* log, std::vector<EpochLog>& history, EpochLog entry) {
  if (log) *log << format_epoch_log(entry) << '\n';
  history.push_back(entry);
}

}  // namespace

TrainResult train_two_stage(const Model& init, std::span<const Sample> train, std::span<const Sample> val,
                            const TrainingConfig& config, std::ostream* log) {
  config.validate();
  require_data(train);
  require_data(val);
  TrainState state(init.clone(), config, Stage::one);
  TrainResult result{init.clone(), {}, -1.0};

  std::size_t since_best = 0;
  for (std::size_t e = 0; e < config.epochs_stage1; ++e) {
    const auto start = Clock::now();
    const LossReport report = stage_one_epoch(train, state, config);
    const MetricsReport m = full_examination_metrics(state.model, val);
    emit(log, result.history, {Stage::one, e + 1, report.mean_loss, m.accuracy, m.macro_f1, m.auc, elapsed_ms(start)});
    if (m.accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = m.accuracy;
      result.model = state.model.clone();
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }

  // Stage two starts from the best stage-one parameters.
  state.model = result.model.clone();
  state.enter_stage(Stage::two);
  double best_accuracy = -1.0, best_val_loss = 0.0;
  since_best = 0;
  for (std::size_t e = 0; e < config.epochs_stage2; ++e) {
    const auto start = Clock::now();
    const LossReport report = stage_two_epoch(train, state, config);
    const BatchResult r = batch_infer(val, state.model, config.tau);
    const MetricsReport m = evaluate(r.traces);
    const double val_loss = stage_two_batch_loss(nullptr, state.model, val).item();
    emit(log, result.history, {Stage::two, e + 1, report.mean_loss, m.accuracy, m.macro_f1, m.auc, elapsed_ms(start)});
    if (m.accuracy > best_accuracy || (m.accuracy == best_accuracy && val_loss < best_val_loss)) {
      best_accuracy = m.accuracy;
      best_val_loss = val_loss;
      result.model = state.model.clone();
      result.best_val_accuracy = m.accuracy;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

TrainResult train_single_stage(const Model& init, std::span<const Sample> train, std::span<const Sample> val,
                               const TrainingConfig& config, std::ostream* log) {
  config.validate();
  require_data(train);
  require_data(val);
  TrainState state(init.clone(), config, Stage::single);
  TrainResult result{init.clone(), {}, -1.0};
  std::size_t since_best = 0;
  for (std::size_t e = 0; e < config.epochs_stage1; ++e) {
    const auto start = Clock::now();
    const LossReport report = single_stage_epoch(train, state, config, config.tau);
    const BatchResult r = batch_infer(val, state.model, config.tau);
    const MetricsReport m = evaluate(r.traces);
    emit(log, result.history, {Stage::single, e + 1, report.mean_loss, m.accuracy, m.macro_f1, m.auc, elapsed_ms(start)});
    if (m.accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = m.accuracy;
      result.model = state.model.clone();
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace see
