#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "see/data.hpp"
#include "see/model.hpp"

namespace see {

struct TrainingConfig {
  double lr_extractor = 1e-3;  // adapter + decoders
  double lr_rest = 1e-3;       // classifier + assessor
  std::size_t batch_size = 12;
  std::size_t epochs_stage1 = 20;
  std::size_t epochs_stage2 = 10;
  double tau = 0.7;
  double assessor_weight = 1.0;  // single-stage only
  std::size_t patience = 0;      // 0 keeps training to the last epoch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

// Adam with per-tensor moment buffers and step counters, keyed by position in
// list_parameters().
class Adam {
 public:
  Adam() = default;
  Adam(const ModelParams& params, double beta1, double beta2, double eps);

  // Updates every parameter in `groups` from its accumulated gradient, then
  // clears the gradients of all parameters.
  void step(ModelParams& params, std::span<const ParamGroup> groups, double lr_extractor, double lr_rest);

  std::span<const std::vector<double>> first_moments() const { return m_; }
  std::span<const std::vector<double>> second_moments() const { return v_; }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::vector<std::vector<double>> m_, v_;
  std::vector<std::uint64_t> t_;
};

enum class Stage { one, two, single };
std::string_view to_string(Stage s);

struct TrainState {
  TrainState(Model model, const TrainingConfig& config, Stage stage);

  // Switches stage; entering stage two snapshots the extractor and
  // classifier so the frozen contract can be checked.
  void enter_stage(Stage next);

  Model model;
  Adam optimizer;
  std::size_t epoch = 0;
  Stage stage;
  std::uint64_t seed;
  std::optional<std::vector<Tensor>> frozen_snapshot;
};

struct LossReport {
  std::vector<double> batch_losses;
  std::vector<double> targets;  // y'_k, in visiting order
  std::vector<double> scores;   // s_k, aligned with targets
  double mean_loss = 0.0;
};

// Scalar loss helpers.
double bce_loss(int label, double prediction);
double confidence_target(int label, double prediction);
double assessor_loss(std::span<const double> targets, std::span<const double> scores);

// sum_k |target_k - score_k| on the tape; targets are constants.
Tensor assessor_loss(Tape* tape, std::span<const double> targets, std::span<const Tensor> scores);

// Mean over the batch of the classification loss on R_N.
Tensor stage_one_batch_loss(Tape* tape, const Model& model, std::span<const Sample> batch);

// Mean over the batch of the summed assessor L1 loss; extractor and
// classifier run untracked.
Tensor stage_two_batch_loss(Tape* tape, const Model& model, std::span<const Sample> batch,
                            std::vector<double>* targets = nullptr, std::vector<double>* scores = nullptr);

// L_cls(y, y_hat_n) + weight * sum_{i<=n} |y'_i - s_i| for one sample, where
// n is the first step with s_n > tau (or N). The targets y' are constants of
// the backward pass; `fixed_targets`, when given, replaces them so a
// finite-difference check sees the same surrogate.
Tensor single_stage_sample_loss(Tape* tape, const Model& model, const Sample& sample, double tau,
                                double assessor_weight, std::vector<double>* targets = nullptr,
                                std::vector<double>* scores = nullptr,
                                std::size_t* exit_step = nullptr,
                                std::span<const double> fixed_targets = {});

// Batch order for an epoch; depends only on the seed and epoch index so every
// training mode sees the same sequence.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch);

LossReport stage_one_epoch(std::span<const Sample> train, TrainState& state, const TrainingConfig& config);
LossReport stage_two_epoch(std::span<const Sample> train, TrainState& state, const TrainingConfig& config);
LossReport single_stage_epoch(std::span<const Sample> train, TrainState& state, const TrainingConfig& config,
                              double tau);

struct EpochLog {
  Stage stage = Stage::one;
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
  double val_auc = 0.0;
  long long wall_ms = 0;
};

// stage=one epoch=3 mean_loss=... val_accuracy=... val_f1=... val_auc=... wall_ms=...
std::string format_epoch_log(const EpochLog& log);

struct TrainResult {
  Model model;
  std::vector<EpochLog> history;
  double best_val_accuracy = 0.0;
};

// Full pipeline: stage one then stage two, or the single-stage variant. Keeps
// the parameters that scored best on the validation split. Stage one and the
// single-stage run are scored on full examination; stage two on early-exit
// inference at config.tau.
TrainResult train_two_stage(const Model& init, std::span<const Sample> train, std::span<const Sample> val,
                            const TrainingConfig& config, std::ostream* log = nullptr);
TrainResult train_single_stage(const Model& init, std::span<const Sample> train, std::span<const Sample> val,
                               const TrainingConfig& config, std::ostream* log = nullptr);

}  // namespace see
