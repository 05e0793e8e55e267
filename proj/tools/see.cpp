#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "see/checkpoint.hpp"
#include "see/config.hpp"
#include "see/data.hpp"
#include "see/error.hpp"
#include "see/eval.hpp"
#include "see/inference.hpp"
#include "see/perturb.hpp"
#include "see/random.hpp"
#include "see/training.hpp"
#include "see/verify.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigFailure = 2,
  kDataFailure = 3,
  kNumericFailure = 4,
  kVerifyFailure = 5,
};

// Writes to two streams at once so training progress reaches both the
// terminal and the log file.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == EOF) return !EOF;
    const int ra = a_->sputc(static_cast<char>(c));
    const int rb = b_->sputc(static_cast<char>(c));
    return ra == EOF || rb == EOF ? EOF : c;
  }
  int sync() override { return a_->pubsync() | b_->pubsync(); }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

std::string flag_name(const std::string& key) {
  std::string out = "--";
  for (char c : key) out += c == '_' ? '-' : c;
  return out;
}

struct ConfigArgs {
  std::string preset = "desk";
  std::string file;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

void add_config_flags(CLI::App* app, ConfigArgs& args) {
  app->add_option("--preset", args.preset, "Base preset")->check(CLI::IsMember({"desk", "paper-scale"}));
  app->add_option("--config", args.file, "key=value config file")->check(CLI::ExistingFile);
  for (const auto& key : see::config_keys()) {
    auto* opt = app->add_option(flag_name(key), args.values[key], "Overrides config key " + key);
    const std::string current = see::get_setting(see::ExperimentConfig{}, key);
    if (current == "true" || current == "false") opt->expected(0, 1)->default_str("true");
    args.options.emplace_back(key, opt);
  }
}

// Precedence: flag > SEE_SEED > file > preset.
see::ExperimentConfig resolve_config(const ConfigArgs& args) {
  see::ExperimentConfig config = see::preset(args.preset);
  if (!args.file.empty()) see::apply_config_file(config, args.file);
  if (const char* env = std::getenv("SEE_SEED")) see::apply_setting(config, "seed", env);
  for (const auto& [key, opt] : args.options) {
    if (opt->count() > 0) {
      const std::string& value = args.values.at(key);
      see::apply_setting(config, key, value.empty() ? "true" : value);
    }
  }
  config.validate();
  return config;
}

std::uint64_t env_seed(std::uint64_t fallback) {
  const char* env = std::getenv("SEE_SEED");
  if (env == nullptr) return fallback;
  see::ExperimentConfig tmp;
  see::apply_setting(tmp, "seed", env);
  return tmp.training.seed;
}

see::SplitManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw see::DataError("cannot open split manifest " + path);
  return see::read_manifest(in);
}

std::vector<see::Sample> split_samples(const see::Dataset& data, const std::string& split,
                                       const std::optional<see::SplitManifest>& manifest) {
  if (split == "all") return data.samples;
  if (!manifest) throw see::ConfigError("split '" + split + "' needs a manifest");
  return see::select_samples(data, manifest->ids(split));
}

void check_compatible(const see::Dataset& data, const see::ModelConfig& model) {
  auto check = [](const char* name, std::size_t store, std::size_t config) {
    if (store != config) {
      throw see::ConfigError(std::string("store has ") + name + "=" + std::to_string(store) + " but the model expects " +
                             name + "=" + std::to_string(config));
    }
  };
  check("L", data.tokens, model.tokens);
  check("d", data.width, model.width);
  check("N", data.max_evidence, model.max_evidence);
}

void print_metrics(std::ostream& out, const std::string& split, std::size_t n, double tau,
                   const see::MetricsReport& m, const see::BatchSummary& s) {
  out << "split=" << split << " n=" << n << " tau=" << tau << " accuracy=" << m.accuracy
      << " macro_f1=" << m.macro_f1 << " auc=" << m.auc << " termination_ratio=" << s.termination_ratio << '\n';
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
  see::SyntheticSpec spec = see::separable_preset();
  std::string out;
  CLI::Option* seed = nullptr;
};

int run_synth(const SynthArgs& a) {
  see::SyntheticSpec spec = a.spec;
  if (a.seed->count() == 0) spec.seed = env_seed(spec.seed);
  const see::Dataset data = see::gen_synthetic(spec);
  const auto bytes = see::write_store(a.out, data);
  std::size_t positives = 0;
  for (const auto& s : data.samples) positives += s.label == 1 ? 1 : 0;
  std::cout << "wrote " << a.out << ": samples=" << data.samples.size() << " positives=" << positives
            << " L=" << data.tokens << " d=" << data.width << " N=" << data.max_evidence << " seed=" << spec.seed
            << " bytes=" << bytes << '\n';
  return kOk;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  ConfigArgs config;
  std::string store, out, manifest, log;
  double tau_lo = 0.50, tau_hi = 0.95, tau_step = 0.01;
};

int run_train(const TrainArgs& a) {
  const see::ExperimentConfig config = resolve_config(a.config);
  const see::Dataset data = see::read_store(a.store);
  check_compatible(data, config.model);

  const std::uint64_t seed = config.training.seed;
  const see::SplitManifest manifest = see::stratified_split(data.samples, seed);
  const std::string manifest_path = a.manifest.empty() ? a.out + ".split" : a.manifest;
  {
    std::ofstream m(manifest_path);
    if (!m) throw see::DataError("cannot write " + manifest_path);
    see::write_manifest(m, manifest);
  }
  const auto train = see::select_samples(data, manifest.train);
  const auto val = see::select_samples(data, manifest.val);

  const std::string log_path = a.log.empty() ? a.out + ".log" : a.log;
  std::ofstream log_file(log_path);
  if (!log_file) throw see::DataError("cannot write " + log_path);
  TeeBuf tee(std::cout.rdbuf(), log_file.rdbuf());
  std::ostream log(&tee);

  const see::Model init = see::init_model(config.model, see::mix_seed(seed, 0x1417));
  const see::TrainResult result = config.single_stage
                                      ? see::train_single_stage(init, train, val, config.training, &log)
                                      : see::train_two_stage(init, train, val, config.training, &log);

  // The checkpoint stores single-precision parameters; pick tau on exactly
  // what will be reloaded.
  see::Model final_model = result.model.clone();
  see::round_to_storage_precision(final_model.params());
  const auto grid = see::tau_grid(a.tau_lo, a.tau_hi, a.tau_step);
  const see::SweepCurve curve = see::sweep_tau(val, final_model, grid, config.threads);
  see::save_checkpoint(a.out, final_model, {curve.best_tau, seed});
  log << "done mode=" << (config.single_stage ? "single" : "two_stage")
      << " best_val_accuracy=" << result.best_val_accuracy << " tau=" << curve.best_tau
      << " tau_val_accuracy=" << curve.best_accuracy << " checkpoint=" << a.out << '\n';
  log.flush();
  return kOk;
}

// ---- infer / sweep / perturb ---------------------------------------------------

struct EvalArgs {
  std::string checkpoint, store, split = "test", manifest, out;
  std::optional<double> tau;
  unsigned threads = 1;
};

struct Loaded {
  see::Checkpoint checkpoint;
  see::Dataset data;
  std::optional<see::SplitManifest> manifest;
};

Loaded load_inputs(const EvalArgs& a) {
  Loaded l{see::load_checkpoint(a.checkpoint), see::read_store(a.store), std::nullopt};
  check_compatible(l.data, l.checkpoint.model.config());
  const std::string path = a.manifest.empty() ? a.checkpoint + ".split" : a.manifest;
  if (a.split != "all" || !a.manifest.empty()) l.manifest = load_manifest(path);
  return l;
}

int run_infer(const EvalArgs& a) {
  const Loaded l = load_inputs(a);
  const double tau = a.tau.value_or(l.checkpoint.meta.tau);
  const auto samples = split_samples(l.data, a.split, l.manifest);
  const see::BatchResult r = see::batch_infer(samples, l.checkpoint.model, tau, a.threads);
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw see::DataError("cannot write " + a.out);
    see::write_traces(out, r.traces);
  }
  print_metrics(std::cout, a.split, samples.size(), tau, see::evaluate(r.traces), r.summary);
  std::cout << "exit_histogram";
  for (auto c : r.summary.exit_histogram) std::cout << ' ' << c;
  std::cout << '\n';
  return kOk;
}

struct SweepArgs {
  EvalArgs eval;
  double lo = 0.50, hi = 0.95, step = 0.01;
};

int run_sweep(const SweepArgs& a) {
  const Loaded l = load_inputs(a.eval);
  const auto samples = split_samples(l.data, a.eval.split, l.manifest);
  const see::SweepCurve curve =
      see::sweep_tau(samples, l.checkpoint.model, see::tau_grid(a.lo, a.hi, a.step), a.eval.threads);
  if (a.eval.out.empty()) {
    see::write_curve(std::cout, curve);
  } else {
    std::ofstream out(a.eval.out);
    if (!out) throw see::DataError("cannot write " + a.eval.out);
    see::write_curve(out, curve);
    std::cout << "best_tau=" << curve.best_tau << " best_accuracy=" << curve.best_accuracy << '\n';
  }
  return kOk;
}

struct PerturbArgs {
  EvalArgs eval;
  std::string modes = "most_related_swapped,all_shuffled,reversed,most_related_void,most_related_missing,limited:1,limited:3";
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_perturb(const PerturbArgs& a) {
  const Loaded l = load_inputs(a.eval);
  const double tau = a.eval.tau.value_or(l.checkpoint.meta.tau);
  const std::uint64_t seed = a.seed_opt->count() > 0 ? a.seed : env_seed(a.seed);
  const auto modes = see::parse_perturbation_list(a.modes, seed);
  const auto samples = split_samples(l.data, a.eval.split, l.manifest);
  // Irrelevant replacements come from training news items when a split is
  // known, otherwise from the evaluated samples themselves.
  const auto pool_source = l.manifest && a.eval.split != "train" ? see::select_samples(l.data, l.manifest->train) : samples;
  const auto pool = see::build_noise_pool(pool_source);
  const auto rows = see::run_perturbation_suite(samples, l.checkpoint.model, tau, modes, pool, a.eval.threads);
  if (a.eval.out.empty()) {
    see::write_perturbation_table(std::cout, rows);
  } else {
    std::ofstream out(a.eval.out);
    if (!out) throw see::DataError("cannot write " + a.eval.out);
    see::write_perturbation_table(out, rows);
  }
  return kOk;
}

// ---- verify ------------------------------------------------------------------

int run_verify(const see::VerifyOptions& options) {
  const see::VerifyReport report = see::run_verification(options);
  see::write_report(std::cout, report);
  return report.ok() ? kOk : kVerifyFailure;
}

void add_eval_flags(CLI::App* cmd, EvalArgs& a, const std::string& default_split) {
  a.split = default_split;
  cmd->add_option("--checkpoint", a.checkpoint, "SEEP checkpoint")->required()->check(CLI::ExistingFile);
  cmd->add_option("--store", a.store, "SEE1 store")->required()->check(CLI::ExistingFile);
  cmd->add_option("--split", a.split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  cmd->add_option("--manifest", a.manifest, "Split manifest (default: <checkpoint>.split)");
  cmd->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential evidence examination with early exit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic SEE1 store");
  cmd_synth->add_option("--out", synth.out, "Output store")->required();
  cmd_synth->add_option("--samples", synth.spec.sample_count)->capture_default_str();
  cmd_synth->add_option("--tokens", synth.spec.tokens)->capture_default_str();
  cmd_synth->add_option("--width", synth.spec.width)->capture_default_str();
  cmd_synth->add_option("--n-evidence", synth.spec.max_evidence)->capture_default_str();
  cmd_synth->add_option("--margin", synth.spec.margin)->capture_default_str();
  cmd_synth->add_option("--news-signal", synth.spec.news_signal)->capture_default_str();
  cmd_synth->add_option("--decay", synth.spec.decay)->capture_default_str();
  cmd_synth->add_option("--contradiction", synth.spec.contradiction)->capture_default_str();
  cmd_synth->add_option("--noise", synth.spec.noise)->capture_default_str();
  synth.seed = cmd_synth->add_option("--seed", synth.spec.seed)->capture_default_str();

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "Train a model and write a checkpoint");
  cmd_train->add_option("--store", train.store, "SEE1 store")->required()->check(CLI::ExistingFile);
  cmd_train->add_option("--out", train.out, "Output checkpoint")->required();
  cmd_train->add_option("--manifest", train.manifest, "Split manifest output (default: <out>.split)");
  cmd_train->add_option("--log", train.log, "Training log output (default: <out>.log)");
  cmd_train->add_option("--tau-lo", train.tau_lo)->capture_default_str();
  cmd_train->add_option("--tau-hi", train.tau_hi)->capture_default_str();
  cmd_train->add_option("--tau-step", train.tau_step)->capture_default_str();
  add_config_flags(cmd_train, train.config);

  EvalArgs infer;
  auto* cmd_infer = app.add_subcommand("infer", "Run early-exit inference on a split");
  add_eval_flags(cmd_infer, infer, "test");
  cmd_infer->add_option("--tau", infer.tau, "Threshold (default: checkpoint value)");
  cmd_infer->add_option("--trace", infer.out, "JSONL trace output");

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand("sweep", "Sweep the exit threshold");
  add_eval_flags(cmd_sweep, sweep.eval, "val");
  cmd_sweep->add_option("--lo", sweep.lo)->capture_default_str();
  cmd_sweep->add_option("--hi", sweep.hi)->capture_default_str();
  cmd_sweep->add_option("--step", sweep.step)->capture_default_str();
  cmd_sweep->add_option("--out", sweep.eval.out, "Curve output (default: stdout)");

  PerturbArgs perturb;
  auto* cmd_perturb = app.add_subcommand("perturb", "Evaluate under evidence perturbations");
  add_eval_flags(cmd_perturb, perturb.eval, "test");
  cmd_perturb->add_option("--tau", perturb.eval.tau, "Threshold (default: checkpoint value)");
  cmd_perturb->add_option("--modes", perturb.modes, "Comma-separated modes")->capture_default_str();
  perturb.seed_opt = cmd_perturb->add_option("--seed", perturb.seed)->capture_default_str();
  cmd_perturb->add_option("--out", perturb.eval.out, "Table output (default: stdout)");

  see::VerifyOptions verify;
  auto* cmd_verify = app.add_subcommand("verify", "Run the invariant and oracle suites");
  cmd_verify->add_option("--seeds", verify.gradient_seeds, "Gradient-check seeds")->capture_default_str();
  cmd_verify->add_option("--pairs", verify.inference_pairs, "Inference differential pairs")->capture_default_str();
  cmd_verify->add_option("--seed", verify.seed)->capture_default_str();
  cmd_verify->add_flag("--inject-fault", verify.inject_fault, "Add a deliberately broken backward rule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigFailure;
  }

  try {
    if (*cmd_synth) return run_synth(synth);
    if (*cmd_train) return run_train(train);
    if (*cmd_infer) return run_infer(infer);
    if (*cmd_sweep) return run_sweep(sweep);
    if (*cmd_perturb) return run_perturb(perturb);
    if (*cmd_verify) return run_verify(verify);
  } catch (const see::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const see::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const see::LabelError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const see::DimensionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const see::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
