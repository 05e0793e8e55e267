#include "see/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <ostream>
#include <sstream>

#include "see/checkpoint.hpp"
#include "see/data.hpp"
#include "see/error.hpp"
#include "see/eval.hpp"
#include "see/inference.hpp"
#include "see/model.hpp"
#include "see/ops.hpp"
#include "see/random.hpp"
#include "see/training.hpp"

namespace see {
namespace {

constexpr std::size_t kMaxFailureNotes = 8;

Tensor random_tensor(Rng& rng, Shape shape, bool grad = true) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor(std::move(shape), std::move(v), grad);
}

// Values bounded away from zero, for ops with a kink there.
Tensor off_zero_tensor(Rng& rng, Shape shape) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return Tensor(std::move(shape), std::move(v), true);
}

// sum(x * w) with a fixed random w, so every output element gets a distinct
// upstream gradient.
LossFn weighted(std::function<Tensor(Tape*)> f, const Tensor& w) {
  return [f = std::move(f), w](Tape* tape) { return sum(tape, mul(tape, f(tape), w)); };
}

GradCase unary(std::string name, Rng& rng, Tensor x, Shape out_shape,
               std::function<Tensor(Tape*, const Tensor&)> op) {
  const Tensor w = random_tensor(rng, std::move(out_shape), false);
  return {std::move(name), {x}, weighted([x, op](Tape* t) { return op(t, x); }, w)};
}

GradCase binary(std::string name, Rng& rng, Tensor a, Tensor b, Shape out_shape,
                std::function<Tensor(Tape*, const Tensor&, const Tensor&)> op) {
  const Tensor w = random_tensor(rng, std::move(out_shape), false);
  return {std::move(name), {a, b}, weighted([a, b, op](Tape* t) { return op(t, a, b); }, w)};
}

void jitter(ModelParams& params, Rng& rng) {
  for (auto& p : list_parameters(params)) {
    for (double& v : p.tensor.mutable_values()) v += rng.uniform(-0.2, 0.2);
  }
}

std::vector<Tensor> all_tensors(const ModelParams& params, std::initializer_list<ParamGroup> groups) {
  std::vector<Tensor> out;
  for (auto& p : list_parameters(params)) {
    if (std::find(groups.begin(), groups.end(), p.group) != groups.end()) out.push_back(p.tensor);
  }
  return out;
}

Sample random_sample(Rng& rng, std::uint64_t id, std::size_t tokens, std::size_t width, std::size_t n) {
  Sample s;
  s.id = id;
  s.label = rng.bernoulli(0.5) ? 1 : 0;
  s.news = random_tensor(rng, {tokens, width}, false);
  s.real_count = 1 + rng.index(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.evidences.push_back(k < s.real_count ? random_tensor(rng, {tokens, width}, false)
                                           : pad_block(tokens, width));
  }
  return s;
}

ModelConfig tiny_config(Activation activation) {
  ModelConfig c;
  c.tokens = 3;
  c.width = 4;
  c.max_evidence = 2;
  c.ffn_hidden = 8;
  c.mlp_hidden = 3;
  c.activation = activation;
  return c;
}

void note(SuiteResult& r, bool ok, const std::string& what) {
  ++r.total;
  if (ok) {
    ++r.passed;
  } else if (r.failures.size() < kMaxFailureNotes) {
    r.failures.push_back(what);
  }
}

std::string bytes_of(const std::function<void(std::ostream&)>& write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

template <typename E, typename F>
bool throws_as(F&& f) {
  try {
    f();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

bool same_trace(const InferenceTrace& a, const InferenceTrace& b) {
  if (a.exit_step != b.exit_step || a.best_step != b.best_step || a.terminated_early != b.terminated_early) {
    return false;
  }
  if (std::memcmp(&a.final_prediction, &b.final_prediction, sizeof(double)) != 0) return false;
  if (a.steps.size() != b.steps.size()) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    if (a.steps[i].confidence != b.steps[i].confidence || a.steps[i].prediction != b.steps[i].prediction) {
      return false;
    }
  }
  return true;
}

}  // namespace

Tensor faulty_double(Tape* tape, const Tensor& x) {
  std::vector<double> v(x.values().begin(), x.values().end());
  for (double& e : v) e *= 2.0;
  Tensor out(x.shape(), std::move(v), tape != nullptr && x.requires_grad());
  if (out.requires_grad()) {
    tape->record({x}, out, [x, out]() mutable {
      auto gx = x.grad_buffer();
      const auto go = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] -= 2.0 * go[i];
    });
  }
  return out;
}

GradCase faulty_gradient_case(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xfa17));
  return unary("faulty_double", rng, random_tensor(rng, {3, 4}), {3, 4}, faulty_double);
}

std::vector<GradCase> gradient_cases(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x9cad));
  std::vector<GradCase> cases;
  auto r = [&](Shape s) { return random_tensor(rng, std::move(s)); };

  cases.push_back(binary("matmul", rng, r({3, 4}), r({4, 2}), {3, 2}, matmul));
  cases.push_back(unary("transpose", rng, r({3, 4}), {4, 3}, transpose));
  cases.push_back(binary("add", rng, r({3, 4}), r({3, 4}), {3, 4}, add));
  cases.push_back(binary("sub", rng, r({3, 4}), r({3, 4}), {3, 4}, sub));
  cases.push_back(binary("mul", rng, r({3, 4}), r({3, 4}), {3, 4}, mul));
  cases.push_back(unary("scale", rng, r({3, 4}), {3, 4}, [](Tape* t, const Tensor& x) { return scale(t, x, 1.7); }));
  cases.push_back(
      unary("add_scalar", rng, r({3, 4}), {3, 4}, [](Tape* t, const Tensor& x) { return add_scalar(t, x, 0.3); }));
  cases.push_back(binary("add_bias", rng, r({3, 4}), r({4}), {3, 4}, add_bias));
  cases.push_back(
      unary("reshape", rng, r({3, 4}), {2, 6}, [](Tape* t, const Tensor& x) { return reshape(t, x, {2, 6}); }));
  cases.push_back(
      unary("select_row", rng, r({3, 4}), {4}, [](Tape* t, const Tensor& x) { return select_row(t, x, 1); }));
  cases.push_back(
      unary("slice_cols", rng, r({3, 5}), {3, 3}, [](Tape* t, const Tensor& x) { return slice_cols(t, x, 1, 4); }));
  cases.push_back(binary("concat_cols", rng, r({3, 2}), r({3, 3}), {3, 5}, [](Tape* t, const Tensor& a, const Tensor& b) {
    const Tensor parts[] = {a, b};
    return concat_cols(t, parts);
  }));
  cases.push_back(binary("concat", rng, r({3}), r({2, 2}), {7}, [](Tape* t, const Tensor& a, const Tensor& b) {
    const Tensor parts[] = {a, b};
    return concat(t, parts);
  }));
  {
    Tensor x = r({3, 4});
    cases.push_back({"sum", {x}, [x](Tape* t) { return sum(t, x); }});
  }
  {
    Tensor a = r({5}), b = r({5});
    cases.push_back({"dot", {a, b}, [a, b](Tape* t) { return dot(t, a, b); }});
  }
  cases.push_back(unary("abs", rng, off_zero_tensor(rng, {3, 4}), {3, 4},
                        [](Tape* t, const Tensor& x) { return abs(t, x); }));
  cases.push_back(unary("softmax_rows", rng, r({3, 4}), {3, 4}, softmax_rows));
  {
    Tensor x = r({3, 4}), g = r({4}), b = r({4});
    const Tensor w = random_tensor(rng, {3, 4}, false);
    cases.push_back({"layer_norm", {x, g, b},
                     weighted([x, g, b](Tape* t) { return layer_norm(t, x, g, b, kLayerNormEps); }, w)});
  }
  cases.push_back(unary("mean_pool_tokens", rng, r({3, 4}), {4}, mean_pool_tokens));
  cases.push_back(unary("sigmoid", rng, r({3, 4}), {3, 4}, [](Tape* t, const Tensor& x) { return sigmoid(t, x); }));
  cases.push_back(unary("gelu", rng, r({3, 4}), {3, 4}, gelu));
  cases.push_back(unary("tanh", rng, r({3, 4}), {3, 4}, [](Tape* t, const Tensor& x) { return see::tanh(t, x); }));
  cases.push_back(unary("relu", rng, off_zero_tensor(rng, {3, 4}), {3, 4}, relu));
  for (int label : {0, 1}) {
    Tensor p = Tensor::scalar(rng.uniform(0.1, 0.9), true);
    cases.push_back({"binary_cross_entropy_y" + std::to_string(label), {p},
                     [p, label](Tape* t) { return binary_cross_entropy(t, p, label); }});
  }

  for (std::size_t heads : {1, 2}) {
    AttentionParams proj{r({4, 4}), r({4, 4}), r({4, 4}), r({4, 4})};
    Tensor q = r({3, 4}), kv = r({5, 4});
    const Tensor w = random_tensor(rng, {3, 4}, false);
    cases.push_back({"attention_h" + std::to_string(heads),
                     {q, kv, proj.query, proj.key, proj.value, proj.output},
                     weighted([=](Tape* t) { return attention(t, q, kv, kv, proj, heads); }, w)});
  }

  const Activation smooth = seed % 2 == 0 ? Activation::gelu : Activation::tanh;
  {
    Model m = init_model(tiny_config(smooth), mix_seed(seed, 1));
    jitter(m.params(), rng);
    Tensor state = r({3, 4}), evidence = r({3, 4});
    const DecoderParams dp = m.params().decoders.front();
    std::vector<Tensor> inputs{state, evidence};
    for (auto& p : list_parameters(m.params())) {
      if (p.name.rfind("decoder1.", 0) == 0) inputs.push_back(p.tensor);
    }
    const Tensor w = random_tensor(rng, {3, 4}, false);
    cases.push_back({"decoder_block", inputs,
                     weighted([=](Tape* t) { return decoder_forward(t, state, evidence, dp, 1, smooth); }, w)});

    Tensor hidden = r({3, 4});
    const AssessorParams ap = m.params().assessor;
    cases.push_back({"assessor", {hidden, ap.weight, ap.bias},
                     [=](Tape* t) { return assess_confidence(t, hidden, ap); }});

    Tensor features = r({4});
    const ClassifierParams cp = m.params().classifier;
    cases.push_back({"classifier", {features, cp.w1, cp.b1, cp.w2, cp.b2, cp.w3, cp.b3},
                     [=](Tape* t) { return classify(t, features, cp, smooth); }});
  }

  struct Variant {
    const char* name;
    bool shared, concat;
  };
  for (const Variant v : {Variant{"", false, false}, Variant{"_shared_concat", true, true}}) {
    ModelConfig cfg = tiny_config(smooth);
    cfg.shared_decoders = v.shared;
    cfg.concat_hidden = v.concat;
    auto model = std::make_shared<Model>(init_model(cfg, mix_seed(seed, 2)));
    jitter(model->params(), rng);
    auto batch = std::make_shared<std::vector<Sample>>();
    for (std::uint64_t i = 0; i < 2; ++i) batch->push_back(random_sample(rng, i, 3, 4, 2));

    cases.push_back({std::string("stage_one_loss") + v.name,
                     all_tensors(model->params(), {ParamGroup::extractor, ParamGroup::classifier}),
                     [model, batch](Tape* t) { return stage_one_batch_loss(t, *model, *batch); }});
    cases.push_back({std::string("stage_two_loss") + v.name, all_tensors(model->params(), {ParamGroup::assessor}),
                     [model, batch](Tape* t) { return stage_two_batch_loss(t, *model, *batch); }});

    // Put tau midway between the two step scores so the exit step is stable
    // under the finite-difference nudges.
    const Sample& s = batch->front();
    Tensor state = model->embed(nullptr, s.news);
    std::vector<double> scores;
    for (std::size_t k = 1; k <= 2; ++k) {
      state = model->decode(nullptr, k, state, model->embed(nullptr, s.evidences[k - 1]));
      scores.push_back(model->confidence(nullptr, state).item());
    }
    const double tau = 0.5 * (scores[0] + scores[1]);
    // The targets are detached during training; hold them fixed here too.
    auto targets = std::make_shared<std::vector<double>>();
    single_stage_sample_loss(nullptr, *model, batch->front(), tau, 0.7, targets.get());
    cases.push_back({std::string("single_stage_loss") + v.name,
                     all_tensors(model->params(), {ParamGroup::extractor, ParamGroup::classifier, ParamGroup::assessor}),
                     [model, batch, tau, targets](Tape* t) {
                       return single_stage_sample_loss(t, *model, batch->front(), tau, 0.7, nullptr, nullptr, nullptr,
                                                       *targets);
                     }});
  }
  return cases;
}

bool VerifyReport::ok() const {
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.ok(); });
}

SuiteResult verify_gradients(const VerifyOptions& options) {
  SuiteResult r;
  r.name = "gradients";
  for (std::size_t i = 0; i < options.gradient_seeds; ++i) {
    const std::uint64_t seed = mix_seed(options.seed, i);
    auto cases = gradient_cases(seed);
    if (options.inject_fault) cases.push_back(faulty_gradient_case(seed));
    for (auto& c : cases) {
      const double err = grad_check(c.loss, c.inputs);
      note(r, err < options.gradient_tolerance,
           c.name + " seed#" + std::to_string(i) + " rel_err=" + std::to_string(err));
    }
  }
  return r;
}

SuiteResult verify_inference(const VerifyOptions& options) {
  SuiteResult r;
  r.name = "inference_differential";
  std::vector<ModelConfig> configs;
  ModelConfig base;  // desk scale
  configs.push_back(base);
  base.shared_decoders = true;
  configs.push_back(base);
  base.shared_decoders = false;
  base.concat_hidden = true;
  configs.push_back(base);
  base.concat_hidden = false;
  base.heads = 2;
  base.use_adapter = false;
  configs.push_back(base);

  Rng rng(mix_seed(options.seed, 0x1f3));
  const std::size_t per_model = (options.inference_pairs + configs.size() - 1) / configs.size();
  std::size_t done = 0;
  for (std::size_t m = 0; m < configs.size() && done < options.inference_pairs; ++m) {
    const Model model = init_model(configs[m], mix_seed(options.seed, 100 + m));
    for (std::size_t i = 0; i < per_model && done < options.inference_pairs; ++i, ++done) {
      const ModelConfig& c = configs[m];
      const Sample s = random_sample(rng, done, c.tokens, c.width, c.max_evidence);
      const InferenceTrace full = infer_oracle(s, model, 1.0);
      // Mix uniform thresholds with the boundary values and exact score ties.
      double tau = 0.0;
      switch (rng.index(4)) {
        case 0: tau = rng.uniform(); break;
        case 1: tau = full.steps[rng.index(full.steps.size())].confidence; break;
        case 2: {
          const double lo = std::min_element(full.steps.begin(), full.steps.end(), [](auto& a, auto& b) {
                              return a.confidence < b.confidence;
                            })->confidence;
          const double hi = std::max_element(full.steps.begin(), full.steps.end(), [](auto& a, auto& b) {
                              return a.confidence < b.confidence;
                            })->confidence;
          tau = rng.uniform(lo, hi);
          break;
        }
        default: tau = rng.bernoulli(0.5) ? 0.0 : 1.0;
      }
      const InferenceTrace fast = infer(s, model, tau);
      const InferenceTrace slow = infer_oracle(s, model, tau);
      const bool work_ok = fast.decoder_evaluations == (fast.exit_step ? *fast.exit_step : c.max_evidence);
      note(r, same_trace(fast, slow) && work_ok, "pair " + std::to_string(done) + " tau=" + std::to_string(tau));
    }
  }
  return r;
}

SuiteResult verify_roundtrips(const VerifyOptions& options) {
  SuiteResult r;
  r.name = "format_roundtrips";
  for (std::size_t i = 0; i < options.roundtrip_cases; ++i) {
    const std::uint64_t seed = mix_seed(options.seed, 0x5701 + i);
    SyntheticSpec spec;
    spec.sample_count = 24;
    spec.tokens = 4 + i % 3;
    spec.width = 6;
    spec.max_evidence = 1 + i % 4;
    spec.seed = seed;
    const Dataset data = gen_synthetic(spec);
    const std::string bytes = bytes_of([&](std::ostream& o) { write_store(o, data); });
    std::istringstream in(bytes);
    const Dataset back = read_store(in);
    const std::string again = bytes_of([&](std::ostream& o) { write_store(o, back); });
    note(r, bytes == again, "store round-trip case " + std::to_string(i));

    ModelConfig cfg = tiny_config(static_cast<Activation>(i % 3));
    cfg.shared_decoders = i % 2 == 1;
    cfg.concat_hidden = i % 4 >= 2;
    cfg.use_adapter = i % 3 != 0;
    Model model = init_model(cfg, seed);
    round_to_storage_precision(model.params());
    const CheckpointMeta meta{0.25 + 0.05 * static_cast<double>(i), seed};
    const std::string ck = bytes_of([&](std::ostream& o) { save_checkpoint(o, model, meta); });
    std::istringstream ck_in(ck);
    const Checkpoint loaded = load_checkpoint(ck_in);
    const std::string ck_again = bytes_of([&](std::ostream& o) { save_checkpoint(o, loaded.model, loaded.meta); });
    bool params_equal = true;
    const auto a = list_parameters(model.params());
    const auto b = list_parameters(loaded.model.params());
    params_equal = a.size() == b.size();
    for (std::size_t k = 0; params_equal && k < a.size(); ++k) params_equal = bitwise_equal(a[k].tensor, b[k].tensor);
    note(r, ck == ck_again && params_equal, "checkpoint round-trip case " + std::to_string(i));

    if (i == 0) {
      std::string bad = bytes;
      bad[0] = 'X';
      note(r, throws_as<FormatError>([&] { std::istringstream s(bad); read_store(s); }), "store bad magic");
      bad = bytes;
      bad[4] = 9;
      note(r, throws_as<VersionError>([&] { std::istringstream s(bad); read_store(s); }), "store bad version");
      note(r, throws_as<TruncationError>([&] {
             std::istringstream s(bytes.substr(0, bytes.size() - 3));
             read_store(s);
           }),
           "store truncation");
      bad = ck;
      bad[1] = 'X';
      note(r, throws_as<FormatError>([&] { std::istringstream s(bad); load_checkpoint(s); }), "checkpoint bad magic");
      bad = ck;
      bad[4] = 7;
      note(r, throws_as<VersionError>([&] { std::istringstream s(bad); load_checkpoint(s); }),
           "checkpoint bad version");
      note(r, throws_as<TruncationError>([&] {
             std::istringstream s(ck.substr(0, ck.size() - 1));
             load_checkpoint(s);
           }),
           "checkpoint truncation");
    }
  }
  return r;
}

SuiteResult verify_metrics(const VerifyOptions& options) {
  SuiteResult r;
  r.name = "metric_oracles";
  Rng rng(mix_seed(options.seed, 0xa0c));
  for (std::size_t i = 0; i < options.metric_instances; ++i) {
    const std::size_t n = 2 + rng.index(49);
    std::vector<double> scores(n);
    std::vector<int> labels(n), preds(n);
    // Coarse scores so ties are common.
    for (std::size_t j = 0; j < n; ++j) {
      scores[j] = static_cast<double>(rng.index(8)) / 8.0;
      labels[j] = rng.bernoulli(0.5) ? 1 : 0;
      preds[j] = rng.bernoulli(0.5) ? 1 : 0;
    }
    labels[0] = 0;
    labels[1] = 1;
    double wins = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (labels[a] != 1 || labels[b] != 0) continue;
        pairs += 1.0;
        wins += scores[a] > scores[b] ? 1.0 : scores[a] == scores[b] ? 0.5 : 0.0;
      }
    }
    const double brute = wins / pairs;
    note(r, std::fabs(auc(scores, labels) - brute) < 1e-9, "auc instance " + std::to_string(i));

    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (preds[j] == 1 && labels[j] == 1) ++tp;
      if (preds[j] == 0 && labels[j] == 0) ++tn;
      if (preds[j] == 1 && labels[j] == 0) ++fp;
      if (preds[j] == 0 && labels[j] == 1) ++fn;
    }
    auto f1 = [](double t, double f_pos, double f_neg) {
      return 2 * t + f_pos + f_neg == 0 ? 0.0 : 2 * t / (2 * t + f_pos + f_neg);
    };
    const double expect_f1 = 0.5 * (f1(tp, fp, fn) + f1(tn, fn, fp));
    const double expect_acc = static_cast<double>(tp + tn) / static_cast<double>(n);
    note(r, macro_f1(preds, labels) == expect_f1 && accuracy(preds, labels) == expect_acc,
         "f1/accuracy instance " + std::to_string(i));
  }
  {
    const std::vector<double> s{0.9, 0.8, 0.7, 0.1};
    const std::vector<int> y{1, 0, 1, 0};
    note(r, std::fabs(auc(s, y) - 0.75) < 1e-12, "auc worked example");
    const std::vector<int> p{1, 1, 0, 0}, l{1, 0, 0, 1};
    note(r, macro_f1(p, l) == 0.5 && accuracy(p, l) == 0.5, "macro-F1 worked example");
  }
  return r;
}

SuiteResult verify_monotonicity(const VerifyOptions& options) {
  SuiteResult r;
  r.name = "threshold_monotonicity";
  ModelConfig cfg;
  const Model model = init_model(cfg, mix_seed(options.seed, 0x303));
  Rng rng(mix_seed(options.seed, 0x304));
  std::vector<Sample> samples;
  for (std::uint64_t i = 0; i < 48; ++i) samples.push_back(random_sample(rng, i, cfg.tokens, cfg.width, cfg.max_evidence));

  std::vector<InferenceTrace> full;
  for (const auto& s : samples) full.push_back(infer_oracle(s, model, 1.0));

  std::vector<double> grid = default_tau_grid();
  grid.insert(grid.begin(), 0.0);
  grid.push_back(1.0);
  double previous = 2.0;
  bool monotone = true, bitwise = true;
  for (double tau : grid) {
    const BatchResult b = batch_infer(samples, model, tau);
    monotone = monotone && b.summary.termination_ratio <= previous;
    previous = b.summary.termination_ratio;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (const auto& st : b.traces[i].steps) {
        const auto& ref = full[i].steps[st.step - 1];
        bitwise = bitwise && std::memcmp(&st.prediction, &ref.prediction, sizeof(double)) == 0 &&
                  std::memcmp(&st.confidence, &ref.confidence, sizeof(double)) == 0;
      }
    }
    if (tau == 1.0) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& t = full[i];
        std::size_t best = 0;
        for (std::size_t k = 1; k < t.steps.size(); ++k) {
          if (t.steps[k].confidence > t.steps[best].confidence) best = k;
        }
        correct += (t.steps[best].prediction >= kDecisionThreshold ? 1 : 0) == t.label;
      }
      note(r, b.summary.accuracy == static_cast<double>(correct) / static_cast<double>(samples.size()) &&
                  b.summary.termination_ratio == 0.0,
           "tau=1 equals best-step fallback");
    }
    if (tau == 0.0) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        correct += (full[i].steps[0].prediction >= kDecisionThreshold ? 1 : 0) == full[i].label;
      }
      note(r, b.summary.accuracy == static_cast<double>(correct) / static_cast<double>(samples.size()) &&
                  b.summary.exit_histogram[0] == samples.size(),
           "tau=0 equals step-1 prediction");
    }
  }
  note(r, monotone, "termination ratio non-increasing over the grid");
  note(r, bitwise, "per-step outputs independent of tau");
  return r;
}

VerifyReport run_verification(const VerifyOptions& options) {
  VerifyReport report;
  report.suites.push_back(verify_gradients(options));
  report.suites.push_back(verify_inference(options));
  report.suites.push_back(verify_roundtrips(options));
  report.suites.push_back(verify_metrics(options));
  report.suites.push_back(verify_monotonicity(options));
  return report;
}

void write_report(std::ostream& out, const VerifyReport& report) {
  for (const auto& s : report.suites) {
    out << "suite=" << s.name << " passed=" << s.passed << " total=" << s.total
        << " status=" << (s.ok() ? "PASS" : "FAIL") << '\n';
    for (const auto& f : s.failures) out << "  failed: " << f << '\n';
  }
  out << "overall=" << (report.ok() ? "PASS" : "FAIL") << '\n';
}

}  // namespace see
