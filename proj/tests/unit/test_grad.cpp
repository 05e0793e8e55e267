#include <gtest/gtest.h>

#include "oracles.hpp"
#include "see/grad_check.hpp"
#include "see/model.hpp"
#include "see/ops.hpp"
#include "see/verify.hpp"

using namespace see;

TEST(GradCheck, SumOfSquares) {
  Rng rng(1);
  Tensor x = oracle::random_tensor(rng, {9}, true);
  std::vector<Tensor> inputs{x};
  EXPECT_LT(grad_check([&](Tape* t) { return sum(t, mul(t, x, x)); }, inputs), 1e-6);
}

TEST(GradCheck, SigmoidOfDot) {
  Rng rng(2);
  Tensor a = oracle::random_tensor(rng, {6}, true), b = oracle::random_tensor(rng, {6}, true);
  std::vector<Tensor> inputs{a, b};
  EXPECT_LT(grad_check([&](Tape* t) { return sigmoid(t, dot(t, a, b)); }, inputs), 1e-6);
}

TEST(GradCheck, ClassificationLossThroughOneDecoder) {
  ModelConfig cfg;
  cfg.tokens = 3;
  cfg.width = 4;
  cfg.max_evidence = 1;
  cfg.ffn_hidden = 16;
  cfg.mlp_hidden = 2;
  Model m = init_model(cfg, 7);
  Rng rng(3);
  const Tensor news = oracle::random_tensor(rng, {3, 4}), ev = oracle::random_tensor(rng, {3, 4});
  std::vector<Tensor> inputs;
  for (auto& p : list_parameters(m.params())) inputs.push_back(p.tensor);
  auto loss = [&](Tape* t) {
    const Tensor r = m.decode(t, 1, m.embed(t, news), m.embed(t, ev));
    const Tensor states[] = {r};
    return binary_cross_entropy(t, m.predict(t, states), 1);
  };
  EXPECT_LT(grad_check(loss, inputs), 1e-4);
}

TEST(GradCheck, EveryPrimitiveAndComposite) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (auto& c : gradient_cases(seed)) {
      EXPECT_LT(grad_check(c.loss, c.inputs), 1e-4) << c.name << " seed " << seed;
    }
  }
}

TEST(GradCheck, CasesCoverThePrimitiveSet) {
  std::vector<std::string> names;
  for (auto& c : gradient_cases(0)) names.push_back(c.name);
  for (const char* required : {"matmul", "softmax_rows", "layer_norm", "mean_pool_tokens", "sigmoid", "gelu",
                               "attention_h1", "decoder_block", "assessor", "classifier", "stage_one_loss",
                               "stage_two_loss", "single_stage_loss", "binary_cross_entropy_y1", "abs"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), required), names.end()) << required;
  }
}

TEST(GradCheck, SignFlippedBackwardRuleIsCaught) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GradCase c = faulty_gradient_case(seed);
    EXPECT_GT(grad_check(c.loss, c.inputs), 1e-2) << "seed " << seed;
  }
}

TEST(GradCheck, VerifySuiteFailsWithInjectedFault) {
  VerifyOptions o;
  o.gradient_seeds = 1;
  o.inject_fault = true;
  const SuiteResult r = verify_gradients(o);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.total - r.passed, 1u);
  ASSERT_FALSE(r.failures.empty());
  EXPECT_NE(r.failures.front().find("faulty_double"), std::string::npos);
}

TEST(GradCheck, LeavesGradientsCleared) {
  Rng rng(4);
  Tensor x = oracle::random_tensor(rng, {3}, true);
  std::vector<Tensor> inputs{x};
  grad_check([&](Tape* t) { return sum(t, x); }, inputs);
  EXPECT_FALSE(x.has_grad());
}
