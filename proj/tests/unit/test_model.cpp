#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "see/error.hpp"
#include "see/model.hpp"
#include "see/ops.hpp"

using namespace see;

namespace {

ModelConfig small(std::size_t heads = 1) {
  ModelConfig c;
  c.tokens = 3;
  c.width = 4;
  c.max_evidence = 3;
  c.heads = heads;
  c.ffn_hidden = 16;
  c.mlp_hidden = 2;
  return c;
}

AttentionParams random_projections(Rng& rng, std::size_t d) {
  return {oracle::random_tensor(rng, {d, d}), oracle::random_tensor(rng, {d, d}), oracle::random_tensor(rng, {d, d}),
          oracle::random_tensor(rng, {d, d})};
}

void zero_params(ModelParams& p) {
  for (auto& n : list_parameters(p))
    for (double& v : n.tensor.mutable_values()) v = 0.0;
}

}  // namespace

TEST(Attention, SingleKeyReturnsProjectedValue) {
  Rng rng(1);
  const auto proj = random_projections(rng, 4);
  const Tensor q = oracle::random_tensor(rng, {1, 4}), kv = oracle::random_tensor(rng, {1, 4});
  const auto expect = oracle::matmul(oracle::matmul(oracle::to_mat(kv), oracle::to_mat(proj.value)), oracle::to_mat(proj.output));
  const auto got = oracle::to_mat(attention(nullptr, q, kv, kv, proj, 1));
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(got[0][c], expect[0][c], 1e-14);
}

TEST(Attention, IdenticalKeysAverageValues) {
  Rng rng(2);
  AttentionParams proj = random_projections(rng, 4);
  proj.output = Tensor::matrix({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
  const Tensor q = oracle::random_tensor(rng, {3, 4});
  const Tensor k = Tensor::matrix({{1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}});
  const Tensor v = oracle::random_tensor(rng, {3, 4});
  const auto projected = oracle::matmul(oracle::to_mat(v), oracle::to_mat(proj.value));
  const auto mean = oracle::mean_pool(projected);
  const auto got = oracle::to_mat(attention(nullptr, q, k, v, proj, 1));
  for (const auto& row : got)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(row[c], mean[c], 1e-12);
}

TEST(Attention, MatchesLoopOracle) {
  for (std::size_t heads : {1, 2, 4}) {
    oracle::for_all(3 + heads, 10, [&](Rng& rng, std::size_t) {
      const auto proj = random_projections(rng, 4);
      const Tensor q = oracle::random_tensor(rng, {3, 4}), k = oracle::random_tensor(rng, {3, 4}),
                   v = oracle::random_tensor(rng, {3, 4});
      const auto ref = oracle::attention(oracle::to_mat(q), oracle::to_mat(k), oracle::to_mat(v), proj, heads);
      const auto got = oracle::to_mat(attention(nullptr, q, k, v, proj, heads));
      for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(got[r][c], ref[r][c], 1e-13);
    });
  }
}

TEST(Attention, ShapeAndHeadErrors) {
  Rng rng(4);
  const auto proj = random_projections(rng, 4);
  const Tensor a = Tensor::zeros({3, 4});
  EXPECT_THROW(attention(nullptr, a, Tensor::zeros({3, 5}), Tensor::zeros({3, 5}), proj, 1), DimensionError);
  EXPECT_THROW(attention(nullptr, a, a, a, proj, 3), ConfigError);
}

TEST(Decoder, ZeroParamsAreResidualIdentity) {
  for (auto act : {Activation::gelu, Activation::tanh, Activation::relu}) {
    ModelConfig cfg = small();
    cfg.activation = act;
    Model m = init_model(cfg, 1);
    zero_params(m.params());
    Rng rng(5);
    const Tensor state = oracle::random_tensor(rng, {3, 4}), ev = oracle::random_tensor(rng, {3, 4});
    for (std::size_t k = 1; k <= 3; ++k) EXPECT_TRUE(bitwise_equal(m.decode(nullptr, k, state, ev), state));
  }
}

TEST(Decoder, MatchesStraightLineOracle) {
  for (std::size_t heads : {1, 2}) {
    for (auto act : {Activation::gelu, Activation::tanh, Activation::relu}) {
      ModelConfig cfg = small(heads);
      cfg.activation = act;
      Model m = init_model(cfg, 10 + heads);
      Rng rng(6);
      // Move the norms off their initial values so every term matters.
      for (auto& p : list_parameters(m.params()))
        for (double& v : p.tensor.mutable_values()) v += rng.uniform(-0.3, 0.3);
      const Tensor state = oracle::random_tensor(rng, {3, 4}), ev = oracle::random_tensor(rng, {3, 4});
      for (std::size_t k = 1; k <= 3; ++k) {
        const auto ref = oracle::decoder(oracle::to_mat(state), oracle::to_mat(ev), m.params().decoders[k - 1], heads, act);
        const Tensor got = m.decode(nullptr, k, state, ev);
        ASSERT_EQ(got.shape(), (Shape{3, 4}));
        for (std::size_t r = 0; r < 3; ++r)
          for (std::size_t c = 0; c < 4; ++c) EXPECT_LT(std::fabs(got.at(r, c) - ref[r][c]), 1e-12);
      }
    }
  }
}

TEST(Decoder, StepOutOfRange) {
  Model m = init_model(small(), 1);
  const Tensor z = Tensor::zeros({3, 4});
  EXPECT_THROW(m.decode(nullptr, 0, z, z), IndexError);
  EXPECT_THROW(m.decode(nullptr, 4, z, z), IndexError);
}

TEST(Assessor, ClosedForms) {
  Rng rng(7);
  const Tensor r = oracle::random_tensor(rng, {3, 4});
  AssessorParams a{Tensor::zeros({4}), Tensor::scalar(0.0)};
  EXPECT_EQ(assess_confidence(nullptr, r, a).item(), 0.5);
  a.bias = Tensor::scalar(std::log(3.0));
  EXPECT_NEAR(assess_confidence(nullptr, r, a).item(), 0.75, 1e-15);
}

TEST(Assessor, MatchesCompositionOracle) {
  oracle::for_all(8, 20, [](Rng& rng, std::size_t) {
    const Tensor r = oracle::random_tensor(rng, {5, 4}, false, -3, 3);
    const AssessorParams a{oracle::random_tensor(rng, {4}), oracle::random_tensor(rng, {1})};
    EXPECT_NEAR(assess_confidence(nullptr, r, a).item(), oracle::confidence(oracle::to_mat(r), a), 1e-15);
  });
}

TEST(Classifier, ZeroWeightsGiveHalf) {
  Model m = init_model(small(), 2);
  zero_params(m.params());
  Rng rng(9);
  EXPECT_EQ(classify(nullptr, oracle::random_tensor(rng, {4}), m.params().classifier, Activation::gelu).item(), 0.5);
}

TEST(Classifier, OutputInOpenUnitInterval) {
  Model m = init_model(small(), 3);
  Rng rng(10);
  for (int i = 0; i < 1000; ++i) {
    const double y = classify(nullptr, oracle::random_tensor(rng, {4}, false, -20, 20), m.params().classifier,
                              Activation::gelu).item();
    EXPECT_GT(y, 0.0);
    EXPECT_LT(y, 1.0);
  }
}

TEST(Classifier, MatchesAffineChainOracle) {
  for (auto act : {Activation::gelu, Activation::tanh, Activation::relu}) {
    Model m = init_model(small(), 4);
    Rng rng(11);
    const Tensor f = oracle::random_tensor(rng, {4});
    EXPECT_LT(std::fabs(classify(nullptr, f, m.params().classifier, act).item() -
                        oracle::classify(oracle::to_vec(f), m.params().classifier, act)),
              1e-12);
  }
}

TEST(Classifier, WidthMismatch) {
  Model m = init_model(small(), 4);
  EXPECT_THROW(classify(nullptr, Tensor::zeros({5}), m.params().classifier, Activation::gelu), DimensionError);
}

TEST(Init, DeterministicAndNormsAtIdentity) {
  const Model a = init_model(small(), 42), b = init_model(small(), 42), c = init_model(small(), 43);
  const auto pa = list_parameters(a.params()), pb = list_parameters(b.params()), pc = list_parameters(c.params());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(bitwise_equal(pa[i].tensor, pb[i].tensor));
    any_diff = any_diff || !bitwise_equal(pa[i].tensor, pc[i].tensor);
    if (pa[i].name.find("gamma") != std::string::npos) {
      for (double v : pa[i].tensor.values()) EXPECT_EQ(v, 1.0);
    }
    if (pa[i].name.find("beta") != std::string::npos) {
      for (double v : pa[i].tensor.values()) EXPECT_EQ(v, 0.0);
    }
  }
  EXPECT_TRUE(any_diff);
}

TEST(Init, UniformBoundByFanIn) {
  const Model m = init_model(ModelConfig{}, 1);
  const double bound = 1.0 / std::sqrt(32.0);
  for (double v : m.params().decoders[0].self_attention.query.values()) EXPECT_LE(std::fabs(v), bound);
}

TEST(Init, RejectsBadConfig) {
  ModelConfig c = small();
  c.width = 0;
  EXPECT_THROW(init_model(c, 0), ConfigError);
}

TEST(Params, IndependentModeHasNDecoders) {
  const Model m = init_model(small(), 1);
  EXPECT_EQ(m.params().decoders.size(), 3u);
}

TEST(Params, SharedModeGrowsOnlyByStepEmbeddings) {
  ModelConfig c4 = ModelConfig{};
  c4.shared_decoders = true;
  c4.max_evidence = 4;
  ModelConfig c8 = c4;
  c8.max_evidence = 8;
  const auto n4 = parameter_count(init_model(c4, 0).params());
  const auto n8 = parameter_count(init_model(c8, 0).params());
  EXPECT_EQ(n8 - n4, 4 * c4.width);
}

TEST(Params, OneAssessorSharedAcrossSteps) {
  const Model m = init_model(small(), 1);
  std::size_t assessor_tensors = 0;
  for (const auto& p : list_parameters(m.params())) assessor_tensors += p.group == ParamGroup::assessor ? 1 : 0;
  EXPECT_EQ(assessor_tensors, 2u);
}

TEST(Model, ConcatModeZeroFillsAndWidens) {
  ModelConfig c = small();
  c.concat_hidden = true;
  Model m = init_model(c, 5);
  EXPECT_EQ(m.classifier_input_width(), 12u);
  Rng rng(12);
  const Tensor s1 = oracle::random_tensor(rng, {3, 4});
  const Tensor one[] = {s1};
  auto features = oracle::mean_pool(oracle::to_mat(s1));
  features.resize(12, 0.0);
  EXPECT_NEAR(m.predict(nullptr, one).item(), oracle::classify(features, m.params().classifier, c.activation), 1e-12);
}

TEST(Model, SharedModeAddsStepEmbedding) {
  ModelConfig c = small();
  c.shared_decoders = true;
  Model m = init_model(c, 6);
  Rng rng(13);
  const Tensor state = oracle::random_tensor(rng, {3, 4}), ev = oracle::random_tensor(rng, {3, 4});
  for (std::size_t k = 1; k <= 3; ++k) {
    const Tensor marked = add_bias(nullptr, ev, select_row(nullptr, m.params().step_embeddings, k - 1));
    const auto ref = oracle::decoder(oracle::to_mat(state), oracle::to_mat(marked), m.params().decoders[0], 1, c.activation);
    const Tensor got = m.decode(nullptr, k, state, ev);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t col = 0; col < 4; ++col) EXPECT_LT(std::fabs(got.at(r, col) - ref[r][col]), 1e-12);
  }
}

TEST(Model, EmbedChecksShapeAndAppliesAdapter) {
  Model m = init_model(small(), 7);
  EXPECT_THROW(m.embed(nullptr, Tensor::zeros({2, 4})), DimensionError);
  Rng rng(14);
  const Tensor raw = oracle::random_tensor(rng, {3, 4});
  const auto ref = oracle::affine(oracle::to_mat(raw), m.params().adapter->weight, m.params().adapter->bias);
  EXPECT_EQ(oracle::to_mat(m.embed(nullptr, raw)), ref);
  ModelConfig c = small();
  c.use_adapter = false;
  EXPECT_TRUE(init_model(c, 7).embed(nullptr, raw).same_storage(raw));
}

TEST(Model, CloneIsDeep) {
  Model a = init_model(small(), 8);
  Model b = a.clone();
  const auto pa = list_parameters(a.params()), pb = list_parameters(b.params());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_FALSE(pa[i].tensor.same_storage(pb[i].tensor));
    EXPECT_TRUE(bitwise_equal(pa[i].tensor, pb[i].tensor));
  }
}

TEST(Snapshot, DetectsChanges) {
  Model m = init_model(small(), 9);
  const ParamGroup groups[] = {ParamGroup::classifier};
  const auto snap = snapshot(m.params(), groups);
  EXPECT_TRUE(matches_snapshot(m.params(), groups, snap));
  m.params().assessor.bias.mutable_values()[0] += 1.0;
  EXPECT_TRUE(matches_snapshot(m.params(), groups, snap));
  double& v = m.params().classifier.b3.mutable_values()[0];
  v = std::nextafter(v, 1e9);
  EXPECT_FALSE(matches_snapshot(m.params(), groups, snap));
}
