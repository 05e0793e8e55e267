#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "see/error.hpp"
#include "see/ops.hpp"

using namespace see;

TEST(Matmul, IdentityAndHandArithmetic) {
  const Tensor i = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor b = Tensor::matrix({{3, 4}, {5, 6}});
  EXPECT_TRUE(bitwise_equal(matmul(nullptr, i, b), b));
  EXPECT_EQ(matmul(nullptr, Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})).item(), 11.0);
}

TEST(Matmul, MatchesTripleLoopExactly) {
  oracle::for_all(1, 25, [](Rng& rng, std::size_t) {
    const Tensor a = oracle::random_tensor(rng, {3, 4});
    const Tensor b = oracle::random_tensor(rng, {4, 2});
    EXPECT_EQ(oracle::to_mat(matmul(nullptr, a, b)), oracle::matmul(oracle::to_mat(a), oracle::to_mat(b)));
  });
}

TEST(Matmul, ShapeMismatchNamesShapes) {
  try {
    matmul(nullptr, Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
  }
}

TEST(Softmax, SymmetricAndStable) {
  const Tensor u = softmax_rows(nullptr, Tensor::matrix({{0, 0, 0}}));
  for (double v : u.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const Tensor s = softmax_rows(nullptr, Tensor::matrix({{1000, 0}}));
  EXPECT_TRUE(all_finite(s));
  EXPECT_NEAR(s.at(0), 1.0, 1e-15);
  EXPECT_NEAR(s.at(1), 0.0, 1e-15);
}

TEST(Softmax, MatchesExtendedPrecision) {
  const Tensor s = softmax_rows(nullptr, Tensor::matrix({{1, 2, 3}}));
  const auto ref = oracle::softmax_ld({1, 2, 3});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(std::fabs(s.at(i) - static_cast<double>(ref[i])), 1e-12);
}

TEST(Softmax, RowsAreDistributions) {
  oracle::for_all(2, 50, [](Rng& rng, std::size_t) {
    const std::size_t m = 1 + rng.index(5), n = 1 + rng.index(7);
    const Tensor s = softmax_rows(nullptr, oracle::random_tensor(rng, {m, n}, false, -30, 30));
    for (std::size_t r = 0; r < m; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        EXPECT_GE(s.at(r, c), 0.0);
        total += s.at(r, c);
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  });
}

TEST(LayerNorm, ConstantRowCollapsesToZero) {
  const Tensor y = layer_norm(nullptr, Tensor::matrix({{2, 2, 2}}), Tensor::filled({3}, 1.0), Tensor::zeros({3}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, TwoPointStandardization) {
  const Tensor y = layer_norm(nullptr, Tensor::matrix({{1, 3}}), Tensor::filled({2}, 1.0), Tensor::zeros({2}), 1e-15);
  EXPECT_NEAR(y.at(0), -1.0, 1e-12);
  EXPECT_NEAR(y.at(1), 1.0, 1e-12);
}

TEST(LayerNorm, MomentsAndOracle) {
  oracle::for_all(3, 20, [](Rng& rng, std::size_t) {
    const Tensor x = oracle::random_tensor(rng, {4, 8}, false, -5, 5);
    const Tensor y = layer_norm(nullptr, x, Tensor::filled({8}, 1.0), Tensor::zeros({8}));
    for (std::size_t r = 0; r < 4; ++r) {
      double in_mean = 0.0, in_var = 0.0;
      for (std::size_t c = 0; c < 8; ++c) in_mean += x.at(r, c) / 8;
      for (std::size_t c = 0; c < 8; ++c) in_var += (x.at(r, c) - in_mean) * (x.at(r, c) - in_mean) / 8;
      double mean = 0.0, var = 0.0;
      for (std::size_t c = 0; c < 8; ++c) mean += y.at(r, c);
      mean /= 8;
      for (std::size_t c = 0; c < 8; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
      var /= 8;
      EXPECT_LT(std::fabs(mean), 1e-9);
      EXPECT_NEAR(var, in_var / (in_var + kLayerNormEps), 1e-12);
    }
    const Tensor g = oracle::random_tensor(rng, {8}), b = oracle::random_tensor(rng, {8});
    const auto ref = oracle::layer_norm(oracle::to_mat(x), oracle::to_vec(g), oracle::to_vec(b), kLayerNormEps);
    const auto got = oracle::to_mat(layer_norm(nullptr, x, g, b));
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(got[r][c], ref[r][c], 1e-12);
  });
}

TEST(LayerNorm, RejectsDegenerateWidthAndEps) {
  EXPECT_THROW(layer_norm(nullptr, Tensor::matrix({{1}}), Tensor::filled({1}, 1.0), Tensor::zeros({1})),
               DimensionError);
  EXPECT_THROW(layer_norm(nullptr, Tensor::matrix({{1, 2}}), Tensor::filled({2}, 1.0), Tensor::zeros({2}), 0.0),
               ConfigError);
}

TEST(MeanPool, HandCasesAndColumnOracle) {
  const Tensor one = Tensor::matrix({{4, 5, 6}});
  EXPECT_EQ(oracle::to_vec(mean_pool_tokens(nullptr, one)), oracle::to_vec(Tensor::vector({4, 5, 6})));
  EXPECT_EQ(oracle::to_vec(mean_pool_tokens(nullptr, Tensor::matrix({{1, 2}, {3, 4}}))), (std::vector<double>{2, 3}));
  Rng rng(4);
  const Tensor x = oracle::random_tensor(rng, {7, 5});
  EXPECT_EQ(oracle::to_vec(mean_pool_tokens(nullptr, x)), oracle::mean_pool(oracle::to_mat(x)));
}

TEST(Sigmoid, ClosedFormsAndSaturation) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(std::log(3.0)), 0.75, 1e-15);
  const double hi = sigmoid(100.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_GT(hi, 1.0 - 1e-9);
  const double lo = sigmoid(-800.0);
  EXPECT_GT(lo, 0.0);
  const Tensor t = sigmoid(nullptr, Tensor::vector({-1000, 0, 1000}));
  for (double v : t.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Ops, FiniteInputsGiveFiniteOutputs) {
  oracle::for_all(5, 30, [](Rng& rng, std::size_t) {
    const Tensor x = oracle::random_tensor(rng, {3, 4}, false, -50, 50);
    const Tensor g = oracle::random_tensor(rng, {4});
    for (const Tensor& y : {softmax_rows(nullptr, x), layer_norm(nullptr, x, g, g), gelu(nullptr, x),
                            see::tanh(nullptr, x), relu(nullptr, x), sigmoid(nullptr, x), abs(nullptr, x),
                            mean_pool_tokens(nullptr, x), matmul(nullptr, x, transpose(nullptr, x))}) {
      EXPECT_TRUE(all_finite(y));
    }
  });
}

TEST(Ops, StructuralOps) {
  const Tensor x = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(oracle::to_vec(select_row(nullptr, x, 1)), (std::vector<double>{4, 5, 6}));
  EXPECT_EQ(oracle::to_mat(slice_cols(nullptr, x, 1, 3)), (oracle::Mat{{2, 3}, {5, 6}}));
  EXPECT_EQ(oracle::to_mat(transpose(nullptr, x)), (oracle::Mat{{1, 4}, {2, 5}, {3, 6}}));
  const Tensor parts[] = {x, Tensor::matrix({{7}, {8}})};
  EXPECT_EQ(oracle::to_mat(concat_cols(nullptr, parts)), (oracle::Mat{{1, 2, 3, 7}, {4, 5, 6, 8}}));
  EXPECT_EQ(oracle::to_vec(concat(nullptr, parts)), (std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(oracle::to_mat(add_bias(nullptr, x, Tensor::vector({1, 1, 1}))), (oracle::Mat{{2, 3, 4}, {5, 6, 7}}));
  EXPECT_EQ(sum(nullptr, x).item(), 21.0);
  EXPECT_EQ(dot(nullptr, Tensor::vector({1, 2}), Tensor::vector({3, 4})).item(), 11.0);
  EXPECT_THROW(select_row(nullptr, x, 2), IndexError);
  EXPECT_THROW(reshape(nullptr, x, {4}), DimensionError);
}

TEST(Bce, ClosedForms) {
  EXPECT_NEAR(binary_cross_entropy(nullptr, Tensor::scalar(0.5), 1).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(binary_cross_entropy(nullptr, Tensor::scalar(0.25), 1).item(), std::log(4.0), 1e-12);
  EXPECT_LT(binary_cross_entropy(nullptr, Tensor::scalar(1e-12), 0).item(), 1e-6);
  EXPECT_TRUE(std::isfinite(binary_cross_entropy(nullptr, Tensor::scalar(0.0), 1).item()));
  EXPECT_THROW(binary_cross_entropy(nullptr, Tensor::scalar(0.5), 2), LabelError);
}

TEST(Activation, ParseRoundTrip) {
  for (auto a : {Activation::gelu, Activation::tanh, Activation::relu}) EXPECT_EQ(parse_activation(to_string(a)), a);
  EXPECT_THROW(parse_activation("swish"), ConfigError);
}
