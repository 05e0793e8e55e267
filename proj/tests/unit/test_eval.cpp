#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "see/data.hpp"
#include "see/error.hpp"
#include "see/eval.hpp"

using namespace see;

namespace {

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double credit = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        credit += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return credit / pairs;
}

}  // namespace

TEST(Metrics, AccuracyAndF1Examples) {
  const std::vector<int> y{1, 1, 0, 0}, p{1, 0, 0, 0}, ones{1, 1, 1, 1};
  EXPECT_EQ(accuracy(p, y), 0.75);
  // class 1: 2/3, class 0: 0.8
  EXPECT_NEAR(macro_f1(p, y), (2.0 / 3.0 + 0.8) / 2.0, 1e-15);
  EXPECT_NEAR(macro_f1(ones, y), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(macro_f1(y, y), 1.0);
  const Confusion c = confusion(p, y);
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.tn, 2u);
  EXPECT_EQ(c.fp, 0u);
  EXPECT_THROW(accuracy(p, std::vector<int>{1}), DimensionError);
}

TEST(Metrics, AucExamples) {
  EXPECT_EQ(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
  EXPECT_EQ(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int>{0, 1, 1}), 0.5);
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), DataError);
}

TEST(Metrics, AucMatchesPairCount) {
  oracle::for_all(41, 100, [](Rng& rng, std::size_t) {
    const std::size_t n = 2 + rng.index(40);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.index(6)) / 5.0;  // coarse, so ties are common
      y[i] = static_cast<int>(rng.index(2));
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(auc(s, y), brute_auc(s, y), 1e-12);
  });
}

TEST(Metrics, PermutationInvariant) {
  oracle::for_all(42, 50, [](Rng& rng, std::size_t) {
    const std::size_t n = 4 + rng.index(30);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform();
      y[i] = static_cast<int>(i % 2);
    }
    const MetricsReport before = evaluate(s, y);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<double> s2(n);
    std::vector<int> y2(n);
    for (std::size_t i = 0; i < n; ++i) {
      s2[i] = s[order[i]];
      y2[i] = y[order[i]];
    }
    const MetricsReport after = evaluate(s2, y2);
    EXPECT_EQ(before.accuracy, after.accuracy);
    EXPECT_EQ(before.macro_f1, after.macro_f1);
    EXPECT_NEAR(before.auc, after.auc, 1e-15);
  });
}

TEST(Metrics, EvaluateBinarizesAtHalf) {
  const MetricsReport r = evaluate(std::vector<double>{0.5, 0.49, 0.9, 0.1}, std::vector<int>{1, 0, 1, 0});
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.n, 4u);
  EXPECT_EQ(r.counts.tp, 2u);
}

TEST(Sweep, DefaultGrid) {
  const auto g = default_tau_grid();
  ASSERT_EQ(g.size(), 46u);
  EXPECT_EQ(g.front(), 0.5);
  EXPECT_NEAR(g.back(), 0.95, 1e-12);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 0.01, 1e-12);
  EXPECT_EQ(tau_grid(0.0, 1.0, 0.25).size(), 5u);
  EXPECT_THROW(tau_grid(0.6, 0.5, 0.01), ConfigError);
  EXPECT_THROW(tau_grid(0.5, 0.6, 0.0), ConfigError);
}

TEST(Sweep, TiesGoToSmallestTau) {
  SyntheticSpec spec;
  spec.sample_count = 40;
  spec.tokens = 3;
  spec.width = 4;
  spec.max_evidence = 3;
  const Dataset d = gen_synthetic(spec);
  ModelConfig c;
  c.tokens = 3;
  c.width = 4;
  c.max_evidence = 3;
  c.ffn_hidden = 8;
  c.mlp_hidden = 2;
  Model m = init_model(c, 1);
  // Confidence is sigmoid(-10) everywhere, so every tau above it behaves identically.
  for (double& w : m.params().assessor.weight.mutable_values()) w = 0.0;
  m.params().assessor.bias.mutable_values()[0] = -10.0;
  const auto grid = default_tau_grid();
  const SweepCurve curve = sweep_tau(d.samples, m, grid);
  EXPECT_EQ(curve.best_tau, 0.5);
  ASSERT_EQ(curve.points.size(), 46u);
  for (const auto& p : curve.points) EXPECT_EQ(p.accuracy, curve.points[0].accuracy);
  const std::vector<double> unsorted{0.6, 0.5}, outside{0.5, 1.2};
  EXPECT_THROW(sweep_tau(d.samples, m, unsorted), ConfigError);
  EXPECT_THROW(sweep_tau(d.samples, m, outside), ConfigError);
  std::ostringstream out;
  write_curve(out, curve);
  std::istringstream in(out.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("tau ", 0) == 0) continue;
    std::istringstream cols(line);
    std::size_t fields = 0;
    std::string f;
    while (cols >> f) ++fields;
    EXPECT_EQ(fields, 3u + 3u + 1u);
    ++rows;
  }
  EXPECT_EQ(rows, 46u);
}
