#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "see/data.hpp"
#include "see/error.hpp"
#include "see/perturb.hpp"

using namespace see;

namespace {

Tensor block(double v) { return Tensor::filled({1, 2}, v); }

Sample queue(std::size_t real, std::size_t n) {
  Sample s;
  s.id = 3;
  s.label = 1;
  s.news = block(-1);
  std::vector<Tensor> e;
  for (std::size_t i = 0; i < real; ++i) e.push_back(block(static_cast<double>(i + 1)));
  auto padded = pad_or_truncate(e, n, pad_block(1, 2));
  s.evidences = padded.evidences;
  s.real_count = padded.real_count;
  return s;
}

std::vector<double> marks(const Sample& s) {
  std::vector<double> out;
  for (const auto& e : s.evidences) out.push_back(e.at(0));
  return out;
}

std::vector<Perturbation> every_mode(std::uint64_t seed) {
  return parse_perturbation_list(
      "most_related_swapped,all_shuffled,reversed,most_related_void,most_related_missing,limited:1,limited:3", seed);
}

}  // namespace

TEST(Perturb, WorkedExamples) {
  const Sample s = queue(4, 4);
  const std::vector<Tensor> pool{block(9)};
  EXPECT_EQ(marks(apply(parse_perturbation("reversed"), s, pool).sample), (std::vector<double>{4, 3, 2, 1}));
  const auto one = apply(parse_perturbation("limited:1"), s, pool).sample;
  EXPECT_EQ(marks(one), (std::vector<double>{1, 0, 0, 0}));
  EXPECT_EQ(one.real_count, 1u);
  const auto missing = apply(parse_perturbation("most_related_missing"), queue(2, 4), pool).sample;
  EXPECT_EQ(marks(missing), (std::vector<double>{2, 0, 0, 0}));
  EXPECT_EQ(missing.real_count, 1u);
  EXPECT_EQ(marks(apply(parse_perturbation("most_related_void"), s, pool).sample), (std::vector<double>{9, 2, 3, 4}));
  EXPECT_EQ(marks(apply(parse_perturbation("reversed"), queue(2, 4), pool).sample), (std::vector<double>{2, 1, 0, 0}));
}

TEST(Perturb, SwapChangesLeadOnly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = marks(apply(parse_perturbation("most_related_swapped", seed), queue(4, 5), {}).sample);
    EXPECT_NE(std::vector<double>(m.begin(), m.begin() + 3), (std::vector<double>{1, 2, 3}));
    std::vector<double> lead(m.begin(), m.begin() + 3);
    std::sort(lead.begin(), lead.end());
    EXPECT_EQ(lead, (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(m[3], 4);
    EXPECT_EQ(m[4], 0);
  }
}

TEST(Perturb, ReorderingModesPreserveMultisetAndCount) {
  oracle::for_all(31, 60, [](Rng& rng, std::size_t i) {
    const std::size_t n = 1 + rng.index(6), real = rng.index(n + 1);
    Sample s = queue(real, n);
    s.id = i;
    for (const char* mode : {"most_related_swapped", "all_shuffled", "reversed"}) {
      const auto out = apply(parse_perturbation(mode, rng.next_u64()), s, {}).sample;
      auto a = marks(out), b = marks(s);
      EXPECT_EQ(out.evidences.size(), n);
      EXPECT_EQ(out.real_count, real);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      EXPECT_EQ(a, b) << mode;
    }
  });
}

TEST(Perturb, CardinalityAndUntouchedFields) {
  const std::vector<Tensor> pool{block(7), block(8)};
  oracle::for_all(32, 40, [&](Rng& rng, std::size_t) {
    const std::size_t n = 1 + rng.index(6), real = rng.index(n + 1);
    const Sample s = queue(real, n);
    for (const auto& p : every_mode(rng.next_u64())) {
      const auto out = apply(p, s, pool);
      EXPECT_EQ(out.sample.evidences.size(), n) << to_string(p);
      EXPECT_TRUE(out.sample.news.same_storage(s.news));
      EXPECT_EQ(out.sample.label, s.label);
      EXPECT_EQ(out.sample.id, s.id);
      for (std::size_t k = out.sample.real_count; k < n; ++k) EXPECT_EQ(out.sample.evidences[k].at(0), 0.0);
    }
  });
}

TEST(Perturb, ReversedTwiceIsIdentity) {
  const Sample s = queue(5, 6);
  const auto p = parse_perturbation("reversed");
  EXPECT_EQ(marks(apply(p, apply(p, s, {}).sample, {}).sample), marks(s));
}

TEST(Perturb, WarningsWhenEvidenceIsMissing) {
  const std::vector<Tensor> pool{block(7)};
  const Sample empty = queue(0, 3);
  EXPECT_TRUE(apply(parse_perturbation("most_related_void"), empty, pool).warning);
  EXPECT_TRUE(apply(parse_perturbation("most_related_missing"), empty, pool).warning);
  EXPECT_TRUE(apply(parse_perturbation("most_related_swapped"), queue(1, 3), pool).warning);
  EXPECT_FALSE(apply(parse_perturbation("reversed"), queue(2, 3), pool).warning);
  EXPECT_THROW(apply(parse_perturbation("most_related_void"), queue(2, 3), {}), ConfigError);
}

TEST(Perturb, Parsing) {
  EXPECT_EQ(parse_perturbation("limited:12").limit, 12u);
  for (const char* bad : {"limited:0", "limited:", "limited:x", "limited:2x", "shuffle", ""}) {
    EXPECT_THROW(parse_perturbation(bad), ConfigError) << bad;
  }
  for (const auto& p : every_mode(0)) EXPECT_EQ(to_string(parse_perturbation(to_string(p))), to_string(p));
  EXPECT_EQ(parse_perturbation_list("reversed,limited:1").size(), 2u);
}

TEST(Perturb, SuiteRowsStartWithBaseline) {
  SyntheticSpec spec;
  spec.sample_count = 30;
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
  const Model m = init_model(c, 0);
  const auto modes = parse_perturbation_list("reversed,limited:1");
  const auto pool = build_noise_pool(d.samples);
  const auto rows = run_perturbation_suite(d.samples, m, 0.5, modes, pool);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].mode, "baseline");
  EXPECT_EQ(rows[1].mode, "reversed");
  EXPECT_EQ(rows[2].mode, "limited:1");
  std::ostringstream out;
  write_perturbation_table(out, rows);
  const std::string table = out.str();
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  std::size_t real = 0;
  for (const auto& s : d.samples) real += s.real_count;
  EXPECT_EQ(pool.size(), real);
}
