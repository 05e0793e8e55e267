#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "see/data.hpp"
#include "see/eval.hpp"
#include "see/model.hpp"

namespace see {

enum class PerturbMode {
  most_related_swapped,
  all_shuffled,
  reversed,
  most_related_void,
  most_related_missing,
  limited,
};

struct Perturbation {
  PerturbMode mode = PerturbMode::reversed;
  std::uint64_t seed = 0;
  std::size_t limit = 0;  // used by limited(n); n >= 1
};

// Accepts the CLI spellings: most_related_swapped, all_shuffled, reversed,
// most_related_void, most_related_missing, limited:<n>.
Perturbation parse_perturbation(std::string_view text, std::uint64_t seed = 0);
std::vector<Perturbation> parse_perturbation_list(std::string_view csv, std::uint64_t seed = 0);
std::string to_string(const Perturbation& p);

struct PerturbOutcome {
  Sample sample;
  // Set when the mode needed real evidences the sample does not have and the
  // sample was returned unchanged.
  bool warning = false;
};

// Test-time evidence adjustment. Never touches the news embedding or the
// label. Random choices are seeded from (p.seed, sample.id).
PerturbOutcome apply(const Perturbation& p, const Sample& sample, std::span<const Tensor> noise_pool);

// Evidence blocks of the given samples, used as irrelevant replacements.
std::vector<Tensor> build_noise_pool(std::span<const Sample> samples);

struct PerturbRow {
  std::string mode;
  MetricsReport metrics;
  double termination_ratio = 0.0;
  std::size_t warnings = 0;
};

// Evaluates the unmodified split first ("baseline"), then each mode in order.
std::vector<PerturbRow> run_perturbation_suite(std::span<const Sample> samples, const Model& model,
                                               double tau, std::span<const Perturbation> modes,
                                               std::span<const Tensor> noise_pool, unsigned threads = 1);

void write_perturbation_table(std::ostream& out, std::span<const PerturbRow> rows);

}  // namespace see
