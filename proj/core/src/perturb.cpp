#include "see/perturb.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "see/error.hpp"
#include "see/inference.hpp"
#include "see/random.hpp"

namespace see {
namespace {

Tensor pad_like(const Tensor& block) { return pad_block(block.rows(), block.cols()); }

}  // namespace

Perturbation parse_perturbation(std::string_view text, std::uint64_t seed) {
  Perturbation p;
  p.seed = seed;
  if (text == "most_related_swapped") p.mode = PerturbMode::most_related_swapped;
  else if (text == "all_shuffled") p.mode = PerturbMode::all_shuffled;
  else if (text == "reversed") p.mode = PerturbMode::reversed;
  else if (text == "most_related_void") p.mode = PerturbMode::most_related_void;
  else if (text == "most_related_missing") p.mode = PerturbMode::most_related_missing;
  else if (text.starts_with("limited:")) {
    p.mode = PerturbMode::limited;
    const std::string digits(text.substr(8));
    std::size_t used = 0;
    long long n = 0;
    try {
      n = std::stoll(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != digits.size() || digits.empty() || n < 1) {
      throw ConfigError("limited:<n> needs a positive integer, got '" + std::string(text) + "'");
    }
    p.limit = static_cast<std::size_t>(n);
  } else {
    throw ConfigError("unknown perturbation mode '" + std::string(text) + "'");
  }
  return p;
}

std::vector<Perturbation> parse_perturbation_list(std::string_view csv, std::uint64_t seed) {
  std::vector<Perturbation> out;
  while (!csv.empty()) {
    const auto comma = csv.find(',');
    const auto item = csv.substr(0, comma);
    if (!item.empty()) out.push_back(parse_perturbation(item, seed));
    if (comma == std::string_view::npos) break;
    csv.remove_prefix(comma + 1);
  }
  return out;
}

std::string to_string(const Perturbation& p) {
  switch (p.mode) {
    case PerturbMode::most_related_swapped: return "most_related_swapped";
    case PerturbMode::all_shuffled: return "all_shuffled";
    case PerturbMode::reversed: return "reversed";
    case PerturbMode::most_related_void: return "most_related_void";
    case PerturbMode::most_related_missing: return "most_related_missing";
    case PerturbMode::limited: return "limited:" + std::to_string(p.limit);
  }
  return "unknown";
}

PerturbOutcome apply(const Perturbation& p, const Sample& sample, std::span<const Tensor> noise_pool) {
  if (sample.evidences.empty()) throw DimensionError("perturbation needs a padded evidence queue");
  PerturbOutcome out{sample, false};
  auto& ev = out.sample.evidences;
  const std::size_t real = sample.real_count;
  Rng rng(mix_seed(p.seed, sample.id));
  const auto real_span = std::span<Tensor>(ev.data(), real);

  switch (p.mode) {
    case PerturbMode::most_related_swapped: {
      const std::size_t lead = std::min<std::size_t>(3, real);
      if (lead < 2) {
        out.warning = true;
        break;
      }
      // Draw uniformly among the non-identity permutations of the lead.
      std::vector<std::size_t> perm(lead);
      do {
        for (std::size_t i = 0; i < lead; ++i) perm[i] = i;
        rng.shuffle(std::span<std::size_t>(perm));
      } while (std::is_sorted(perm.begin(), perm.end()));
      for (std::size_t i = 0; i < lead; ++i) ev[i] = sample.evidences[perm[i]];
      break;
    }
    case PerturbMode::all_shuffled:
      rng.shuffle(real_span);
      break;
    case PerturbMode::reversed:
      std::reverse(real_span.begin(), real_span.end());
      break;
    case PerturbMode::most_related_void:
      if (real == 0) {
        out.warning = true;
        break;
      }
      if (noise_pool.empty()) throw ConfigError("most_related_void needs a non-empty noise pool");
      ev[0] = noise_pool[rng.index(noise_pool.size())];
      break;
    case PerturbMode::most_related_missing:
      if (real == 0) {
        out.warning = true;
        break;
      }
      ev.erase(ev.begin());
      ev.push_back(pad_like(sample.evidences.front()));
      out.sample.real_count = real - 1;
      break;
    case PerturbMode::limited:
      if (p.limit < 1) throw ConfigError("limited(n) needs n >= 1");
      for (std::size_t k = p.limit; k < ev.size(); ++k) {
        if (k < real) ev[k] = pad_like(ev[k]);
      }
      out.sample.real_count = std::min(real, p.limit);
      break;
  }
  return out;
}

std::vector<Tensor> build_noise_pool(std::span<const Sample> samples) {
  std::vector<Tensor> pool;
  for (const auto& s : samples) {
    for (std::size_t k = 0; k < s.real_count; ++k) pool.push_back(s.evidences[k]);
  }
  return pool;
}

std::vector<PerturbRow> run_perturbation_suite(std::span<const Sample> samples, const Model& model,
                                               double tau, std::span<const Perturbation> modes,
                                               std::span<const Tensor> noise_pool, unsigned threads) {
  std::vector<PerturbRow> rows;
  auto evaluate_split = [&](std::string name, std::span<const Sample> split, std::size_t warnings) {
    const BatchResult r = batch_infer(split, model, tau, threads);
    rows.push_back({std::move(name), evaluate(r.traces), r.summary.termination_ratio, warnings});
  };
  evaluate_split("baseline", samples, 0);
  for (const auto& p : modes) {
    std::vector<Sample> adjusted;
    adjusted.reserve(samples.size());
    std::size_t warnings = 0;
    for (const auto& s : samples) {
      auto o = apply(p, s, noise_pool);
      warnings += o.warning ? 1 : 0;
      adjusted.push_back(std::move(o.sample));
    }
    evaluate_split(to_string(p), adjusted, warnings);
  }
  return rows;
}

void write_perturbation_table(std::ostream& out, std::span<const PerturbRow> rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %12s %8s\n", "mode", "acc", "macro_f1", "auc",
                "term_ratio", "warnings");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-24s %8.4f %8.4f %8.4f %12.4f %8zu\n", r.mode.c_str(), r.metrics.accuracy,
                  r.metrics.macro_f1, r.metrics.auc, r.termination_ratio, r.warnings);
    out << line;
  }
}

}  // namespace see
