#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "see/tensor.hpp"

namespace see {

// One news item with its evidence queue, padded to exactly N blocks.
struct Sample {
  std::uint64_t id = 0;
  int label = 0;
  Tensor news;                   // L x d
  std::vector<Tensor> evidences; // N blocks of L x d; entries past real_count are PAD
  std::size_t real_count = 0;
};

struct Dataset {
  std::size_t tokens = 0;        // L
  std::size_t width = 0;         // d
  std::size_t max_evidence = 0;  // N
  std::vector<Sample> samples;

  // Checks shapes, labels and the PAD-tail bookkeeping of every sample.
  void validate() const;
};

// ---- SEE1 store ------------------------------------------------------------

inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::uint32_t kPrecisionF32 = 0;

struct StoreHeader {
  std::uint32_t version = kStoreVersion;
  std::uint32_t tokens = 0;
  std::uint32_t width = 0;
  std::uint32_t max_evidence = 0;
  std::uint64_t sample_count = 0;
  std::uint32_t precision = kPrecisionF32;
};

// Layout, little-endian:
//   "SEE1" | version u32 | L u32 | d u32 | N u32 | sample_count u64
//   | precision u32 (0 = f32)
//   then per sample: id u64 | label u8 | real_count u8
//   | news L*d f32 | N evidence blocks of L*d f32
std::uint64_t write_store(std::ostream& out, const Dataset& data);
std::uint64_t write_store(const std::filesystem::path& path, const Dataset& data);
Dataset read_store(std::istream& in);
Dataset read_store(const std::filesystem::path& path);
StoreHeader read_store_header(std::istream& in);

// ---- padding -----------------------------------------------------------------

struct PaddedEvidence {
  std::vector<Tensor> evidences;
  std::size_t real_count = 0;
};

// Keeps the first N blocks in order and fills the remainder with `pad`.
PaddedEvidence pad_or_truncate(std::span<const Tensor> evidences, std::size_t max_evidence,
                               const Tensor& pad);

Tensor pad_block(std::size_t tokens, std::size_t width);

// ---- splitting ---------------------------------------------------------------

struct SplitManifest {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> train;
  std::vector<std::uint64_t> val;
  std::vector<std::uint64_t> test;
  std::size_t train_positive = 0;
  std::size_t val_positive = 0;
  std::size_t test_positive = 0;

  const std::vector<std::uint64_t>& ids(std::string_view split) const;
};

// Per-class seeded shuffle, then proportional 6:2:2 assignment within each
// class so every split keeps the global label ratio.
SplitManifest stratified_split(std::span<const Sample> samples, std::uint64_t seed);

void write_manifest(std::ostream& out, const SplitManifest& manifest);
SplitManifest read_manifest(std::istream& in);

// Samples whose ids are listed, in list order.
std::vector<Sample> select_samples(const Dataset& data, std::span<const std::uint64_t> ids);

// ---- synthetic generator -----------------------------------------------------

// Generative model (sign = +1 for label 1, -1 for label 0; u a fixed unit
// direction drawn from the seed; z standard normal):
//   news rows      c_t = sign * margin * news_signal * u + noise * z
//   real_count     uniform on [1, N]
//   evidence i     informative with probability (1 - decay)^(i-1); an
//                  informative block carries sign * margin * u, flipped with
//                  probability `contradiction`; an uninformative block
//                  carries no class signal. Every row adds noise * z.
//   PAD blocks     zero matrices.
// Values are rounded to float so the store round-trips exactly.
struct SyntheticSpec {
  std::size_t sample_count = 600;
  std::size_t tokens = 16;
  std::size_t width = 32;
  std::size_t max_evidence = 4;
  double margin = 1.0;
  double news_signal = 0.25;
  double decay = 0.3;
  double contradiction = 0.05;
  double noise = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

SyntheticSpec separable_preset();
Dataset gen_synthetic(const SyntheticSpec& spec);

// The class direction u used by gen_synthetic for this spec.
std::vector<double> synthetic_direction(const SyntheticSpec& spec);

}  // namespace see
