#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "see/model.hpp"

namespace see {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum CheckpointFlags : std::uint32_t {
  kFlagSharedDecoders = 1u << 0,
  kFlagConcatHidden = 1u << 1,
  kFlagAdapter = 1u << 2,
};

struct CheckpointMeta {
  double tau = 0.5;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  Model model;
  CheckpointMeta meta;
};

// SEEP layout, little-endian:
//   "SEEP" | version u32 | d u32 | L u32 | N u32 | flags u32
//   | heads u32 | ffn_hidden u32 | mlp_hidden u32 | activation u32
//   | tau f64 | seed u64 | scalar count u64
//   | parameters as f32 in list_parameters() order
// Parameters are stored at single precision; a model whose values are all
// representable as float round-trips exactly.
std::uint64_t save_checkpoint(std::ostream& out, const Model& model, const CheckpointMeta& meta);
std::uint64_t save_checkpoint(const std::filesystem::path& path, const Model& model,
                              const CheckpointMeta& meta);

Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rounds every parameter to the nearest float, matching what a save/load
// cycle would produce.
void round_to_storage_precision(ModelParams& params);

}  // namespace see
