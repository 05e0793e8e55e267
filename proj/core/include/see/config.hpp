#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "see/model.hpp"
#include "see/training.hpp"

namespace see {

struct ExperimentConfig {
  // ffn_hidden and mlp_hidden inside `model` are derived by resolved_model()
  // from ffn_multiplier and mlp_hidden (0 = d/2).
  ModelConfig model;
  std::size_t ffn_multiplier = 4;
  std::size_t mlp_hidden = 0;
  TrainingConfig training;
  bool single_stage = false;
  unsigned threads = 1;

  ModelConfig resolved_model() const;
  void validate() const;
};

// "desk": L=16, d=32, N=4, learning rates 1e-3 / 1e-3.
// "paper-scale": L=100, d=768, N=8, learning rates 6e-6 / 5e-5.
// Both use batch size 12.
ExperimentConfig preset(std::string_view name);

// Flat key=value settings. Keys use underscores; `#` starts a comment.
// Unknown keys and unparsable values raise ConfigError.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);
void apply_config_text(ExperimentConfig& config, std::string_view text);

std::vector<std::string> config_keys();
std::string get_setting(const ExperimentConfig& config, std::string_view key);
std::string to_config_text(const ExperimentConfig& config);

}  // namespace see
