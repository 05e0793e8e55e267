#include "see/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "see/error.hpp"

namespace see {

ModelConfig ExperimentConfig::resolved_model() const {
  ModelConfig m = model;
  m.ffn_hidden = ffn_multiplier * m.width;
  m.mlp_hidden = mlp_hidden != 0 ? mlp_hidden : std::max<std::size_t>(1, m.width / 2);
  return m;
}

void ExperimentConfig::validate() const {
  if (ffn_multiplier == 0) throw ConfigError("ffn_multiplier must be positive");
  if (threads == 0) throw ConfigError("threads must be positive");
  resolved_model().validate();
  training.validate();
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  if (name == "desk") {
    c.model.tokens = 16;
    c.model.width = 32;
    c.model.max_evidence = 4;
    c.training.lr_extractor = 1e-3;
    c.training.lr_rest = 1e-3;
  } else if (name == "paper-scale") {
    c.model.tokens = 100;
    c.model.width = 768;
    c.model.max_evidence = 8;
    c.training.lr_extractor = 6e-6;
    c.training.lr_rest = 5e-5;
    c.training.epochs_stage1 = 10;
    c.training.epochs_stage2 = 5;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected desk or paper-scale)");
  }
  c.training.batch_size = 12;
  c.model = c.resolved_model();
  return c;
}

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

std::string fmt_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

struct Field {
  std::function<void(ExperimentConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field size_field(T ExperimentConfig::*outer, std::size_t T::*member) {
  return {[=](ExperimentConfig& c, std::string_view k, std::string_view v) {
            (c.*outer).*member = parse_number<std::size_t>(k, v);
          },
          [=](const ExperimentConfig& c) { return std::to_string((c.*outer).*member); }};
}

Field double_field(double TrainingConfig::*member) {
  return {[=](ExperimentConfig& c, std::string_view k, std::string_view v) {
            c.training.*member = parse_number<double>(k, v);
          },
          [=](const ExperimentConfig& c) { return fmt_double(c.training.*member); }};
}

Field bool_field(bool ModelConfig::*member) {
  return {[=](ExperimentConfig& c, std::string_view k, std::string_view v) { c.model.*member = parse_bool(k, v); },
          [=](const ExperimentConfig& c) { return std::string((c.model.*member) ? "true" : "false"); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"tokens", size_field(&ExperimentConfig::model, &ModelConfig::tokens)},
      {"width", size_field(&ExperimentConfig::model, &ModelConfig::width)},
      {"max_evidence", size_field(&ExperimentConfig::model, &ModelConfig::max_evidence)},
      {"heads", size_field(&ExperimentConfig::model, &ModelConfig::heads)},
      {"ffn_multiplier",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.ffn_multiplier = parse_number<std::size_t>(k, v); },
        [](const ExperimentConfig& c) { return std::to_string(c.ffn_multiplier); }}},
      {"mlp_hidden",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.mlp_hidden = parse_number<std::size_t>(k, v); },
        [](const ExperimentConfig& c) { return std::to_string(c.mlp_hidden); }}},
      {"activation",
       {[](ExperimentConfig& c, std::string_view, std::string_view v) { c.model.activation = parse_activation(v); },
        [](const ExperimentConfig& c) { return std::string(to_string(c.model.activation)); }}},
      {"shared_decoders", bool_field(&ModelConfig::shared_decoders)},
      {"concat_hidden", bool_field(&ModelConfig::concat_hidden)},
      {"use_adapter", bool_field(&ModelConfig::use_adapter)},
      {"lr_extractor", double_field(&TrainingConfig::lr_extractor)},
      {"lr_rest", double_field(&TrainingConfig::lr_rest)},
      {"batch_size", size_field(&ExperimentConfig::training, &TrainingConfig::batch_size)},
      {"epochs_stage1", size_field(&ExperimentConfig::training, &TrainingConfig::epochs_stage1)},
      {"epochs_stage2", size_field(&ExperimentConfig::training, &TrainingConfig::epochs_stage2)},
      {"tau", double_field(&TrainingConfig::tau)},
      {"assessor_weight", double_field(&TrainingConfig::assessor_weight)},
      {"patience", size_field(&ExperimentConfig::training, &TrainingConfig::patience)},
      {"seed",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.training.seed = parse_number<std::uint64_t>(k, v); },
        [](const ExperimentConfig& c) { return std::to_string(c.training.seed); }}},
      {"single_stage",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.single_stage = parse_bool(k, v); },
        [](const ExperimentConfig& c) { return std::string(c.single_stage ? "true" : "false"); }}},
      {"threads",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.threads = parse_number<unsigned>(k, v); },
        [](const ExperimentConfig& c) { return std::to_string(c.threads); }}},
  };
  return table;
}

std::string_view canonical_key(std::string_view key) {
  if (key == "L") return "tokens";
  if (key == "d") return "width";
  if (key == "N") return "max_evidence";
  return key;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  const auto& table = fields();
  auto it = table.find(canonical_key(key));
  if (it == table.end()) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  it->second.set(config, it->first, trim(value));
  config.model = config.resolved_model();
}

void apply_config_text(ExperimentConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + " is not key=value");
    }
    apply_setting(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  apply_config_text(config, text.str());
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : fields()) keys.push_back(k);
  return keys;
}

std::string get_setting(const ExperimentConfig& config, std::string_view key) {
  const auto& table = fields();
  auto it = table.find(canonical_key(key));
  if (it == table.end()) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  return it->second.get(config);
}

std::string to_config_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + "=" + f.get(config) + "\n";
  return out;
}

}  // namespace see
