#include <gtest/gtest.h>

#include <sstream>

#include "see/checkpoint.hpp"
#include "see/error.hpp"

using namespace see;

namespace {

constexpr std::size_t kHeaderBytes = 64;

ModelConfig small_config() {
  ModelConfig c;
  c.tokens = 3;
  c.width = 4;
  c.max_evidence = 3;
  c.heads = 2;
  c.ffn_hidden = 8;
  c.mlp_hidden = 3;
  c.activation = Activation::tanh;
  return c;
}

std::string save_bytes(const Model& m, CheckpointMeta meta = {}) {
  std::ostringstream out;
  save_checkpoint(out, m, meta);
  return out.str();
}

Checkpoint load_bytes(const std::string& bytes) {
  std::istringstream in(bytes);
  return load_checkpoint(in);
}

}  // namespace

TEST(Checkpoint, BitExactRoundTripAcrossModes) {
  for (int mode = 0; mode < 8; ++mode) {
    ModelConfig c = small_config();
    c.shared_decoders = mode & 1;
    c.concat_hidden = mode & 2;
    c.use_adapter = mode & 4;
    Model m = init_model(c, mode);
    round_to_storage_precision(m.params());
    const std::string bytes = save_bytes(m, {0.73, 42});
    const Checkpoint back = load_bytes(bytes);
    EXPECT_EQ(back.meta.tau, 0.73);
    EXPECT_EQ(back.meta.seed, 42u);
    EXPECT_EQ(back.model.config().shared_decoders, c.shared_decoders);
    EXPECT_EQ(back.model.config().concat_hidden, c.concat_hidden);
    EXPECT_EQ(back.model.config().use_adapter, c.use_adapter);
    EXPECT_EQ(back.model.config().heads, 2u);
    EXPECT_EQ(back.model.config().activation, Activation::tanh);
    const auto a = list_parameters(m.params()), b = list_parameters(back.model.params());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].name, b[i].name);
      EXPECT_TRUE(bitwise_equal(a[i].tensor, b[i].tensor)) << a[i].name;
    }
    EXPECT_EQ(save_bytes(back.model, back.meta), bytes);
    EXPECT_EQ(bytes.size(), kHeaderBytes + 4 * parameter_count(m.params()));
  }
}

TEST(Checkpoint, RoundingMatchesFloatCast) {
  Model m = init_model(small_config(), 1);
  m.params().assessor.bias.mutable_values()[0] = 0.1;
  round_to_storage_precision(m.params());
  EXPECT_EQ(m.params().assessor.bias.at(0), static_cast<double>(0.1f));
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const std::string bytes = save_bytes(init_model(small_config(), 2));
  EXPECT_EQ(bytes.substr(0, 4), "SEEP");
  std::string magic = bytes;
  magic[3] = 'Q';
  EXPECT_THROW(load_bytes(magic), FormatError);
  std::string version = bytes;
  version[4] = 9;
  EXPECT_THROW(load_bytes(version), VersionError);
  std::string flags = bytes;
  flags[20] = static_cast<char>(0x40);
  EXPECT_THROW(load_bytes(flags), FormatError);
  EXPECT_THROW(load_bytes(bytes.substr(0, bytes.size() - 1)), TruncationError);
  EXPECT_THROW(load_bytes(bytes.substr(0, 30)), TruncationError);
  std::string width = bytes;
  width[8] = 0;
  EXPECT_THROW(load_bytes(width), FormatError);
}

TEST(Checkpoint, MissingFileIsDataError) {
  EXPECT_THROW(load_checkpoint(std::filesystem::path("/nonexistent/see.ckpt")), DataError);
}
