#include "see/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include "byte_io.hpp"
#include "see/error.hpp"

namespace see {
namespace {

constexpr char kMagic[4] = {'S', 'E', 'E', 'P'};

std::uint32_t u32_of(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw ConfigError(std::string(what) + " does not fit the checkpoint header");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::uint64_t save_checkpoint(std::ostream& out, const Model& model, const CheckpointMeta& meta) {
  const auto& c = model.config();
  detail::ByteWriter w(out);
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(u32_of(c.width, "d"));
  w.u32(u32_of(c.tokens, "L"));
  w.u32(u32_of(c.max_evidence, "N"));
  std::uint32_t flags = 0;
  if (c.shared_decoders) flags |= kFlagSharedDecoders;
  if (c.concat_hidden) flags |= kFlagConcatHidden;
  if (c.use_adapter) flags |= kFlagAdapter;
  w.u32(flags);
  w.u32(u32_of(c.heads, "heads"));
  w.u32(u32_of(c.ffn_hidden, "ffn_hidden"));
  w.u32(u32_of(c.mlp_hidden, "mlp_hidden"));
  w.u32(static_cast<std::uint32_t>(c.activation));
  w.f64(meta.tau);
  w.u64(meta.seed);
  const auto params = list_parameters(model.params());
  w.u64(parameter_count(model.params()));
  for (const auto& p : params) {
    for (double v : p.tensor.values()) w.f32(static_cast<float>(v));
  }
  return w.written();
}

std::uint64_t save_checkpoint(const std::filesystem::path& path, const Model& model,
                              const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return save_checkpoint(out, model, meta);
}

Checkpoint load_checkpoint(std::istream& in) {
  detail::ByteReader r(in, "checkpoint");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a SEEP checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig config;
  config.width = r.u32();
  config.tokens = r.u32();
  config.max_evidence = r.u32();
  const std::uint32_t flags = r.u32();
  if (flags & ~(kFlagSharedDecoders | kFlagConcatHidden | kFlagAdapter)) {
    throw FormatError("checkpoint has unknown mode flags " + std::to_string(flags));
  }
  config.shared_decoders = flags & kFlagSharedDecoders;
  config.concat_hidden = flags & kFlagConcatHidden;
  config.use_adapter = flags & kFlagAdapter;
  config.heads = r.u32();
  config.ffn_hidden = r.u32();
  config.mlp_hidden = r.u32();
  const std::uint32_t activation = r.u32();
  if (activation > static_cast<std::uint32_t>(Activation::relu)) {
    throw FormatError("checkpoint has unknown activation code " + std::to_string(activation));
  }
  config.activation = static_cast<Activation>(activation);
  CheckpointMeta meta;
  meta.tau = r.f64();
  meta.seed = r.u64();
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint header rejected: ") + e.what());
  }

  Model model = init_model(config, 0);
  const std::uint64_t count = r.u64();
  if (count != parameter_count(model.params())) {
    throw FormatError("checkpoint declares " + std::to_string(count) + " parameters, header implies " +
                      std::to_string(parameter_count(model.params())));
  }
  for (auto& p : list_parameters(model.params())) {
    Tensor t = p.tensor;
    for (double& v : t.mutable_values()) v = r.f32();
  }
  return Checkpoint{std::move(model), meta};
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

void round_to_storage_precision(ModelParams& params) {
  for (auto& p : list_parameters(params)) {
    Tensor t = p.tensor;
    for (double& v : t.mutable_values()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace see
