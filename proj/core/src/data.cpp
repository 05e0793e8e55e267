#include "see/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "byte_io.hpp"
#include "see/error.hpp"
#include "see/random.hpp"

namespace see {
namespace {

constexpr char kStoreMagic[4] = {'S', 'E', 'E', '1'};

void check_block(const Tensor& t, std::size_t tokens, std::size_t width, const std::string& what) {
  if (!t.defined() || t.rank() != 2 || t.rows() != tokens || t.cols() != width) {
    throw DimensionError(what + " has shape " + (t.defined() ? shape_to_string(t.shape()) : "[]") +
                         ", expected [" + std::to_string(tokens) + "x" + std::to_string(width) + "]");
  }
}

void write_block(detail::ByteWriter& w, const Tensor& t) {
  for (double v : t.values()) w.f32(static_cast<float>(v));
}

Tensor read_block(detail::ByteReader& r, std::size_t tokens, std::size_t width) {
  std::vector<double> values(tokens * width);
  for (double& v : values) v = r.f32();
  return Tensor({tokens, width}, std::move(values));
}

double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

void Dataset::validate() const {
  if (tokens == 0 || width == 0 || max_evidence == 0) {
    throw DimensionError("dataset dimensions must be positive");
  }
  for (const auto& s : samples) {
    const std::string tag = "sample " + std::to_string(s.id);
    if (s.label != 0 && s.label != 1) throw LabelError(tag + " has non-binary label");
    check_block(s.news, tokens, width, tag + " news");
    if (s.evidences.size() != max_evidence) {
      throw DimensionError(tag + " has " + std::to_string(s.evidences.size()) +
                           " evidence blocks, expected " + std::to_string(max_evidence));
    }
    for (const auto& e : s.evidences) check_block(e, tokens, width, tag + " evidence");
    if (s.real_count > max_evidence) throw DimensionError(tag + " real_count exceeds N");
  }
}

std::uint64_t write_store(std::ostream& out, const Dataset& data) {
  data.validate();
  if (data.max_evidence > 255) throw DimensionError("store format caps N at 255");
  detail::ByteWriter w(out);
  w.bytes(kStoreMagic, 4);
  w.u32(kStoreVersion);
  w.u32(static_cast<std::uint32_t>(data.tokens));
  w.u32(static_cast<std::uint32_t>(data.width));
  w.u32(static_cast<std::uint32_t>(data.max_evidence));
  w.u64(data.samples.size());
  w.u32(kPrecisionF32);
  for (const auto& s : data.samples) {
    w.u64(s.id);
    w.u8(static_cast<std::uint8_t>(s.label));
    w.u8(static_cast<std::uint8_t>(s.real_count));
    write_block(w, s.news);
    for (const auto& e : s.evidences) write_block(w, e);
  }
  return w.written();
}

std::uint64_t write_store(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return write_store(out, data);
}

namespace {

StoreHeader read_header(detail::ByteReader& r) {
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kStoreMagic, 4) != 0) throw FormatError("not a SEE1 store (bad magic)");
  StoreHeader h;
  h.version = r.u32();
  if (h.version != kStoreVersion) throw VersionError("unsupported store version " + std::to_string(h.version));
  h.tokens = r.u32();
  h.width = r.u32();
  h.max_evidence = r.u32();
  h.sample_count = r.u64();
  h.precision = r.u32();
  if (h.tokens == 0 || h.width == 0 || h.max_evidence == 0) {
    throw FormatError("store header has a zero dimension (L=" + std::to_string(h.tokens) +
                      ", d=" + std::to_string(h.width) + ", N=" + std::to_string(h.max_evidence) + ")");
  }
  if (h.max_evidence > 255) throw FormatError("store header N exceeds 255");
  if (h.precision != kPrecisionF32) {
    throw FormatError("unsupported precision tag " + std::to_string(h.precision));
  }
  return h;
}

}  // namespace

StoreHeader read_store_header(std::istream& in) {
  detail::ByteReader r(in, "store");
  return read_header(r);
}

Dataset read_store(std::istream& in) {
  detail::ByteReader r(in, "store");
  const StoreHeader h = read_header(r);
  Dataset data;
  data.tokens = h.tokens;
  data.width = h.width;
  data.max_evidence = h.max_evidence;
  // Do not trust sample_count for the reservation; a corrupt header would
  // otherwise request an enormous allocation before truncation is detected.
  data.samples.reserve(std::min<std::uint64_t>(h.sample_count, 1u << 16));
  for (std::uint64_t i = 0; i < h.sample_count; ++i) {
    Sample s;
    s.id = r.u64();
    const std::uint8_t label = r.u8();
    if (label > 1) {
      throw FormatError("sample at offset " + std::to_string(r.offset() - 9) + " has label " +
                        std::to_string(label));
    }
    s.label = label;
    s.real_count = r.u8();
    if (s.real_count > data.max_evidence) {
      throw FormatError("sample " + std::to_string(s.id) + " claims " + std::to_string(s.real_count) +
                        " real evidences with N=" + std::to_string(data.max_evidence));
    }
    s.news = read_block(r, data.tokens, data.width);
    s.evidences.reserve(data.max_evidence);
    for (std::size_t k = 0; k < data.max_evidence; ++k) {
      s.evidences.push_back(read_block(r, data.tokens, data.width));
    }
    data.samples.push_back(std::move(s));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after " + std::to_string(h.sample_count) + " samples");
  return data;
}

Dataset read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open store " + path.string());
  return read_store(in);
}

PaddedEvidence pad_or_truncate(std::span<const Tensor> evidences, std::size_t max_evidence,
                               const Tensor& pad) {
  PaddedEvidence out;
  out.real_count = std::min(evidences.size(), max_evidence);
  out.evidences.assign(evidences.begin(), evidences.begin() + static_cast<std::ptrdiff_t>(out.real_count));
  while (out.evidences.size() < max_evidence) out.evidences.push_back(pad);
  return out;
}

Tensor pad_block(std::size_t tokens, std::size_t width) { return Tensor::zeros({tokens, width}); }

const std::vector<std::uint64_t>& SplitManifest::ids(std::string_view split) const {
  if (split == "train") return train;
  if (split == "val") return val;
  if (split == "test") return test;
  throw ConfigError("unknown split '" + std::string(split) + "' (expected train, val or test)");
}

SplitManifest stratified_split(std::span<const Sample> samples, std::uint64_t seed) {
  std::vector<std::uint64_t> by_class[2];
  for (const auto& s : samples) {
    if (s.label != 0 && s.label != 1) throw LabelError("non-binary label in split input");
    by_class[s.label].push_back(s.id);
  }
  SplitManifest m;
  m.seed = seed;
  Rng rng(mix_seed(seed, 0x5b117));
  for (int c = 0; c < 2; ++c) {
    auto& ids = by_class[c];
    if (ids.empty()) throw DataError("class " + std::to_string(c) + " is absent; cannot stratify");
    if (ids.size() < 10) {
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(ids.size()) +
                      " samples; stratified split needs at least 10");
    }
    std::sort(ids.begin(), ids.end());
    rng.shuffle(std::span<std::uint64_t>(ids));
    const auto n = static_cast<double>(ids.size());
    const auto n_train = static_cast<std::size_t>(std::llround(0.6 * n));
    const auto n_val = static_cast<std::size_t>(std::llround(0.2 * n));
    m.train.insert(m.train.end(), ids.begin(), ids.begin() + n_train);
    m.val.insert(m.val.end(), ids.begin() + n_train, ids.begin() + n_train + n_val);
    m.test.insert(m.test.end(), ids.begin() + n_train + n_val, ids.end());
    if (c == 1) {
      m.train_positive = n_train;
      m.val_positive = n_val;
      m.test_positive = ids.size() - n_train - n_val;
    }
  }
  std::sort(m.train.begin(), m.train.end());
  std::sort(m.val.begin(), m.val.end());
  std::sort(m.test.begin(), m.test.end());
  return m;
}

void write_manifest(std::ostream& out, const SplitManifest& m) {
  out << "# see-split seed=" << m.seed << " train=" << m.train.size() << " val=" << m.val.size()
      << " test=" << m.test.size() << " train_pos=" << m.train_positive
      << " val_pos=" << m.val_positive << " test_pos=" << m.test_positive << '\n';
  for (auto id : m.train) out << "train " << id << '\n';
  for (auto id : m.val) out << "val " << id << '\n';
  for (auto id : m.test) out << "test " << id << '\n';
}

SplitManifest read_manifest(std::istream& in) {
  SplitManifest m;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line.front() == '#') {
      std::string token;
      while (fields >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const std::uint64_t value = std::stoull(token.substr(eq + 1));
        if (key == "seed") m.seed = value;
        if (key == "train_pos") m.train_positive = value;
        if (key == "val_pos") m.val_positive = value;
        if (key == "test_pos") m.test_positive = value;
      }
      header = true;
      continue;
    }
    std::string split;
    std::uint64_t id;
    if (!(fields >> split >> id)) throw FormatError("malformed manifest line: " + line);
    if (split == "train") m.train.push_back(id);
    else if (split == "val") m.val.push_back(id);
    else if (split == "test") m.test.push_back(id);
    else throw FormatError("unknown split in manifest line: " + line);
  }
  if (!header) throw FormatError("manifest header missing");
  return m;
}

std::vector<Sample> select_samples(const Dataset& data, std::span<const std::uint64_t> ids) {
  std::unordered_map<std::uint64_t, std::size_t> index;
  index.reserve(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) index.emplace(data.samples[i].id, i);
  std::vector<Sample> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("sample id " + std::to_string(id) + " not in dataset");
    out.push_back(data.samples[it->second]);
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (sample_count == 0 || tokens == 0 || width < 2 || max_evidence == 0 || max_evidence > 255) {
    throw ConfigError("synthetic spec needs positive sizes, d >= 2 and 1 <= N <= 255");
  }
  if (!(margin > 0.0)) throw ConfigError("synthetic margin must be positive");
  for (double rate : {news_signal, decay, contradiction}) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("synthetic rates must lie in [0, 1]");
  }
  if (!(noise >= 0.0)) throw ConfigError("synthetic noise must be non-negative");
}

SyntheticSpec separable_preset() { return SyntheticSpec{}; }

std::vector<double> synthetic_direction(const SyntheticSpec& spec) {
  Rng rng(mix_seed(spec.seed, 0xd1cec7));
  std::vector<double> u(spec.width);
  double norm = 0.0;
  for (double& v : u) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : u) v /= norm;
  return u;
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto u = synthetic_direction(spec);
  Rng rng(mix_seed(spec.seed, 0x5a3b1e));
  const std::size_t L = spec.tokens, d = spec.width;

  auto block = [&](double mean) {
    std::vector<double> values(L * d);
    for (std::size_t t = 0; t < L; ++t)
      for (std::size_t j = 0; j < d; ++j)
        values[t * d + j] = round_f32(mean * u[j] + spec.noise * rng.normal());
    return Tensor({L, d}, std::move(values));
  };

  Dataset data;
  data.tokens = L;
  data.width = d;
  data.max_evidence = spec.max_evidence;
  data.samples.reserve(spec.sample_count);
  for (std::size_t i = 0; i < spec.sample_count; ++i) {
    Sample s;
    s.id = i;
    s.label = rng.bernoulli(0.5) ? 1 : 0;
    const double sign = s.label == 1 ? 1.0 : -1.0;
    s.real_count = 1 + rng.index(spec.max_evidence);
    s.news = block(sign * spec.margin * spec.news_signal);
    std::vector<Tensor> real;
    for (std::size_t k = 0; k < s.real_count; ++k) {
      const bool informative = rng.bernoulli(std::pow(1.0 - spec.decay, static_cast<double>(k)));
      double mean = 0.0;
      if (informative) mean = (rng.bernoulli(spec.contradiction) ? -sign : sign) * spec.margin;
      real.push_back(block(mean));
    }
    auto padded = pad_or_truncate(real, spec.max_evidence, pad_block(L, d));
    s.evidences = std::move(padded.evidences);
    data.samples.push_back(std::move(s));
  }
  return data;
}

}  // namespace see
