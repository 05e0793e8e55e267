#include "see/model.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "see/error.hpp"
#include "see/random.hpp"

namespace see {

void ModelConfig::validate() const {
  if (tokens == 0 || width == 0 || max_evidence == 0 || heads == 0 || ffn_hidden == 0 ||
      mlp_hidden == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (width < 2) throw ConfigError("width must be at least 2 for layer normalization");
  if (width % heads != 0) {
    throw ConfigError("width " + std::to_string(width) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

namespace {

void push(std::vector<NamedParam>& out, std::string name, ParamGroup group, const Tensor& t) {
  out.push_back(NamedParam{std::move(name), group, t});
}

void push_attention(std::vector<NamedParam>& out, const std::string& prefix, const AttentionParams& a) {
  push(out, prefix + ".query", ParamGroup::extractor, a.query);
  push(out, prefix + ".key", ParamGroup::extractor, a.key);
  push(out, prefix + ".value", ParamGroup::extractor, a.value);
  push(out, prefix + ".output", ParamGroup::extractor, a.output);
}

void push_norm(std::vector<NamedParam>& out, const std::string& prefix, const LayerNormParams& n) {
  push(out, prefix + ".gamma", ParamGroup::extractor, n.gamma);
  push(out, prefix + ".beta", ParamGroup::extractor, n.beta);
}

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Tensor uniform(Shape shape, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = rng_.uniform(-bound, bound);
    return Tensor(std::move(shape), std::move(values), true);
  }

  static LayerNormParams norm(std::size_t d) {
    return {Tensor::filled({d}, 1.0, true), Tensor::zeros({d}, true)};
  }

  AttentionParams attention(std::size_t d) {
    AttentionParams a;
    a.query = uniform({d, d}, d);
    a.key = uniform({d, d}, d);
    a.value = uniform({d, d}, d);
    a.output = uniform({d, d}, d);
    return a;
  }

  DecoderParams decoder(std::size_t d, std::size_t hidden) {
    DecoderParams p;
    p.norm_state = norm(d);
    p.norm_query = norm(d);
    p.norm_evidence = norm(d);
    p.norm_ffn = norm(d);
    p.self_attention = attention(d);
    p.cross_attention = attention(d);
    p.ffn_in = uniform({d, hidden}, d);
    p.ffn_in_bias = uniform({hidden}, d);
    p.ffn_out = uniform({hidden, d}, hidden);
    p.ffn_out_bias = uniform({d}, hidden);
    return p;
  }

 private:
  Rng rng_;
};

Tensor affine(Tape* tape, const Tensor& row, const Tensor& weight, const Tensor& bias) {
  return add_bias(tape, matmul(tape, row, weight), bias);
}

}  // namespace

std::vector<NamedParam> list_parameters(const ModelParams& params) {
  std::vector<NamedParam> out;
  if (params.adapter) {
    push(out, "adapter.weight", ParamGroup::extractor, params.adapter->weight);
    push(out, "adapter.bias", ParamGroup::extractor, params.adapter->bias);
  }
  for (std::size_t i = 0; i < params.decoders.size(); ++i) {
    const auto& dec = params.decoders[i];
    const std::string prefix = "decoder" + std::to_string(i + 1);
    push_norm(out, prefix + ".norm_state", dec.norm_state);
    push_norm(out, prefix + ".norm_query", dec.norm_query);
    push_norm(out, prefix + ".norm_evidence", dec.norm_evidence);
    push_norm(out, prefix + ".norm_ffn", dec.norm_ffn);
    push_attention(out, prefix + ".self_attention", dec.self_attention);
    push_attention(out, prefix + ".cross_attention", dec.cross_attention);
    push(out, prefix + ".ffn_in", ParamGroup::extractor, dec.ffn_in);
    push(out, prefix + ".ffn_in_bias", ParamGroup::extractor, dec.ffn_in_bias);
    push(out, prefix + ".ffn_out", ParamGroup::extractor, dec.ffn_out);
    push(out, prefix + ".ffn_out_bias", ParamGroup::extractor, dec.ffn_out_bias);
  }
  if (params.step_embeddings.defined()) {
    push(out, "step_embeddings", ParamGroup::extractor, params.step_embeddings);
  }
  const auto& c = params.classifier;
  push(out, "classifier.w1", ParamGroup::classifier, c.w1);
  push(out, "classifier.b1", ParamGroup::classifier, c.b1);
  push(out, "classifier.w2", ParamGroup::classifier, c.w2);
  push(out, "classifier.b2", ParamGroup::classifier, c.b2);
  push(out, "classifier.w3", ParamGroup::classifier, c.w3);
  push(out, "classifier.b3", ParamGroup::classifier, c.b3);
  push(out, "assessor.weight", ParamGroup::assessor, params.assessor.weight);
  push(out, "assessor.bias", ParamGroup::assessor, params.assessor.bias);
  return out;
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const auto& p : list_parameters(params)) n += p.tensor.size();
  return n;
}

Tensor attention(Tape* tape, const Tensor& query_in, const Tensor& key_in, const Tensor& value_in,
                 const AttentionParams& proj, std::size_t heads) {
  if (query_in.rank() != 2 || key_in.rank() != 2 || value_in.rank() != 2) {
    throw DimensionError("attention: inputs must be matrices");
  }
  if (key_in.shape() != value_in.shape() || query_in.cols() != key_in.cols()) {
    throw DimensionError("attention: incompatible inputs " + shape_to_string(query_in.shape()) +
                         ", " + shape_to_string(key_in.shape()) + ", " +
                         shape_to_string(value_in.shape()));
  }
  const std::size_t d = query_in.cols();
  if (heads == 0 || d % heads != 0) throw ConfigError("attention: width not divisible by heads");
  const Tensor q = matmul(tape, query_in, proj.query);
  const Tensor k = matmul(tape, key_in, proj.key);
  const Tensor v = matmul(tape, value_in, proj.value);
  const std::size_t head_width = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_width));

  auto head = [&](const Tensor& qh, const Tensor& kh, const Tensor& vh) {
    const Tensor scores = scale(tape, matmul(tape, qh, transpose(tape, kh)), inv_sqrt);
    return matmul(tape, softmax_rows(tape, scores), vh);
  };

  Tensor mixed;
  if (heads == 1) {
    mixed = head(q, k, v);
  } else {
    std::vector<Tensor> parts;
    parts.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t b = h * head_width, e = b + head_width;
      parts.push_back(head(slice_cols(tape, q, b, e), slice_cols(tape, k, b, e),
                           slice_cols(tape, v, b, e)));
    }
    mixed = concat_cols(tape, parts);
  }
  return matmul(tape, mixed, proj.output);
}

Tensor decoder_forward(Tape* tape, const Tensor& state, const Tensor& evidence,
                       const DecoderParams& p, std::size_t heads, Activation activation) {
  if (state.shape() != evidence.shape()) {
    throw DimensionError("decoder: state " + shape_to_string(state.shape()) + " vs evidence " +
                         shape_to_string(evidence.shape()));
  }
  const Tensor state_n = layer_norm(tape, state, p.norm_state.gamma, p.norm_state.beta);
  const Tensor l1 = add(tape, state, attention(tape, state_n, state_n, state_n, p.self_attention, heads));

  const Tensor l1_n = layer_norm(tape, l1, p.norm_query.gamma, p.norm_query.beta);
  const Tensor ev_n = layer_norm(tape, evidence, p.norm_evidence.gamma, p.norm_evidence.beta);
  const Tensor l2 = add(tape, l1, attention(tape, l1_n, ev_n, ev_n, p.cross_attention, heads));

  const Tensor l2_n = layer_norm(tape, l2, p.norm_ffn.gamma, p.norm_ffn.beta);
  const Tensor hidden = activate(tape, affine(tape, l2_n, p.ffn_in, p.ffn_in_bias), activation);
  return add(tape, l2, affine(tape, hidden, p.ffn_out, p.ffn_out_bias));
}

Tensor assess_confidence(Tape* tape, const Tensor& hidden, const AssessorParams& assessor) {
  const Tensor pooled = mean_pool_tokens(tape, hidden);
  return sigmoid(tape, add(tape, dot(tape, assessor.weight, pooled), assessor.bias));
}

Tensor classify(Tape* tape, const Tensor& features, const ClassifierParams& c, Activation activation) {
  if (features.rank() != 1 || features.size() != c.w1.rows()) {
    throw DimensionError("classifier expects width " + std::to_string(c.w1.rows()) + ", got " +
                         shape_to_string(features.shape()));
  }
  const Tensor x = reshape(tape, features, {1, features.size()});
  const Tensor h1 = activate(tape, affine(tape, x, c.w1, c.b1), activation);
  const Tensor h2 = activate(tape, affine(tape, h1, c.w2, c.b2), activation);
  const Tensor logit = affine(tape, h2, c.w3, c.b3);
  return sigmoid(tape, reshape(tape, logit, {1}));
}

Model::Model(ModelConfig config, ModelParams params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const std::size_t expected = config_.shared_decoders ? 1 : config_.max_evidence;
  if (params_.decoders.size() != expected) {
    throw ConfigError("model holds " + std::to_string(params_.decoders.size()) +
                      " decoders, configuration expects " + std::to_string(expected));
  }
  if (config_.shared_decoders != params_.step_embeddings.defined()) {
    throw ConfigError("step embeddings must be present exactly in shared-decoder mode");
  }
  if (config_.use_adapter != params_.adapter.has_value()) {
    throw ConfigError("adapter presence disagrees with configuration");
  }
}

Tensor Model::embed(Tape* tape, const Tensor& raw) const {
  if (raw.rank() != 2 || raw.rows() != config_.tokens || raw.cols() != config_.width) {
    throw DimensionError("embedding " + shape_to_string(raw.shape()) + " does not match L x d = [" +
                         std::to_string(config_.tokens) + "x" + std::to_string(config_.width) + "]");
  }
  if (!params_.adapter) return raw;
  return affine(tape, raw, params_.adapter->weight, params_.adapter->bias);
}

Tensor Model::decode(Tape* tape, std::size_t step, const Tensor& state, const Tensor& evidence) const {
  if (step < 1 || step > config_.max_evidence) {
    throw IndexError("decoder step " + std::to_string(step) + " outside [1, " +
                     std::to_string(config_.max_evidence) + "]");
  }
  if (config_.shared_decoders) {
    const Tensor marker = select_row(tape, params_.step_embeddings, step - 1);
    return decoder_forward(tape, state, add_bias(tape, evidence, marker), params_.decoders.front(),
                           config_.heads, config_.activation);
  }
  return decoder_forward(tape, state, evidence, params_.decoders[step - 1], config_.heads,
                         config_.activation);
}

Tensor Model::confidence(Tape* tape, const Tensor& hidden) const {
  return assess_confidence(tape, hidden, params_.assessor);
}

std::size_t Model::classifier_input_width() const {
  return config_.concat_hidden ? config_.width * config_.max_evidence : config_.width;
}

Tensor Model::predict(Tape* tape, std::span<const Tensor> states) const {
  if (states.empty() || states.size() > config_.max_evidence) {
    throw IndexError("predict needs between 1 and N hidden states, got " + std::to_string(states.size()));
  }
  if (!config_.concat_hidden) {
    return classify(tape, mean_pool_tokens(tape, states.back()), params_.classifier, config_.activation);
  }
  std::vector<Tensor> pooled;
  pooled.reserve(config_.max_evidence);
  for (const auto& s : states) pooled.push_back(mean_pool_tokens(tape, s));
  while (pooled.size() < config_.max_evidence) pooled.push_back(Tensor::zeros({config_.width}));
  return classify(tape, concat(tape, pooled), params_.classifier, config_.activation);
}

Model Model::clone() const {
  ModelParams copy = params_;
  // Rebind every handle in the copy to fresh storage.
  auto fresh = [](Tensor& t) { if (t.defined()) t = t.clone(); };
  for (auto& dec : copy.decoders) {
    for (auto* n : {&dec.norm_state, &dec.norm_query, &dec.norm_evidence, &dec.norm_ffn}) {
      fresh(n->gamma);
      fresh(n->beta);
    }
    for (auto* a : {&dec.self_attention, &dec.cross_attention}) {
      fresh(a->query);
      fresh(a->key);
      fresh(a->value);
      fresh(a->output);
    }
    fresh(dec.ffn_in);
    fresh(dec.ffn_in_bias);
    fresh(dec.ffn_out);
    fresh(dec.ffn_out_bias);
  }
  fresh(copy.step_embeddings);
  if (copy.adapter) {
    fresh(copy.adapter->weight);
    fresh(copy.adapter->bias);
  }
  fresh(copy.assessor.weight);
  fresh(copy.assessor.bias);
  auto& c = copy.classifier;
  for (auto* t : {&c.w1, &c.b1, &c.w2, &c.b2, &c.w3, &c.b3}) fresh(*t);
  return Model(config_, std::move(copy));
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Initializer init(seed);
  const std::size_t d = config.width;
  ModelParams p;
  if (config.use_adapter) {
    p.adapter = AdapterParams{init.uniform({d, d}, d), init.uniform({d}, d)};
  }
  const std::size_t decoders = config.shared_decoders ? 1 : config.max_evidence;
  for (std::size_t i = 0; i < decoders; ++i) p.decoders.push_back(init.decoder(d, config.ffn_hidden));
  if (config.shared_decoders) p.step_embeddings = init.uniform({config.max_evidence, d}, d);

  const std::size_t in = config.concat_hidden ? d * config.max_evidence : d;
  const std::size_t h = config.mlp_hidden;
  p.classifier.w1 = init.uniform({in, h}, in);
  p.classifier.b1 = init.uniform({h}, in);
  p.classifier.w2 = init.uniform({h, h}, h);
  p.classifier.b2 = init.uniform({h}, h);
  p.classifier.w3 = init.uniform({h, 1}, h);
  p.classifier.b3 = init.uniform({1}, h);
  p.assessor.weight = init.uniform({d}, d);
  p.assessor.bias = init.uniform({1}, d);
  return Model(config, std::move(p));
}

std::vector<Tensor> snapshot(const ModelParams& params, std::span<const ParamGroup> groups) {
  std::vector<Tensor> out;
  for (const auto& p : list_parameters(params)) {
    for (auto g : groups) {
      if (p.group == g) {
        out.push_back(p.tensor.detach());
        break;
      }
    }
  }
  return out;
}

bool matches_snapshot(const ModelParams& params, std::span<const ParamGroup> groups,
                      std::span<const Tensor> snap) {
  const auto current = snapshot(params, groups);
  if (current.size() != snap.size()) return false;
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (!bitwise_equal(current[i], snap[i])) return false;
  }
  return true;
}

}  // namespace see
