#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "see/ops.hpp"
#include "see/tensor.hpp"

namespace see {

struct ModelConfig {
  std::size_t tokens = 16;        // L
  std::size_t width = 32;         // d
  std::size_t max_evidence = 4;   // N
  std::size_t heads = 1;
  std::size_t ffn_hidden = 128;   // conventionally 4d
  std::size_t mlp_hidden = 16;    // conventionally d/2
  Activation activation = Activation::gelu;
  bool shared_decoders = false;
  bool concat_hidden = false;
  bool use_adapter = true;

  void validate() const;
};

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
};

struct AttentionParams {
  Tensor query;
  Tensor key;
  Tensor value;
  Tensor output;
};

// One examination block: pre-norm self-attention over the running state,
// cross-attention from the state into the evidence, then a feed-forward
// network, each wrapped in a residual connection.
struct DecoderParams {
  LayerNormParams norm_state;
  LayerNormParams norm_query;
  LayerNormParams norm_evidence;
  LayerNormParams norm_ffn;
  AttentionParams self_attention;
  AttentionParams cross_attention;
  Tensor ffn_in;
  Tensor ffn_in_bias;
  Tensor ffn_out;
  Tensor ffn_out_bias;
};

// f(.) followed by a sigmoid; one instance serves every time-step.
struct AssessorParams {
  Tensor weight;  // [d]
  Tensor bias;    // [1]
};

// Three affine layers input -> h -> h -> 1.
struct ClassifierParams {
  Tensor w1, b1;
  Tensor w2, b2;
  Tensor w3, b3;
};

// Trainable d x d affine map over raw embeddings, standing in for the
// fine-tuned text encoder.
struct AdapterParams {
  Tensor weight;
  Tensor bias;
};

struct ModelParams {
  std::vector<DecoderParams> decoders;  // N entries, or 1 when shared
  Tensor step_embeddings;               // [N x d], shared mode only
  std::optional<AdapterParams> adapter;
  AssessorParams assessor;
  ClassifierParams classifier;
};

enum class ParamGroup { extractor, classifier, assessor };

struct NamedParam {
  std::string name;
  ParamGroup group;
  Tensor tensor;
};

// Every trainable tensor in a fixed order. Checkpoints, optimizer state and
// snapshots are all keyed by position in this list.
std::vector<NamedParam> list_parameters(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

// Attn(Q, K, V) = softmax(Q K^T / sqrt(d_head)) V with learned input and
// output projections; heads split the width evenly.
Tensor attention(Tape* tape, const Tensor& query_in, const Tensor& key_in, const Tensor& value_in,
                 const AttentionParams& proj, std::size_t heads = 1);

Tensor decoder_forward(Tape* tape, const Tensor& state, const Tensor& evidence,
                       const DecoderParams& params, std::size_t heads = 1,
                       Activation activation = Activation::gelu);

// s = sigmoid(w . mean_pool(hidden) + b)
Tensor assess_confidence(Tape* tape, const Tensor& hidden, const AssessorParams& assessor);

// sigmoid(MLP(features)) for a pooled feature vector.
Tensor classify(Tape* tape, const Tensor& features, const ClassifierParams& classifier,
                Activation activation = Activation::gelu);

class Model {
 public:
  Model(ModelConfig config, ModelParams params);

  const ModelConfig& config() const noexcept { return config_; }
  const ModelParams& params() const noexcept { return params_; }
  ModelParams& params() noexcept { return params_; }

  // Applies the adapter (if any) to a raw L x d embedding.
  Tensor embed(Tape* tape, const Tensor& raw) const;

  // Runs decoder `step` (1-based) on an already embedded evidence block.
  Tensor decode(Tape* tape, std::size_t step, const Tensor& state, const Tensor& evidence) const;

  Tensor confidence(Tape* tape, const Tensor& hidden) const;

  // Step prediction from the hidden states produced so far. Uses the last
  // state, or in concat mode the pooled states joined and zero-filled to N.
  Tensor predict(Tape* tape, std::span<const Tensor> states) const;

  std::size_t classifier_input_width() const;

  // Deep copy; the clone shares no storage with this model.
  Model clone() const;

 private:
  ModelConfig config_;
  ModelParams params_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, layer-norm
// gamma = 1 and beta = 0. Deterministic given the seed.
Model init_model(const ModelConfig& config, std::uint64_t seed);

// Snapshot helpers used by the training contract checks.
std::vector<Tensor> snapshot(const ModelParams& params, std::span<const ParamGroup> groups);
bool matches_snapshot(const ModelParams& params, std::span<const ParamGroup> groups,
                      std::span<const Tensor> snap);

}  // namespace see
