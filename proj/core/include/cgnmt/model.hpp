#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cgnmt/attention.hpp"
#include "cgnmt/corpus.hpp"
#include "cgnmt/decoder_cells.hpp"
#include "cgnmt/encoder.hpp"
#include "cgnmt/numerics.hpp"

namespace cgnmt {

struct ModelConfig {
  int embedding_dim = 32;  // m
  int state_dim = 32;      // n; annotations have 2n
  int attention_dim = 32;  // d_a
  int source_vocab_size = 0;
  int target_vocab_size = 0;
  CellKind cell = CellKind::gru;
  GateConfig gate;
  ScaleConfig scale;
  std::uint64_t seed = 1;
  double init_scale = 0.08;

  int annotation_dim() const { return 2 * state_dim; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void validate(const ModelConfig& config);

struct ModelParams {
  EncoderParams encoder;
  AttentionParams attention;
  CellParams cell;
  Parameter target_embedding;  // [|V_tgt| x m]
  Parameter W_o;               // [|V_tgt| x n]
  Parameter V_o;               // [|V_tgt| x m]
  Parameter C_o;               // [|V_tgt| x n']
  Parameter W_init;            // [n x n]

  ModelParams() = default;
  // All-zero parameters shaped by the config.
  explicit ModelParams(const ModelConfig& config);

  // Fixed order; used for initialisation, updates and serialisation.
  ParameterList parameters();
  std::vector<std::pair<std::string, const Parameter*>> parameters() const;
  void zero_grads();
  std::int64_t entry_count() const;
};

struct Model {
  ModelConfig config;
  ModelParams params;
};

// Uniform in [-init_scale, init_scale] from Rng(config.seed), filled in
// parameter order.
Model init_model(const ModelConfig& config);

// softmax(W_o t + V_o e + C_o s)
Vector readout(const ModelParams& params, const Vector& prev_word, const Vector& t,
               const Vector& source);

struct EncodedSource {
  EncoderCache encoder;
  AttentionMemory memory;
  Vector init_input;  // backward encoder state at position 1
  Vector t0;          // tanh(W_init * init_input)
};

EncodedSource encode_source(std::span<const TokenId> source, const Model& model);

struct StepCache {
  TokenId prev_token = kBos;
  AttentionCache attention;
  CellCache cell;
  Vector logits;
  Vector probs;
  double log_norm = 0.0;  // log sum exp(logits)

  const Vector& state() const { return cell.t; }
  const Vector& alpha() const { return attention.step.alpha; }
  const Vector& context() const { return attention.step.context; }
  double log_prob(TokenId y) const { return logits(y) - log_norm; }
};

// One decoder step: attention from t_prev, cell update, readout.
StepCache decode_step(const Model& model, const EncodedSource& encoded, const Vector& t_prev,
                      TokenId prev_token);

struct ForwardResult {
  double loss = 0.0;            // -sum_i log P(y_i | y_<i, x)
  double loss_per_token = 0.0;  // loss / |y|
  EncodedSource encoded;
  std::vector<StepCache> steps;
};

// Teacher-forced forward pass with y_0 = BOS.
ForwardResult forward(const SequencePair& pair, const Model& model);

// Accumulates dloss/dtheta of a matching forward into every Parameter::grad.
void backward(const SequencePair& pair, const ForwardResult& result, Model& model);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

inline constexpr char kModelMagic[4] = {'C', 'G', 'N', 'M'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

}  // namespace cgnmt
