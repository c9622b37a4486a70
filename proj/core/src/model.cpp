#include "cgnmt/model.hpp"

#include <cmath>
#include <string>

namespace cgnmt {

void validate(const ModelConfig& c) {
  if (c.embedding_dim < 1 || c.state_dim < 1 || c.attention_dim < 1) {
    throw ConfigError("model: all dimensions must be >= 1");
  }
  if (c.source_vocab_size < 1 || c.target_vocab_size <= kEos) {
    throw ConfigError("model: vocabularies must include the reserved tokens");
  }
  if (!(c.init_scale >= 0.0) || !std::isfinite(c.init_scale)) {
    throw ConfigError("model: init_scale must be a finite non-negative number");
  }
  validate(c.gate);
  validate(c.scale);
}

ModelParams::ModelParams(const ModelConfig& c)
    : encoder(c.source_vocab_size, c.embedding_dim, c.state_dim),
      attention(c.state_dim, c.annotation_dim(), c.attention_dim),
      cell(c.embedding_dim, c.state_dim, c.annotation_dim(), c.cell, c.gate),
      target_embedding(c.target_vocab_size, c.embedding_dim),
      W_o(c.target_vocab_size, c.state_dim),
      V_o(c.target_vocab_size, c.embedding_dim),
      C_o(c.target_vocab_size, c.annotation_dim()),
      W_init(c.state_dim, c.state_dim) {}

ParameterList ModelParams::parameters() {
  ParameterList out;
  encoder.append_to(out, "encoder.");
  attention.append_to(out, "attention.");
  cell.append_to(out, "cell.");
  out.push_back({"target_embedding", &target_embedding});
  out.push_back({"readout.W_o", &W_o});
  out.push_back({"readout.V_o", &V_o});
  out.push_back({"readout.C_o", &C_o});
  out.push_back({"init.W_init", &W_init});
  return out;
}

std::vector<std::pair<std::string, const Parameter*>> ModelParams::parameters() const {
  std::vector<std::pair<std::string, const Parameter*>> out;
  for (auto& np : const_cast<ModelParams*>(this)->parameters()) {
    out.emplace_back(np.name, np.param);
  }
  return out;
}

void ModelParams::zero_grads() {
  for (auto& np : parameters()) {
    np.param->zero_grad();
  }
}

std::int64_t ModelParams::entry_count() const {
  std::int64_t total = 0;
  for (const auto& [name, p] : parameters()) {
    total += p->size();
  }
  return total;
}

Model init_model(const ModelConfig& config) {
  validate(config);
  Model model{config, ModelParams(config)};
  Rng rng(config.seed);
  for (auto& np : model.params.parameters()) {
    fill_uniform(np.param->value, rng, config.init_scale);
  }
  return model;
}

Vector readout(const ModelParams& p, const Vector& prev_word, const Vector& t,
               const Vector& source) {
  return softmax(affine(p.W_o.value, t) + affine(p.V_o.value, prev_word) +
                 affine(p.C_o.value, source));
}

EncodedSource encode_source(std::span<const TokenId> source, const Model& model) {
  const auto& p = model.params;
  EncodedSource enc;
  enc.encoder = encode_cached(source, p.encoder);
  enc.memory = build_memory(enc.encoder.annotations, p.attention);
  enc.init_input = first_backward_state(enc.encoder.annotations);
  enc.t0 = (p.W_init.value * enc.init_input).array().tanh().matrix();
  return enc;
}

StepCache decode_step(const Model& model, const EncodedSource& encoded, const Vector& t_prev,
                      TokenId prev_token) {
  const auto& p = model.params;
  if (prev_token < 0 || prev_token >= p.target_embedding.rows()) {
    throw InputError("decoder: target token id " + std::to_string(prev_token) +
                     " outside embedding range");
  }
  StepCache s;
  s.prev_token = prev_token;
  s.attention = align_cached(t_prev, encoded.memory, p.attention);
  const Vector e = p.target_embedding.value.row(prev_token).transpose();
  s.cell = cell_step(e, t_prev, s.attention.step.context, model.config.cell, model.config.gate,
                     model.config.scale, p.cell);
  s.logits.noalias() = p.W_o.value * s.cell.t;
  s.logits.noalias() += p.V_o.value * e;
  s.logits.noalias() += p.C_o.value * s.attention.step.context;
  const double peak = s.logits.maxCoeff();
  s.probs = (s.logits.array() - peak).exp().matrix();
  const double total = s.probs.sum();
  s.probs /= total;
  s.log_norm = peak + std::log(total);
  return s;
}

ForwardResult forward(const SequencePair& pair, const Model& model) {
  if (pair.source.empty() || pair.target.empty()) {
    throw InputError("forward: empty sequence pair");
  }
  validate_pair(pair);
  ForwardResult r;
  r.encoded = encode_source(pair.source, model);
  r.steps.reserve(pair.target.size());
  const Vector* t_prev = &r.encoded.t0;
  TokenId prev = kBos;
  for (TokenId y : pair.target) {
    if (y < 0 || y >= model.config.target_vocab_size) {
      throw InputError("forward: target token id " + std::to_string(y) + " out of range");
    }
    r.steps.push_back(decode_step(model, r.encoded, *t_prev, prev));
    r.loss -= r.steps.back().log_prob(y);
    t_prev = &r.steps.back().cell.t;
    prev = y;
  }
  r.loss_per_token = r.loss / static_cast<double>(pair.target.size());
  return r;
}

namespace {

void backward_into_zeroed(const SequencePair& pair, const ForwardResult& r, Model& model);

}  // namespace

void backward(const SequencePair& pair, const ForwardResult& r, Model& model) {
  if (r.steps.size() != pair.target.size() ||
      r.encoded.encoder.source.size() != pair.source.size()) {
    throw ContractViolation("backward: caches do not match the sequence pair");
  }
  // The sentence gradient is formed on its own, then added in one pass.
  std::vector<Matrix> held;
  bool any = false;
  for (auto& [name, param] : model.params.parameters()) {
    held.push_back(param->grad);
    any = any || !param->grad.isZero(0.0);
    param->zero_grad();
  }
  backward_into_zeroed(pair, r, model);
  if (!any) return;
  std::size_t k = 0;
  for (auto& [name, param] : model.params.parameters()) param->grad += held[k++];
}

namespace {

void backward_into_zeroed(const SequencePair& pair, const ForwardResult& r, Model& model) {
  auto& p = model.params;
  const auto& cfg = model.config;
  const auto len = static_cast<Eigen::Index>(pair.source.size());

  AttentionGrads attn;
  attn.d_keys = Matrix::Zero(len, cfg.attention_dim);
  attn.d_annotations = Matrix::Zero(len, cfg.annotation_dim());

  Vector carry = Vector::Zero(cfg.state_dim);
  Vector dl;
  for (std::size_t i = pair.target.size(); i-- > 0;) {
    const StepCache& s = r.steps[i];
    const Vector& t = s.cell.t;
    const Vector& e = s.cell.prev_word;
    const Vector& ctx = s.attention.step.context;

    dl = s.probs;
    dl(pair.target[i]) -= 1.0;
    p.W_o.grad.noalias() += dl * t.transpose();
    p.V_o.grad.noalias() += dl * e.transpose();
    p.C_o.grad.noalias() += dl * ctx.transpose();
    Vector d_t = carry;
    d_t.noalias() += p.W_o.value.transpose() * dl;
    Vector d_e = p.V_o.value.transpose() * dl;
    Vector d_ctx = p.C_o.value.transpose() * dl;

    const CellInputGrads g = cell_backward(s.cell, d_t, cfg.cell, cfg.gate, cfg.scale, p.cell);
    d_e += g.prev_word;
    d_ctx += g.source;
    carry = g.t_prev;
    carry += align_backward(s.attention, r.encoded.memory, s.cell.t_prev, d_ctx, p.attention,
                            attn);
    p.target_embedding.grad.row(s.prev_token) += d_e.transpose();
  }

  const Vector d_pre = carry.cwiseProduct((1.0 - r.encoded.t0.array().square()).matrix());
  p.W_init.grad.noalias() += d_pre * r.encoded.init_input.transpose();
  const Vector d_init_input = p.W_init.value.transpose() * d_pre;

  memory_backward(r.encoded.memory, p.attention, attn);
  std::vector<Vector> d_annotations(static_cast<std::size_t>(len));
  for (Eigen::Index j = 0; j < len; ++j) {
    d_annotations[static_cast<std::size_t>(j)] = attn.d_annotations.row(j).transpose();
  }
  d_annotations.front().tail(cfg.state_dim) += d_init_input;
  encode_backward(r.encoded.encoder, d_annotations, p.encoder);
}

}  // namespace

}  // namespace cgnmt
