#include "cgnmt/encoder.hpp"

#include <string>

namespace cgnmt {

GruParams::GruParams(int input_dim, int hidden_dim)
    : W_r(hidden_dim, input_dim),
      U_r(hidden_dim, hidden_dim),
      W_u(hidden_dim, input_dim),
      U_u(hidden_dim, hidden_dim),
      W_c(hidden_dim, input_dim),
      U_c(hidden_dim, hidden_dim) {}

void GruParams::append_to(ParameterList& out, const std::string& prefix) {
  out.push_back({prefix + "W_r", &W_r});
  out.push_back({prefix + "U_r", &U_r});
  out.push_back({prefix + "W_u", &W_u});
  out.push_back({prefix + "U_u", &U_u});
  out.push_back({prefix + "W_c", &W_c});
  out.push_back({prefix + "U_c", &U_c});
}

GruStep gru_forward(const GruParams& p, const Eigen::Ref<const Vector>& x,
                    const Vector& h_prev) {
  GruStep s;
  s.h_prev = h_prev;
  s.r = (p.W_r.value * x + p.U_r.value * h_prev).unaryExpr([](double v) { return sigmoid(v); });
  s.u = (p.W_u.value * x + p.U_u.value * h_prev).unaryExpr([](double v) { return sigmoid(v); });
  const Vector gated = s.r.cwiseProduct(h_prev);
  s.c = (p.W_c.value * x + p.U_c.value * gated).array().tanh().matrix();
  s.h = h_prev + s.u.cwiseProduct(s.c - h_prev);
  return s;
}

Vector gru_backward(GruParams& p, const GruStep& s, const Eigen::Ref<const Vector>& x,
                    const Vector& dh, Eigen::Ref<Vector> dx) {
  const Vector du = dh.cwiseProduct(s.c - s.h_prev);
  const Vector dc = dh.cwiseProduct(s.u);
  Vector dh_prev = dh.cwiseProduct((1.0 - s.u.array()).matrix());

  const Vector dpc = dc.cwiseProduct((1.0 - s.c.array().square()).matrix());
  const Vector gated = s.r.cwiseProduct(s.h_prev);
  p.W_c.grad.noalias() += dpc * x.transpose();
  p.U_c.grad.noalias() += dpc * gated.transpose();
  dx.noalias() += p.W_c.value.transpose() * dpc;
  const Vector dgated = p.U_c.value.transpose() * dpc;
  const Vector dr = dgated.cwiseProduct(s.h_prev);
  dh_prev += dgated.cwiseProduct(s.r);

  const Vector dpu = du.cwiseProduct(s.u.cwiseProduct((1.0 - s.u.array()).matrix()));
  p.W_u.grad.noalias() += dpu * x.transpose();
  p.U_u.grad.noalias() += dpu * s.h_prev.transpose();
  dx.noalias() += p.W_u.value.transpose() * dpu;
  dh_prev.noalias() += p.U_u.value.transpose() * dpu;

  const Vector dpr = dr.cwiseProduct(s.r.cwiseProduct((1.0 - s.r.array()).matrix()));
  p.W_r.grad.noalias() += dpr * x.transpose();
  p.U_r.grad.noalias() += dpr * s.h_prev.transpose();
  dx.noalias() += p.W_r.value.transpose() * dpr;
  dh_prev.noalias() += p.U_r.value.transpose() * dpr;
  return dh_prev;
}

EncoderParams::EncoderParams(int vocab_size, int embedding_dim, int hidden_dim)
    : embedding(vocab_size, embedding_dim),
      forward(embedding_dim, hidden_dim),
      backward(embedding_dim, hidden_dim) {}

void EncoderParams::append_to(ParameterList& out, const std::string& prefix) {
  out.push_back({prefix + "embedding", &embedding});
  forward.append_to(out, prefix + "forward.");
  backward.append_to(out, prefix + "backward.");
}

namespace {

void check_source(std::span<const TokenId> source, const EncoderParams& params) {
  if (source.empty()) {
    throw InputError("encode: empty source sentence");
  }
  for (TokenId id : source) {
    if (id < 0 || id >= params.vocab_size()) {
      throw InputError("encode: source token id " + std::to_string(id) +
                       " outside embedding range [0, " +
                       std::to_string(params.vocab_size()) + ")");
    }
  }
}

}  // namespace

EncoderCache encode_cached(std::span<const TokenId> source, const EncoderParams& params) {
  check_source(source, params);
  const auto len = source.size();
  const int n = params.hidden_dim();
  EncoderCache cache;
  cache.source.assign(source.begin(), source.end());
  cache.forward_steps.resize(len);
  cache.backward_steps.resize(len);

  Vector h = Vector::Zero(n);
  for (std::size_t j = 0; j < len; ++j) {
    cache.forward_steps[j] =
        gru_forward(params.forward, params.embedding.value.row(source[j]).transpose(), h);
    h = cache.forward_steps[j].h;
  }
  h = Vector::Zero(n);
  for (std::size_t j = len; j-- > 0;) {
    cache.backward_steps[j] =
        gru_forward(params.backward, params.embedding.value.row(source[j]).transpose(), h);
    h = cache.backward_steps[j].h;
  }
  cache.annotations.states.resize(len);
  for (std::size_t j = 0; j < len; ++j) {
    Vector& a = cache.annotations.states[j];
    a.resize(2 * n);
    a.head(n) = cache.forward_steps[j].h;
    a.tail(n) = cache.backward_steps[j].h;
  }
  return cache;
}

Annotations encode(std::span<const TokenId> source, const EncoderParams& params) {
  return encode_cached(source, params).annotations;
}

Vector first_backward_state(const Annotations& annotations) {
  if (annotations.empty()) {
    throw InputError("first_backward_state: no annotations");
  }
  const Vector& h1 = annotations.states.front();
  return h1.tail(h1.size() / 2);
}

void encode_backward(const EncoderCache& cache, std::span<const Vector> d_annotations,
                     EncoderParams& params) {
  const auto len = cache.source.size();
  if (d_annotations.size() != len) {
    throw ContractViolation("encode_backward: gradient count does not match source length");
  }
  const int n = params.hidden_dim();
  const int m = params.embedding_dim();
  Vector dx(m);

  Vector carry = Vector::Zero(n);
  for (std::size_t j = len; j-- > 0;) {
    const Vector dh = d_annotations[j].head(n) + carry;
    const TokenId tok = cache.source[j];
    dx.setZero();
    carry = gru_backward(params.forward, cache.forward_steps[j],
                         params.embedding.value.row(tok).transpose(), dh, dx);
    params.embedding.grad.row(tok) += dx.transpose();
  }
  carry.setZero();
  for (std::size_t j = 0; j < len; ++j) {
    const Vector dh = d_annotations[j].tail(n) + carry;
    const TokenId tok = cache.source[j];
    dx.setZero();
    carry = gru_backward(params.backward, cache.backward_steps[j],
                         params.embedding.value.row(tok).transpose(), dh, dx);
    params.embedding.grad.row(tok) += dx.transpose();
  }
}

}  // namespace cgnmt
