#pragma once

#include <span>
#include <vector>

#include "cgnmt/corpus.hpp"
#include "cgnmt/numerics.hpp"

namespace cgnmt {

// Bias-free GRU:
//   r = sigmoid(W_r x + U_r h),  u = sigmoid(W_u x + U_u h)
//   c = tanh(W_c x + U_c (r * h)),  h' = (1 - u) * h + u * c
struct GruParams {
  Parameter W_r, U_r, W_u, U_u, W_c, U_c;

  GruParams() = default;
  GruParams(int input_dim, int hidden_dim);

  void append_to(ParameterList& out, const std::string& prefix);
};

struct GruStep {
  Vector h_prev, r, u, c, h;
};

GruStep gru_forward(const GruParams& p, const Eigen::Ref<const Vector>& x,
                    const Vector& h_prev);

// Accumulates parameter gradients; returns dL/dh_prev and adds dL/dx to dx.
Vector gru_backward(GruParams& p, const GruStep& step,
                    const Eigen::Ref<const Vector>& x, const Vector& dh,
                    Eigen::Ref<Vector> dx);

struct EncoderParams {
  Parameter embedding;  // [|V_src| x m]
  GruParams forward;
  GruParams backward;

  EncoderParams() = default;
  EncoderParams(int vocab_size, int embedding_dim, int hidden_dim);

  int embedding_dim() const { return static_cast<int>(embedding.cols()); }
  int hidden_dim() const { return static_cast<int>(forward.U_r.rows()); }
  int vocab_size() const { return static_cast<int>(embedding.rows()); }

  void append_to(ParameterList& out, const std::string& prefix);
};

// h_j = [forward state after x_1..x_j ; backward state after x_J..x_j].
struct Annotations {
  std::vector<Vector> states;

  std::size_t size() const { return states.size(); }
  bool empty() const { return states.empty(); }
  const Vector& operator[](std::size_t j) const { return states[j]; }
};

struct EncoderCache {
  Sentence source;
  std::vector<GruStep> forward_steps;   // index j reads x_j
  std::vector<GruStep> backward_steps;  // index j reads x_j
  Annotations annotations;
};

Annotations encode(std::span<const TokenId> source, const EncoderParams& params);
EncoderCache encode_cached(std::span<const TokenId> source, const EncoderParams& params);

// Backward state after reading x_J..x_1, i.e. the second half of h_1.
Vector first_backward_state(const Annotations& annotations);

void encode_backward(const EncoderCache& cache, std::span<const Vector> d_annotations,
                     EncoderParams& params);

}  // namespace cgnmt
