#pragma once

#include "cgnmt/encoder.hpp"
#include "cgnmt/numerics.hpp"

namespace cgnmt {

// Additive attention without biases:
//   e_j = v_a . tanh(W_a t_prev + U_a h_j),  alpha = softmax(e),
//   context = sum_j alpha_j h_j
struct AttentionParams {
  Parameter W_a;  // [d_a x n]
  Parameter U_a;  // [d_a x n']
  Parameter v_a;  // [d_a x 1]

  AttentionParams() = default;
  AttentionParams(int state_dim, int annotation_dim, int attention_dim);

  void append_to(ParameterList& out, const std::string& prefix);
};

struct AttentionStep {
  Vector alpha;
  Vector context;
};

// Per-sentence memory: annotations stacked as rows and their projections
// U_a h_j, computed once and reused at every decoding step.
struct AttentionMemory {
  Matrix annotations;  // [J x n']
  Matrix keys;         // [J x d_a]
};

AttentionMemory build_memory(const Annotations& annotations, const AttentionParams& params);

struct AttentionCache {
  Matrix hidden;  // tanh(W_a t_prev + U_a h_j) per row
  AttentionStep step;
};

AttentionStep align(const Vector& t_prev, const Annotations& annotations,
                    const AttentionParams& params);
AttentionCache align_cached(const Vector& t_prev, const AttentionMemory& memory,
                            const AttentionParams& params);

// Gradients flowing back from one step. d_keys and d_annotations are
// accumulated across steps and finished by memory_backward.
struct AttentionGrads {
  Matrix d_keys;
  Matrix d_annotations;
};

// Accumulates W_a and v_a gradients; returns dL/dt_prev.
Vector align_backward(const AttentionCache& cache, const AttentionMemory& memory,
                      const Vector& t_prev, const Vector& d_context,
                      AttentionParams& params, AttentionGrads& grads);

// Folds accumulated key gradients into U_a and the annotation gradients.
void memory_backward(const AttentionMemory& memory, AttentionParams& params,
                     AttentionGrads& grads);

}  // namespace cgnmt
