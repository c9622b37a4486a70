#include "cgnmt/attention.hpp"

namespace cgnmt {

AttentionParams::AttentionParams(int state_dim, int annotation_dim, int attention_dim)
    : W_a(attention_dim, state_dim), U_a(attention_dim, annotation_dim), v_a(attention_dim, 1) {}

void AttentionParams::append_to(ParameterList& out, const std::string& prefix) {
  out.push_back({prefix + "W_a", &W_a});
  out.push_back({prefix + "U_a", &U_a});
  out.push_back({prefix + "v_a", &v_a});
}

AttentionMemory build_memory(const Annotations& annotations, const AttentionParams& params) {
  if (annotations.empty()) {
    throw InputError("attention: empty annotations");
  }
  const auto len = static_cast<Eigen::Index>(annotations.size());
  const Eigen::Index dim = annotations[0].size();
  if (dim != params.U_a.cols()) {
    throw ShapeError("attention: annotation dim " + std::to_string(dim) +
                     " does not match U_a " +
                     shape_string(params.U_a.rows(), params.U_a.cols()));
  }
  AttentionMemory memory;
  memory.annotations.resize(len, dim);
  for (Eigen::Index j = 0; j < len; ++j) {
    if (annotations[static_cast<std::size_t>(j)].size() != dim) {
      throw ShapeError("attention: annotations have inconsistent dims");
    }
    memory.annotations.row(j) = annotations[static_cast<std::size_t>(j)].transpose();
  }
  memory.keys.noalias() = memory.annotations * params.U_a.value.transpose();
  return memory;
}

AttentionCache align_cached(const Vector& t_prev, const AttentionMemory& memory,
                            const AttentionParams& params) {
  if (t_prev.size() != params.W_a.cols()) {
    throw ShapeError("attention: state " + shape_string(t_prev.size(), 1) +
                     " does not match W_a " +
                     shape_string(params.W_a.rows(), params.W_a.cols()));
  }
  const Vector query = params.W_a.value * t_prev;
  AttentionCache cache;
  cache.hidden = (memory.keys.rowwise() + query.transpose()).array().tanh().matrix();
  const Vector energies = cache.hidden * params.v_a.vec();
  cache.step.alpha = softmax(energies);
  cache.step.context.noalias() = memory.annotations.transpose() * cache.step.alpha;
  return cache;
}

AttentionStep align(const Vector& t_prev, const Annotations& annotations,
                    const AttentionParams& params) {
  return align_cached(t_prev, build_memory(annotations, params), params).step;
}

Vector align_backward(const AttentionCache& cache, const AttentionMemory& memory,
                      const Vector& t_prev, const Vector& d_context,
                      AttentionParams& params, AttentionGrads& grads) {
  const Vector& alpha = cache.step.alpha;
  grads.d_annotations.noalias() += alpha * d_context.transpose();
  const Vector d_alpha = memory.annotations * d_context;
  const Vector d_energy = alpha.cwiseProduct((d_alpha.array() - alpha.dot(d_alpha)).matrix());

  params.v_a.grad.col(0).noalias() += cache.hidden.transpose() * d_energy;
  // d pre_j = d_energy_j * v_a * (1 - hidden_j^2), one row per source position.
  Matrix d_pre = d_energy * params.v_a.vec().transpose();
  d_pre.array() *= 1.0 - cache.hidden.array().square();

  grads.d_keys += d_pre;
  const Vector d_query = d_pre.colwise().sum().transpose();
  params.W_a.grad.noalias() += d_query * t_prev.transpose();
  return params.W_a.value.transpose() * d_query;
}

void memory_backward(const AttentionMemory& memory, AttentionParams& params,
                     AttentionGrads& grads) {
  params.U_a.grad.noalias() += grads.d_keys.transpose() * memory.annotations;
  grads.d_annotations.noalias() += grads.d_keys * params.U_a.value;
}

}  // namespace cgnmt
