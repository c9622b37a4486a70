#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "cgnmt/numerics.hpp"

namespace cgnmt {

enum class CellKind { vanilla, gru };

enum class GateVariant { none, source, target, both, gating_scalar };

enum class GateGranularity { elementwise, scalar };

// Which signals feed the gate preactivation. The previous decoder state is
// mandatory for every variant.
struct GateInputs {
  bool prev_state = true;
  bool source = true;
  bool prev_word = true;

  friend bool operator==(const GateInputs&, const GateInputs&) = default;
};

struct GateConfig {
  GateVariant variant = GateVariant::none;
  GateInputs inputs;
  GateGranularity granularity = GateGranularity::elementwise;

  // Fills in the granularity and, for the gating scalar, the fixed inputs.
  static GateConfig make(GateVariant variant, GateInputs inputs = {});

  bool active() const { return variant != GateVariant::none; }

  friend bool operator==(const GateConfig&, const GateConfig&) = default;
};

void validate(const GateConfig& cfg);

// Multipliers on the source (a) and target (b) preactivations.
struct ScaleConfig {
  double source = 1.0;
  double target = 1.0;

  friend bool operator==(const ScaleConfig&, const ScaleConfig&) = default;
};

void validate(const ScaleConfig& scale);

std::string_view to_string(CellKind kind);
std::string_view to_string(GateVariant variant);
CellKind parse_cell_kind(std::string_view name);
GateVariant parse_gate_variant(std::string_view name);
// Comma separated subset of {t, s, y}.
GateInputs parse_gate_inputs(std::string_view spec);
std::string to_string(const GateInputs& inputs);

// Decoder cell weights. For vanilla only W, U, C are used; GRU adds the
// reset and update triples. Context-gate matrices exist only for the inputs
// the gate reads; the gating scalar uses u_z and b_z instead.
struct CellParams {
  Parameter W, U, C;
  Parameter W_r, U_r, C_r;
  Parameter W_u, U_u, C_u;
  Parameter W_z, U_z, C_z;
  Parameter u_z, b_z;

  CellParams() = default;
  CellParams(int embedding_dim, int state_dim, int annotation_dim, CellKind kind,
             const GateConfig& gate);

  int state_dim() const { return static_cast<int>(U.rows()); }

  void append_to(ParameterList& out, const std::string& prefix);
};

// Gate value: n coordinates for elementwise gates, one for the scalar.
Vector compute_gate(const Vector& prev_word, const Vector& t_prev, const Vector& source,
                    const GateConfig& cfg, const CellParams& params);

// One preactivation split into its target part (W e + U t) and source
// part (C s).
struct Preactivation {
  Vector target;
  Vector source;
};

struct CellCache {
  Vector prev_word, t_prev, source;
  Vector z;                    // empty when no gate is active
  Vector coef_target;          // multiplier on every target part
  Vector coef_source;          // multiplier on every source part
  Preactivation candidate;     // vanilla state or GRU candidate
  Preactivation reset, update; // GRU only
  Vector r, u, c;              // GRU activations; c is the candidate
  Vector t;
};

// t = f(coef_target * T + coef_source * S) with coefficients
//   none:    (b, a)            source: (b, a z)         target: (b z, a)
//   both:    (b (1 - z), a z)  gating_scalar: (b, a z)
// where (a, b) is the scale. GRU applies them inside all three
// preactivations with one z per step.
CellCache cell_step(const Vector& prev_word, const Vector& t_prev, const Vector& source,
                    CellKind kind, const GateConfig& gate, const ScaleConfig& scale,
                    const CellParams& params);

// Same as cell_step with the gate value supplied by the caller.
CellCache cell_step_with_gate(const Vector& prev_word, const Vector& t_prev,
                              const Vector& source, CellKind kind, const GateConfig& gate,
                              const ScaleConfig& scale, const Vector& z,
                              const CellParams& params);

struct CellInputGrads {
  Vector prev_word;
  Vector t_prev;
  Vector source;
};

CellInputGrads cell_backward(const CellCache& cache, const Vector& d_t, CellKind kind,
                             const GateConfig& gate, const ScaleConfig& scale,
                             CellParams& params);

struct ParameterCount {
  std::int64_t cell = 0;                // the state-update weights
  std::int64_t gru_internal_gates = 0;  // reset + update share of `cell`
  std::int64_t context_gate = 0;

  std::int64_t total() const { return cell + context_gate; }
};

ParameterCount count_parameters(std::int64_t embedding_dim, std::int64_t state_dim,
                                std::int64_t annotation_dim, CellKind kind,
                                const GateConfig& gate);

}  // namespace cgnmt
