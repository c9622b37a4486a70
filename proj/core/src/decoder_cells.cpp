#include "cgnmt/decoder_cells.hpp"

#include <cmath>

namespace cgnmt {

GateConfig GateConfig::make(GateVariant variant, GateInputs inputs) {
  GateConfig cfg;
  cfg.variant = variant;
  cfg.inputs = inputs;
  cfg.granularity = GateGranularity::elementwise;
  if (variant == GateVariant::gating_scalar) {
    cfg.inputs = GateInputs{true, false, false};
    cfg.granularity = GateGranularity::scalar;
  }
  return cfg;
}

void validate(const GateConfig& cfg) {
  if (!cfg.inputs.prev_state) {
    throw ConfigError("gate: the previous decoder state is a mandatory gate input");
  }
  if (cfg.variant == GateVariant::gating_scalar) {
    if (cfg.granularity != GateGranularity::scalar ||
        !(cfg.inputs == GateInputs{true, false, false})) {
      throw ConfigError("gate: gating_scalar requires scalar granularity and inputs {t}");
    }
  } else if (cfg.variant != GateVariant::none &&
             cfg.granularity != GateGranularity::elementwise) {
    throw ConfigError("gate: context gates are elementwise");
  }
}

void validate(const ScaleConfig& scale) {
  auto ok = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!ok(scale.source) || !ok(scale.target)) {
    throw ConfigError("scale: ratios must lie in [0, 1]");
  }
}

std::string_view to_string(CellKind kind) {
  return kind == CellKind::vanilla ? "vanilla" : "gru";
}

std::string_view to_string(GateVariant variant) {
  switch (variant) {
    case GateVariant::none:
      return "none";
    case GateVariant::source:
      return "source";
    case GateVariant::target:
      return "target";
    case GateVariant::both:
      return "both";
    case GateVariant::gating_scalar:
      return "gating_scalar";
  }
  return "?";
}

CellKind parse_cell_kind(std::string_view name) {
  if (name == "vanilla") return CellKind::vanilla;
  if (name == "gru") return CellKind::gru;
  throw ConfigError("unknown cell kind '" + std::string(name) + "'");
}

GateVariant parse_gate_variant(std::string_view name) {
  for (auto v : {GateVariant::none, GateVariant::source, GateVariant::target,
                 GateVariant::both, GateVariant::gating_scalar}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown gate variant '" + std::string(name) + "'");
}

GateInputs parse_gate_inputs(std::string_view spec) {
  GateInputs in{false, false, false};
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t end = spec.find(',', pos);
    if (end == std::string_view::npos) end = spec.size();
    std::string_view item = spec.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "t") {
      in.prev_state = true;
    } else if (item == "s") {
      in.source = true;
    } else if (item == "y") {
      in.prev_word = true;
    } else if (!item.empty()) {
      throw ConfigError("unknown gate input '" + std::string(item) + "' (expected t, s, y)");
    }
    pos = end + 1;
  }
  return in;
}

std::string to_string(const GateInputs& inputs) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(inputs.prev_state, "t");
  add(inputs.source, "s");
  add(inputs.prev_word, "y");
  return out;
}

CellParams::CellParams(int m, int n, int n2, CellKind kind, const GateConfig& gate)
    : W(n, m), U(n, n), C(n, n2) {
  validate(gate);
  if (kind == CellKind::gru) {
    W_r = Parameter(n, m);
    U_r = Parameter(n, n);
    C_r = Parameter(n, n2);
    W_u = Parameter(n, m);
    U_u = Parameter(n, n);
    C_u = Parameter(n, n2);
  }
  if (gate.variant == GateVariant::gating_scalar) {
    u_z = Parameter(n, 1);
    b_z = Parameter(1, 1);
  } else if (gate.active()) {
    if (gate.inputs.prev_word) W_z = Parameter(n, m);
    if (gate.inputs.prev_state) U_z = Parameter(n, n);
    if (gate.inputs.source) C_z = Parameter(n, n2);
  }
}

void CellParams::append_to(ParameterList& out, const std::string& prefix) {
  auto add = [&](const char* name, Parameter& p) {
    if (!p.empty()) out.push_back({prefix + name, &p});
  };
  add("W", W);
  add("U", U);
  add("C", C);
  add("W_r", W_r);
  add("U_r", U_r);
  add("C_r", C_r);
  add("W_u", W_u);
  add("U_u", U_u);
  add("C_u", C_u);
  add("W_z", W_z);
  add("U_z", U_z);
  add("C_z", C_z);
  add("u_z", u_z);
  add("b_z", b_z);
}

namespace {

void check_dims(const Vector& e, const Vector& tp, const Vector& s, const CellParams& p) {
  if (e.size() != p.W.cols() || tp.size() != p.U.cols() || s.size() != p.C.cols()) {
    throw ShapeError("cell: inputs " + shape_string(e.size(), 1) + ", " +
                     shape_string(tp.size(), 1) + ", " + shape_string(s.size(), 1) +
                     " do not match W " + shape_string(p.W.rows(), p.W.cols()) + ", U " +
                     shape_string(p.U.rows(), p.U.cols()) + ", C " +
                     shape_string(p.C.rows(), p.C.cols()));
  }
}

Vector logistic(const Vector& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace

Vector compute_gate(const Vector& e, const Vector& tp, const Vector& s,
                    const GateConfig& cfg, const CellParams& p) {
  if (!cfg.active()) {
    throw ContractViolation("compute_gate: no gate variant is active");
  }
  check_dims(e, tp, s, p);
  if (cfg.variant == GateVariant::gating_scalar) {
    Vector z(1);
    z(0) = sigmoid(p.u_z.vec().dot(tp) + p.b_z.value(0, 0));
    return z;
  }
  Vector pre = Vector::Zero(tp.size());
  if (cfg.inputs.prev_word) pre.noalias() += p.W_z.value * e;
  if (cfg.inputs.prev_state) pre.noalias() += p.U_z.value * tp;
  if (cfg.inputs.source) pre.noalias() += p.C_z.value * s;
  return logistic(pre);
}

CellCache cell_step_with_gate(const Vector& e, const Vector& tp, const Vector& s,
                              CellKind kind, const GateConfig& gate,
                              const ScaleConfig& scale, const Vector& z,
                              const CellParams& p) {
  check_dims(e, tp, s, p);
  const auto n = tp.size();
  const double a = scale.source;
  const double b = scale.target;

  CellCache c;
  c.prev_word = e;
  c.t_prev = tp;
  c.source = s;
  if (gate.active()) {
    const auto expected = gate.variant == GateVariant::gating_scalar ? 1 : n;
    if (z.size() != expected) {
      throw ShapeError("cell: gate value " + shape_string(z.size(), 1) + " expected " +
                       shape_string(expected, 1));
    }
    c.z = z;
  }
  switch (gate.variant) {
    case GateVariant::none:
      c.coef_target = Vector::Constant(n, b);
      c.coef_source = Vector::Constant(n, a);
      break;
    case GateVariant::source:
      c.coef_target = Vector::Constant(n, b);
      c.coef_source = a * z;
      break;
    case GateVariant::target:
      c.coef_target = b * z;
      c.coef_source = Vector::Constant(n, a);
      break;
    case GateVariant::both:
      c.coef_target = b * (1.0 - z.array()).matrix();
      c.coef_source = a * z;
      break;
    case GateVariant::gating_scalar:
      c.coef_target = Vector::Constant(n, b);
      c.coef_source = Vector::Constant(n, a * z(0));
      break;
  }

  auto mix = [&](const Preactivation& pa) -> Vector {
    return c.coef_target.cwiseProduct(pa.target) + c.coef_source.cwiseProduct(pa.source);
  };

  if (kind == CellKind::vanilla) {
    c.candidate.target = p.W.value * e + p.U.value * tp;
    c.candidate.source = p.C.value * s;
    c.t = mix(c.candidate).array().tanh().matrix();
    return c;
  }

  c.reset.target = p.W_r.value * e + p.U_r.value * tp;
  c.reset.source = p.C_r.value * s;
  c.r = logistic(mix(c.reset));
  c.update.target = p.W_u.value * e + p.U_u.value * tp;
  c.update.source = p.C_u.value * s;
  c.u = logistic(mix(c.update));
  c.candidate.target = p.W.value * e + p.U.value * c.r.cwiseProduct(tp);
  c.candidate.source = p.C.value * s;
  c.c = mix(c.candidate).array().tanh().matrix();
  c.t = tp + c.u.cwiseProduct(c.c - tp);
  return c;
}

CellCache cell_step(const Vector& e, const Vector& tp, const Vector& s, CellKind kind,
                    const GateConfig& gate, const ScaleConfig& scale, const CellParams& p) {
  if (!gate.active()) {
    return cell_step_with_gate(e, tp, s, kind, gate, scale, Vector(), p);
  }
  return cell_step_with_gate(e, tp, s, kind, gate, scale, compute_gate(e, tp, s, gate, p), p);
}

CellInputGrads cell_backward(const CellCache& c, const Vector& d_t, CellKind kind,
                             const GateConfig& gate, const ScaleConfig& scale,
                             CellParams& p) {
  const auto n = c.t_prev.size();
  CellInputGrads g;
  g.prev_word = Vector::Zero(c.prev_word.size());
  g.t_prev = Vector::Zero(n);
  g.source = Vector::Zero(c.source.size());
  Vector d_coef_target = Vector::Zero(n);
  Vector d_coef_source = Vector::Zero(n);

  // Backprop through coef_target * T + coef_source * S given d(preactivation).
  // The target part's recurrent input is `t_in`.
  auto branch = [&](const Vector& d_pre, const Preactivation& pa, Parameter& Wp,
                    Parameter& Up, Parameter& Cp, const Vector& t_in) -> Vector {
    d_coef_target += d_pre.cwiseProduct(pa.target);
    d_coef_source += d_pre.cwiseProduct(pa.source);
    const Vector d_target = d_pre.cwiseProduct(c.coef_target);
    const Vector d_source = d_pre.cwiseProduct(c.coef_source);
    Wp.grad.noalias() += d_target * c.prev_word.transpose();
    g.prev_word.noalias() += Wp.value.transpose() * d_target;
    Up.grad.noalias() += d_target * t_in.transpose();
    Cp.grad.noalias() += d_source * c.source.transpose();
    g.source.noalias() += Cp.value.transpose() * d_source;
    return Up.value.transpose() * d_target;
  };

  if (kind == CellKind::vanilla) {
    const Vector d_pre = d_t.cwiseProduct((1.0 - c.t.array().square()).matrix());
    g.t_prev += branch(d_pre, c.candidate, p.W, p.U, p.C, c.t_prev);
  } else {
    const Vector du = d_t.cwiseProduct(c.c - c.t_prev);
    const Vector dc = d_t.cwiseProduct(c.u);
    g.t_prev += d_t.cwiseProduct((1.0 - c.u.array()).matrix());

    const Vector d_pre_c = dc.cwiseProduct((1.0 - c.c.array().square()).matrix());
    const Vector gated = c.r.cwiseProduct(c.t_prev);
    const Vector d_gated = branch(d_pre_c, c.candidate, p.W, p.U, p.C, gated);
    const Vector dr = d_gated.cwiseProduct(c.t_prev);
    g.t_prev += d_gated.cwiseProduct(c.r);

    const Vector d_pre_u = du.cwiseProduct(c.u.cwiseProduct((1.0 - c.u.array()).matrix()));
    g.t_prev += branch(d_pre_u, c.update, p.W_u, p.U_u, p.C_u, c.t_prev);

    const Vector d_pre_r = dr.cwiseProduct(c.r.cwiseProduct((1.0 - c.r.array()).matrix()));
    g.t_prev += branch(d_pre_r, c.reset, p.W_r, p.U_r, p.C_r, c.t_prev);
  }

  if (!gate.active()) {
    return g;
  }

  const double a = scale.source;
  const double b = scale.target;
  Vector dz;
  switch (gate.variant) {
    case GateVariant::source:
      dz = a * d_coef_source;
      break;
    case GateVariant::target:
      dz = b * d_coef_target;
      break;
    case GateVariant::both:
      dz = a * d_coef_source - b * d_coef_target;
      break;
    case GateVariant::gating_scalar:
      dz = Vector::Constant(1, a * d_coef_source.sum());
      break;
    case GateVariant::none:
      break;
  }
  const Vector d_gate_pre = dz.cwiseProduct(c.z.cwiseProduct((1.0 - c.z.array()).matrix()));

  if (gate.variant == GateVariant::gating_scalar) {
    const double d = d_gate_pre(0);
    p.u_z.grad.col(0) += d * c.t_prev;
    p.b_z.grad(0, 0) += d;
    g.t_prev += d * p.u_z.vec();
    return g;
  }
  if (gate.inputs.prev_word) {
    p.W_z.grad.noalias() += d_gate_pre * c.prev_word.transpose();
    g.prev_word.noalias() += p.W_z.value.transpose() * d_gate_pre;
  }
  if (gate.inputs.prev_state) {
    p.U_z.grad.noalias() += d_gate_pre * c.t_prev.transpose();
    g.t_prev.noalias() += p.U_z.value.transpose() * d_gate_pre;
  }
  if (gate.inputs.source) {
    p.C_z.grad.noalias() += d_gate_pre * c.source.transpose();
    g.source.noalias() += p.C_z.value.transpose() * d_gate_pre;
  }
  return g;
}

ParameterCount count_parameters(std::int64_t m, std::int64_t n, std::int64_t n2,
                                CellKind kind, const GateConfig& gate) {
  validate(gate);
  ParameterCount count;
  const std::int64_t triple = n * m + n * n + n * n2;
  count.cell = kind == CellKind::gru ? 3 * triple : triple;
  count.gru_internal_gates = kind == CellKind::gru ? 2 * triple : 0;
  if (gate.variant == GateVariant::gating_scalar) {
    count.context_gate = n + 1;
  } else if (gate.active()) {
    count.context_gate = (gate.inputs.prev_word ? n * m : 0) +
                         (gate.inputs.prev_state ? n * n : 0) +
                         (gate.inputs.source ? n * n2 : 0);
  }
  return count;
}

}  // namespace cgnmt
