#include "cgnmt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cgnmt {

std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream out;
  out << '[' << rows << 'x' << cols << ']';
  return out.str();
}

Vector affine(const Matrix& w, const Vector& x) {
  if (w.cols() != x.size()) {
    throw ShapeError("affine: matrix " + shape_string(w.rows(), w.cols()) +
                     " cannot multiply vector " + shape_string(x.size(), 1));
  }
  return w * x;
}

Vector sigmoid_vec(const Vector& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Vector tanh_vec(const Vector& x) { return x.array().tanh().matrix(); }

Vector softmax(const Vector& x) {
  if (x.size() == 0) {
    throw ShapeError("softmax: empty input");
  }
  const double peak = x.maxCoeff();
  Vector out = (x.array() - peak).exp().matrix();
  out /= out.sum();
  return out;
}

double grad_check(const std::function<double()>& loss,
                  std::span<Parameter* const> params, double eps) {
  if (!(eps > 0.0)) {
    throw ContractViolation("grad_check: eps must be positive");
  }
  double worst = 0.0;
  for (Parameter* p : params) {
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      double& theta = p->value.data()[k];
      const double saved = theta;
      theta = saved + eps;
      const double plus = loss();
      theta = saved - eps;
      const double minus = loss();
      theta = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw OracleError("grad_check: non-finite objective at entry " +
                          std::to_string(k));
      }
      const double numeric = (plus - minus) / (2.0 * eps);
      const double analytic = p->grad.data()[k];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
  if (state_ == 0) {
    state_ = 0x9E3779B97F4A7C15ULL;
  }
}

std::uint64_t Rng::next_u64() {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1DULL;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) {
    throw ContractViolation("Rng::below: bound must be positive");
  }
  // Reject the tail so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = next_u64();
  while (x >= limit) {
    x = next_u64();
  }
  return x % bound;
}

void fill_uniform(Matrix& m, Rng& rng, double scale) {
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    m.data()[k] = rng.uniform(-scale, scale);
  }
}

}  // namespace cgnmt

namespace cgnmt {

std::vector<Parameter*> raw_parameters(const ParameterList& list) {
  std::vector<Parameter*> out;
  out.reserve(list.size());
  for (const auto& np : list) {
    out.push_back(np.param);
  }
  return out;
}

}  // namespace cgnmt
