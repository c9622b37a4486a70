#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cgnmt/errors.hpp"

namespace cgnmt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A trainable tensor and its gradient accumulator. Vectors are stored as
// d x 1 matrices so that every parameter shares one representation.
struct Parameter {
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(Eigen::Index rows, Eigen::Index cols)
      : value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  Eigen::Index size() const { return value.size(); }
  bool empty() const { return value.size() == 0; }

  void zero_grad() { grad.setZero(); }

  // Column view of a d x 1 parameter.
  auto vec() { return value.col(0); }
  auto vec() const { return value.col(0); }
};

std::string shape_string(Eigen::Index rows, Eigen::Index cols);

// W x with shape checking.
Vector affine(const Matrix& w, const Vector& x);

Vector sigmoid_vec(const Vector& x);
Vector tanh_vec(const Vector& x);

// Max-subtracted softmax; x must be non-empty.
Vector softmax(const Vector& x);

// Logistic function that never produces NaN for finite or infinite input.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Compares the gradients already accumulated in `params` against central
// differences of `loss`, perturbing every entry by +/- eps in place. Returns
// max |a - n| / max(|a|, |n|, 1e-8) over all entries.
double grad_check(const std::function<double()>& loss,
                  std::span<Parameter* const> params, double eps);

// Xorshift64* (Vigna 2016): state advanced by shifts (12, 25, 27) and the
// output multiplied by 0x2545F4914F6CDD1D. Seeds are expanded with one
// splitmix64 round so that seed 0 is valid.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform in [0, bound); rejection-sampled, bound > 0.
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

void fill_uniform(Matrix& m, Rng& rng, double scale);

}  // namespace cgnmt

namespace cgnmt {

struct NamedParameter {
  std::string name;
  Parameter* param = nullptr;
};

using ParameterList = std::vector<NamedParameter>;

std::vector<Parameter*> raw_parameters(const ParameterList& list);

}  // namespace cgnmt
