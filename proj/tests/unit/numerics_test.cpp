#include <cgnmt/numerics.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "../common/support.hpp"

namespace cgnmt {
namespace {

TEST(Affine, IdentityReturnsInput) {
  Vector x(3);
  x << 1, 2, 3;
  EXPECT_EQ(affine(Matrix::Identity(3, 3), x), x);
}

TEST(Affine, ZeroMatrixAnnihilates) {
  Vector x(3);
  x << 4, -5, 6;
  const Vector y = affine(Matrix::Zero(2, 3), x);
  ASSERT_EQ(y.size(), 2);
  EXPECT_EQ(y(0), 0.0);
  EXPECT_EQ(y(1), 0.0);
}

TEST(Affine, HandMultiplication) {
  Matrix w(2, 2);
  w << 1, 2, 3, 4;
  Vector x(2);
  x << 1, 1;
  // rows summed by hand
  const Vector y = affine(w, x);
  EXPECT_EQ(y(0), 1.0 + 2.0);
  EXPECT_EQ(y(1), 3.0 + 4.0);
}

TEST(Affine, MismatchNamesBothShapes) {
  try {
    affine(Matrix::Zero(2, 3), Vector::Zero(4));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
    EXPECT_NE(what.find("4"), std::string::npos) << what;
  }
}

TEST(Affine, Linearity) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix w(5, 4);
    fill_uniform(w, rng, 2.0);
    const Vector x = test::random_vector(rng, 4);
    const Vector y = test::random_vector(rng, 4);
    const double a = rng.uniform(-3, 3);
    const double b = rng.uniform(-3, 3);
    const Vector lhs = affine(w, a * x + b * y);
    const Vector rhs = a * affine(w, x) + b * affine(w, y);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Sigmoid, ZeroIsHalf) {
  const Vector s = sigmoid_vec(Vector::Zero(2));
  EXPECT_EQ(s(0), 0.5);
  EXPECT_EQ(s(1), 0.5);
}

TEST(Sigmoid, LogThreeIsThreeQuarters) {
  Vector x(1);
  x << std::log(3.0);
  EXPECT_NEAR(sigmoid_vec(x)(0), 1.0 / (1.0 + 1.0 / 3.0), 1e-15);
}

TEST(Sigmoid, SymmetryAndRange) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = test::random_vector(rng, 8, 30.0);
    const Vector p = sigmoid_vec(x);
    const Vector q = sigmoid_vec(-x);
    for (int k = 0; k < x.size(); ++k) {
      EXPECT_NEAR(p(k) + q(k), 1.0, 1e-12);
      EXPECT_GT(p(k), 0.0);
      EXPECT_LT(p(k), 1.0);
    }
  }
}

TEST(Sigmoid, SaturatesWithoutNan) {
  Vector x(4);
  x << 800, -800, std::numeric_limits<double>::infinity(),
      -std::numeric_limits<double>::infinity();
  const Vector s = sigmoid_vec(x);
  for (int k = 0; k < 4; ++k) EXPECT_FALSE(std::isnan(s(k)));
  EXPECT_EQ(s(0), 1.0);
  EXPECT_EQ(s(1), 0.0);
}

TEST(Tanh, OddAndSaturating) {
  EXPECT_EQ(tanh_vec(Vector::Zero(1))(0), 0.0);
  Rng rng(5);
  const Vector x = test::random_vector(rng, 10, 4.0);
  EXPECT_EQ(tanh_vec(-x), -tanh_vec(x));
  Vector big(1);
  big << 100.0;
  EXPECT_NEAR(tanh_vec(big)(0), 1.0, 1e-12);
}

TEST(Softmax, Uniform) {
  const Vector p = softmax(Vector::Zero(3));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p(k), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, RatioOfExponentials) {
  const double c = 0.37;
  Vector x(2);
  x << c, c + std::log(2.0);
  const Vector p = softmax(x);
  // e^0 : e^{ln 2}
  EXPECT_NEAR(p(0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(p(1), 2.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeInputsDoNotOverflow) {
  Vector x(2);
  x << 1000, 1000;
  const Vector p = softmax(x);
  EXPECT_EQ(p(0), 0.5);
  EXPECT_EQ(p(1), 0.5);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double magnitude = std::pow(10.0, rng.uniform(-2.0, 6.0));
    const Vector x = test::random_vector(rng, 1 + static_cast<int>(rng.below(20)), magnitude);
    const Vector p = softmax(x);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    const Vector shifted = softmax((x.array() + 12.5).matrix());
    EXPECT_LE((p - shifted).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Softmax, EmptyInputThrows) { EXPECT_THROW(softmax(Vector()), ShapeError); }

TEST(GradCheck, Quadratic) {
  Parameter theta(1, 1);
  theta.value(0, 0) = 3.0;
  theta.grad(0, 0) = 6.0;
  Parameter* params[] = {&theta};
  const double err = grad_check([&] { return theta.value(0, 0) * theta.value(0, 0); },
                                params, 1e-5);
  EXPECT_LE(err, 1e-8);
  EXPECT_EQ(theta.value(0, 0), 3.0);
}

TEST(GradCheck, ConstantFunction) {
  Parameter theta(2, 2);
  Parameter* params[] = {&theta};
  EXPECT_EQ(grad_check([] { return 4.25; }, params, 1e-5), 0.0);
}

TEST(GradCheck, DetectsWrongGradient) {
  Parameter theta(1, 1);
  theta.value(0, 0) = 2.0;
  theta.grad(0, 0) = 5.0;  // true value 4
  Parameter* params[] = {&theta};
  const double err = grad_check([&] { return theta.value(0, 0) * theta.value(0, 0); },
                                params, 1e-5);
  EXPECT_NEAR(err, 1.0 / 5.0, 1e-6);
}

TEST(GradCheck, NonFiniteObjectiveThrows) {
  Parameter theta(1, 1);
  Parameter* params[] = {&theta};
  EXPECT_THROW(grad_check([] { return std::numeric_limits<double>::quiet_NaN(); }, params, 1e-5),
               OracleError);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiffer) {
  Rng a(1), b(2);
  EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(Rng, ZeroSeedIsUsable) {
  Rng r(0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10; ++i) seen.insert(r.next_u64());
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Rng, XorshiftStarReference) {
  // Independent re-implementation of splitmix64 seeding + xorshift64*.
  std::uint64_t z = 12345 + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  std::uint64_t s = z ^ (z >> 31);
  Rng rng(12345);
  for (int i = 0; i < 16; ++i) {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    EXPECT_EQ(rng.next_u64(), s * 0x2545F4914F6CDD1DULL);
  }
}

TEST(Rng, UniformAndBelowRanges) {
  Rng r(9);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = r.below(7);
    ASSERT_LT(k, 7u);
    ++hist[k];
  }
  for (int h : hist) EXPECT_GT(h, 800);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(4);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  r.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  bool moved = false;
  for (int i = 0; i < 50; ++i) moved |= v[i] != i;
  EXPECT_TRUE(moved);
}

TEST(Parameter, ValueAndGradShapesMatch) {
  Parameter p(3, 5);
  EXPECT_EQ(p.value.rows(), p.grad.rows());
  EXPECT_EQ(p.value.cols(), p.grad.cols());
  EXPECT_EQ(p.grad.cwiseAbs().maxCoeff(), 0.0);
  p.grad.setConstant(2.0);
  p.zero_grad();
  EXPECT_EQ(p.grad.cwiseAbs().maxCoeff(), 0.0);
}

}  // namespace
}  // namespace cgnmt
