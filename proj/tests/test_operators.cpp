#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "tfpdhg/operators.hpp"
#include "tfpdhg/problems.hpp"

using namespace tfpdhg;

namespace {

ConstraintMap maxcut_map(std::size_t n) {
  std::vector<SymMat> mats;
  for (std::size_t i = 0; i < n; ++i) {
    SymMat e(n);
    e(i, i) = 1.0;
    mats.push_back(e);
  }
  return ConstraintMap(std::move(mats));
}

}  // namespace

TEST(ConstraintMap, RejectsEmptyAndMixedDimensions) {
  EXPECT_THROW(ConstraintMap(std::vector<SymMat>{}), DimensionError);
  EXPECT_THROW(ConstraintMap(std::vector<SymMat>{SymMat(2), SymMat(3)}), DimensionError);
}

TEST(ApplyA, IdentityPairing) {
  const ConstraintMap map(std::vector<SymMat>{SymMat::identity(2)});
  EXPECT_EQ(apply_A(map, SymMat::identity(2)), Vector{2.0});
}

TEST(ApplyA, ZeroInput) {
  Rng rng(1);
  const auto map = oracle::random_map(rng, 4, 3);
  EXPECT_EQ(apply_A(map, SymMat(4)), Vector(3, 0.0));
}

TEST(ApplyA, MaxcutMapExtractsDiagonal) {
  Rng rng(2);
  const SymMat x = oracle::random_sym(rng, 5);
  EXPECT_EQ(apply_A(maxcut_map(5), x), x.diag());
}

TEST(ApplyA, DimensionMismatchThrows) {
  EXPECT_THROW(apply_A(maxcut_map(3), SymMat(4)), DimensionError);
  EXPECT_THROW(apply_At(maxcut_map(3), Vector(2)), DimensionError);
}

TEST(ApplyAt, UnitVectorSelectsMatrix) {
  Rng rng(3);
  const auto map = oracle::random_map(rng, 4, 3);
  EXPECT_EQ(apply_At(map, Vector{1, 0, 0}), map[0]);
  EXPECT_EQ(apply_At(map, Vector{0, 0, 0}), SymMat(4));
}

TEST(ApplyAt, AdjointIdentity) {
  Rng rng(4);
  const auto map = oracle::random_map(rng, 6, 5);
  for (int rep = 0; rep < 50; ++rep) {
    const SymMat x = oracle::random_sym(rng, 6);
    Vector y(5);
    for (double& v : y) v = rng.normal();
    // <A(X), y> via the dense matrix representation, <X, A^T y> by brute force.
    Eigen::VectorXd vx(36);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) vx(i * 6 + j) = x(i, j);
    const Eigen::VectorXd ax = oracle::a_matrix(map) * vx;
    double lhs = 0.0;
    for (int i = 0; i < 5; ++i) lhs += ax(i) * y[i];
    const double rhs = oracle::brute_inner(x, apply_At(map, y));
    EXPECT_NEAR(lhs, rhs, 1e-11 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Gram, SingleIdentityConstraint) {
  const ConstraintMap map(std::vector<SymMat>{SymMat::identity(4)});
  EXPECT_DOUBLE_EQ(gram(map)(0, 0), 4.0);
}

TEST(Gram, OrthonormalFamilyGivesIdentity) {
  const auto g = gram(maxcut_map(4));
  EXPECT_EQ(g, SymMat::identity(4));
}

TEST(Gram, MatchesPairwiseLoop) {
  Rng rng(5);
  const auto map = oracle::random_map(rng, 3, 4);
  const auto g = gram(map);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(g(i, j), oracle::brute_inner(map[i], map[j]), 1e-12);
}

TEST(LambdaMax, SingleIdentityConstraint) {
  const ConstraintMap map(std::vector<SymMat>{SymMat::identity(5)});
  EXPECT_NEAR(lambda_max_AAt(map), 5.0, 1e-12);
}

TEST(LambdaMax, MaxcutMapIsOne) { EXPECT_NEAR(lambda_max_AAt(maxcut_map(7)), 1.0, 1e-12); }

TEST(LambdaMax, MatchesPowerIterationOnLiftedOperator) {
  Rng rng(6);
  const auto map = oracle::random_map(rng, 4, 5);
  // Power iteration on X -> A^T(A(X)) over symmetric matrices.
  SymMat x = oracle::random_sym(rng, 4);
  double lambda = 0.0;
  for (int it = 0; it < 5000; ++it) {
    SymMat next = apply_At(map, apply_A(map, x));
    lambda = frobenius_norm(next) / frobenius_norm(x);
    x = (1.0 / frobenius_norm(next)) * next;
  }
  EXPECT_NEAR(lambda_max_AAt(map), lambda, 1e-9 * lambda);
}

TEST(BuildT, UnitConstraintHalfProduct) {
  SymMat a(3);
  a(0, 0) = 1.0;
  const ConstraintMap map(std::vector<SymMat>{a});
  const auto t = build_T(map, 0.5);
  EXPECT_NEAR(t.S(0, 0), 1.0, 1e-14);
  ASSERT_EQ(t.m(), 1u);
  EXPECT_EQ(t.width(), 9u);
  EXPECT_NEAR(norm2(t.T_rows[0]), 1.0, 1e-14);
}

TEST(BuildT, BoundaryProductRaises) {
  Rng rng(7);
  const auto map = oracle::random_map(rng, 3, 2);
  const double lmax = lambda_max_AAt(map);
  EXPECT_THROW(build_T(map, 1.0 / lmax), StepsizeError);
  EXPECT_THROW(build_T(map, 2.0 / lmax), StepsizeError);
  EXPECT_THROW(build_T(map, 0.0), StepsizeError);
}

TEST(BuildT, RandomMapSatisfiesLift) {
  Rng rng(8);
  const auto map = oracle::random_map(rng, 5, 6);
  const double R = 0.9 / lambda_max_AAt(map);
  const auto t = build_T(map, R);
  // Independent evaluation of T T^T from the stored rows.
  SymMat ttt(6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i; j < 6; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < t.width(); ++k) s += t.T_rows[i][k] * t.T_rows[j][k];
      ttt(i, j) = s;
    }
  SymMat s = (1.0 / R) * SymMat::identity(6);
  s -= gram(map);
  EXPECT_LT(frobenius_norm(ttt - s), 1e-10 * std::max(1.0, frobenius_norm(s)));
  // Columns beyond the first m are padding.
  for (const auto& row : t.T_rows)
    for (std::size_t k = 6; k < row.size(); ++k) EXPECT_EQ(row[k], 0.0);
  EXPECT_TRUE(certify_lift(map, t).pass);
}

TEST(BuildT, ApplyAndTransposeAreAdjoint) {
  Rng rng(9);
  const auto map = oracle::random_map(rng, 3, 4);
  const auto t = build_T(map, 0.5 / lambda_max_AAt(map));
  Vector v(9), w(4);
  for (double& x : v) x = rng.normal();
  for (double& x : w) x = rng.normal();
  EXPECT_NEAR(dot(t.apply(v), w), dot(v, t.apply_transpose(w)), 1e-12);
  EXPECT_THROW(t.apply(Vector(8)), DimensionError);
}

TEST(BuildT, TooManyConstraintsThrows) {
  std::vector<SymMat> mats(5, SymMat::identity(2));
  EXPECT_THROW(build_T(ConstraintMap(mats), 0.01), DimensionError);
}
