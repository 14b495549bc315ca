#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "tfpdhg/policies.hpp"
#include "tfpdhg/solver.hpp"

using namespace tfpdhg;

namespace {

// min X22  s.t.  X11 = 1, X PSD. KKT pair: X* = diag(1, 0), y* = 0, with
// A^T y* + C = diag(0, 1) PSD and complementary to X*.
SdpProblem kkt_instance() {
  SymMat a(2);
  a(0, 0) = 1.0;
  SymMat c(2);
  c(1, 1) = 1.0;
  return SdpProblem(c, ConstraintMap({a}), Vector{1.0});
}

SdpProblem zero_map_instance(std::size_t n, std::size_t m) {
  return SdpProblem(SymMat(n), ConstraintMap(std::vector<SymMat>(m, SymMat(n))), Vector(m, 0.0));
}

}  // namespace

TEST(XUpdate, ZeroCostZeroDualProjectsIterate) {
  Rng rng(1);
  const SymMat x = oracle::random_sym(rng, 4);
  const SdpProblem p = zero_map_instance(4, 2);
  EXPECT_LT(oracle::max_abs_diff(x_update(p, x, Vector(2, 0.0), 0.7), oracle::clip_psd(x)), 1e-10);
}

TEST(XUpdate, PsdFixedPoint) {
  const SdpProblem p = zero_map_instance(3, 1);
  const SymMat x = SymMat::identity(3);
  EXPECT_LT(oracle::max_abs_diff(x_update(p, x, Vector{0.0}, 1.0), x), 1e-12);
}

TEST(XUpdate, MatchesClippingOracle) {
  const SdpProblem p = gen_random(2, 6, 4);
  Rng rng(2);
  const SymMat x = oracle::random_sym(rng, 6);
  Vector y(4);
  for (double& v : y) v = rng.normal();
  const double alpha = 0.3;
  SymMat arg = x;
  arg -= alpha * (apply_At(p.map, y) + p.C);
  EXPECT_LT(oracle::max_abs_diff(x_update(p, x, y, alpha), oracle::clip_psd(arg)), 1e-9);
  EXPECT_THROW(x_update(p, x, y, 0.0), StepsizeError);
}

TEST(YUpdate, FeasibleExtrapolateLeavesDualUnchanged) {
  const SdpProblem p = kkt_instance();
  const SymMat x = SymMat::diagonal(std::vector<double>{1, 0.5});
  const Vector y{0.25};
  EXPECT_EQ(y_update(p, y, x, x, 2.0, 1.0), y);
}

TEST(YUpdate, NoExtrapolationAddsScaledResidual) {
  const SdpProblem p = gen_random(3, 5, 3);
  Rng rng(3);
  const SymMat x_new = oracle::random_sym(rng, 5);
  const SymMat x_cur = oracle::random_sym(rng, 5);
  const Vector y{0.1, -0.2, 0.3};
  const Vector v = apply_A(p.map, x_new) - p.b;
  const Vector out = y_update(p, y, x_cur, x_new, 0.5, 0.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], y[i] + 0.5 * v[i], 1e-12);
}

TEST(YUpdate, IncrementLinearInBeta) {
  const SdpProblem p = gen_random(4, 5, 3);
  Rng rng(4);
  const SymMat x_new = oracle::random_sym(rng, 5);
  const SymMat x_cur = oracle::random_sym(rng, 5);
  const Vector y{1, 2, 3};
  const Vector d1 = y_update(p, y, x_cur, x_new, 0.3, 0.7) - y;
  const Vector d2 = y_update(p, y, x_cur, x_new, 0.6, 0.7) - y;
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(d2[i], 2.0 * d1[i], 1e-12 * std::max(1.0, std::abs(d2[i])));
}

TEST(YUpdate, ExtrapolationSignIsPlus) {
  // A(X_new + theta (X_new - X_cur)) with the max-cut map is a diagonal read-out.
  const SdpProblem p = maxcut_from_edges(3, cycle_graph(3));
  const SymMat x_cur = SymMat::identity(3);
  const SymMat x_new = 2.0 * SymMat::identity(3);
  const Vector out = y_update(p, Vector(3, 0.0), x_cur, x_new, 1.0, 0.5);
  for (double v : out) EXPECT_DOUBLE_EQ(v, 2.0 + 0.5 * 1.0 - 1.0);
}

TEST(Residuals, StationaryIteratesAreZero) {
  const SdpProblem p = gen_random(5, 4, 3);
  Rng rng(5);
  const SymMat x = oracle::random_sym(rng, 4);
  const Vector y{1, -1, 2};
  const auto r = residuals(p, x, x, y, y, 0.4, 0.9);
  EXPECT_EQ(r.p_norm, 0.0);
  EXPECT_EQ(r.d_norm, 0.0);
  EXPECT_EQ(r.combined, 0.0);
}

TEST(Residuals, ZeroMapDecouples) {
  const SdpProblem p = zero_map_instance(3, 2);
  Rng rng(6);
  const SymMat xp = oracle::random_sym(rng, 3);
  const SymMat xn = oracle::random_sym(rng, 3);
  const Vector yp{1, 2}, yn{0.5, -1};
  const auto r = residuals(p, xp, xn, yp, yn, 0.25, 4.0);
  EXPECT_NEAR(r.p_norm, frobenius_norm(xp - xn) / 0.25, 1e-12);
  EXPECT_NEAR(r.d_norm, norm2(yp - yn) / 4.0, 1e-12);
}

TEST(Residuals, MatchesDenseRecomputation) {
  const SdpProblem p = gen_random(7, 5, 4);
  Rng rng(7);
  const SymMat xp = oracle::random_sym(rng, 5), xn = oracle::random_sym(rng, 5);
  Vector yp(4), yn(4);
  for (double& v : yp) v = rng.normal();
  for (double& v : yn) v = rng.normal();
  const double alpha = 0.2, beta = 0.35;
  const auto r = residuals(p, xp, xn, yp, yn, alpha, beta);

  Eigen::MatrixXd dpx = (oracle::dense(xp) - oracle::dense(xn)) / alpha;
  for (int k = 0; k < 4; ++k) dpx -= (yp[k] - yn[k]) * oracle::dense(p.map[k]);
  const Eigen::MatrixXd dx = oracle::dense(xp) - oracle::dense(xn);
  Eigen::VectorXd d(4);
  for (int k = 0; k < 4; ++k) d(k) = (yp[k] - yn[k]) / beta - (oracle::dense(p.map[k]).cwiseProduct(dx)).sum();
  EXPECT_NEAR(r.p_norm, dpx.norm(), 1e-10 * dpx.norm());
  EXPECT_NEAR(r.d_norm, d.norm(), 1e-10 * d.norm());
  EXPECT_NEAR(r.combined, r.p_norm * r.p_norm + r.d_norm * r.d_norm, 1e-12 * r.combined);
}

TEST(StopCheck, StrictBoundary) {
  ResidualReport r;
  r.combined = 0.0;
  EXPECT_TRUE(stop_check(r, 1e-6));
  r.combined = 1e-6;
  EXPECT_FALSE(stop_check(r, 1e-6));
  r.combined = 9.9e-7;
  EXPECT_TRUE(stop_check(r, 1e-6));
}

TEST(Solve, KktStartConvergesImmediately) {
  const SdpProblem p = kkt_instance();
  SolveConfig cfg;
  cfg.X0 = SymMat::diagonal(std::vector<double>{1, 0});
  cfg.y0 = Vector{0.0};
  FixedPolicy pol(p);
  const RunTrace t = solve(p, pol, cfg);
  ASSERT_EQ(t.iterations(), 1u);
  EXPECT_TRUE(t.converged());
  EXPECT_EQ(t.rows[0].combined, 0.0);
}

TEST(Solve, CycleFourReachesAnalyticOptimum) {
  const SdpProblem p = maxcut_from_edges(4, cycle_graph(4));
  FixedPolicy pol(p);
  const RunTrace t = solve(p, pol, {});
  ASSERT_TRUE(t.converged());
  EXPECT_LE(std::abs(frobenius_inner(p.C, t.X)), 1e-4);
}

TEST(Solve, ZeroBudget) {
  const SdpProblem p = gen_random(1, 4, 3);
  FixedPolicy pol(p);
  SolveConfig cfg;
  cfg.max_iters = 0;
  const RunTrace t = solve(p, pol, cfg);
  EXPECT_EQ(t.status, RunStatus::iteration_cap);
  EXPECT_TRUE(t.rows.empty());
}

TEST(Solve, TraceRowsAreConsistent) {
  const SdpProblem p = gen_random(2, 6, 5);
  BpdrPolicy pol(p);
  SolveConfig cfg;
  cfg.max_iters = 200;
  cfg.tol = 0.0;
  std::vector<SymMat> xs;
  cfg.on_iterate = [&](std::size_t, const SymMat& x, const Vector&) { xs.push_back(x); };
  const RunTrace t = solve(p, pol, cfg);
  ASSERT_EQ(t.iterations(), 200u);
  ASSERT_EQ(xs.size(), 201u);
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& r = t.rows[k];
    EXPECT_EQ(r.iter, k + 1);
    EXPECT_NEAR(r.combined, r.p_norm * r.p_norm + r.d_norm * r.d_norm, 1e-12 * std::max(r.combined, 1e-300));
    EXPECT_NEAR(r.objective, frobenius_inner(p.C, xs[k + 1]), 1e-10 * std::max(1.0, std::abs(r.objective)));
    if (k > 0) {
      EXPECT_GE(r.wall_ms, t.rows[k - 1].wall_ms);
    }
  }
}

TEST(Solve, DimensionMismatchInStart) {
  const SdpProblem p = gen_random(1, 4, 3);
  FixedPolicy pol(p);
  SolveConfig cfg;
  cfg.X0 = SymMat(5);
  EXPECT_THROW(solve(p, pol, cfg), DimensionError);
  cfg.X0.reset();
  cfg.y0 = Vector(2);
  EXPECT_THROW(solve(p, pol, cfg), DimensionError);
}

TEST(Solve, DivergenceSurfacesWithTrace) {
  // alpha * beta far beyond 1/lambda_max makes the iteration blow up.
  const SdpProblem p = gen_random(3, 5, 4);
  FixedParams prm;
  prm.alpha0 = 1e3;
  prm.beta0 = 1e3;
  EXPECT_THROW(FixedPolicy(p, prm), StepsizeError);

  SchedulePolicy wild([](std::size_t) { return 1.0; }, 1e4);
  SolveConfig cfg;
  cfg.max_iters = 100000;
  try {
    solve(p, wild, cfg);
    FAIL() << "expected divergence";
  } catch (const SolveError& e) {
    EXPECT_EQ(e.trace().status, RunStatus::error);
    EXPECT_FALSE(e.trace().rows.empty());
  }
}

TEST(Solve, TruncatedProjectionRuns) {
  const SdpProblem p = gen_maxcut(4, 10, 12);
  TfPolicy pol(p);
  SolveConfig cfg;
  cfg.max_iters = 300;
  cfg.proj = {ProjectionMode::truncated, 2};
  const RunTrace t = solve(p, pol, cfg);
  EXPECT_EQ(t.iterations() <= 300, true);
  cfg.proj.r = 11;
  EXPECT_THROW(solve(p, pol, cfg), DimensionError);
}

TEST(Solve, FeasibilityAtConvergence) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SdpProblem p = gen_random(seed, 8, 6);
    TfPolicy pol(p);
    const RunTrace t = solve(p, pol, {});
    ASSERT_TRUE(t.converged());
    EXPECT_LE(norm2(apply_A(p.map, t.X) - p.b), 10.0 * std::sqrt(kDefaultTol) * std::max(1.0, norm2(p.b)));
  }
}
