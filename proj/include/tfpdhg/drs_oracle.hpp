#pragma once

// Non-stationary Douglas-Rachford splitting on the lifted inclusion
//
//   0 in (C + N_PSD(X), N_{=0}(X_hat))  +  N_{A(X) + T(X_hat) = b}(X, X_hat)
//
// where T is the auxiliary operator with T T^T = (1/R) I - A A^T. PDHG with
// theta_k = alpha_k/alpha_{k-1} and alpha_k beta_k = R is exactly this
// iteration under Z^{k+1} = X^k - alpha_k A^T(y^{k+1}),
// Z_hat^{k+1} = -alpha_k T^T(y^{k+1}). check_equivalence() runs both and
// measures how far apart they drift.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tfpdhg/error.hpp"
#include "tfpdhg/linalg.hpp"
#include "tfpdhg/operators.hpp"
#include "tfpdhg/policies.hpp"
#include "tfpdhg/problems.hpp"
#include "tfpdhg/projections.hpp"
#include "tfpdhg/solver.hpp"

namespace tfpdhg {

struct LiftedState {
  SymMat Z;
  Vector Z_hat;  // vectorized, length n^2
  std::size_t k = 0;
};

struct LiftedPoint {
  SymMat X;
  Vector X_hat;
};

/// Resolvent of f(X, X_hat) = <C, X> + I_PSD(X) + I_{=0}(X_hat):
/// (Proj(Z - alpha C), 0).
inline LiftedPoint resolvent_f(const SymMat& z, std::span<const double> z_hat, double alpha,
                               const SdpProblem& problem) {
  if (!(alpha > 0.0)) throw StepsizeError("resolvent_f: alpha must be positive");
  SymMat arg = z;
  arg.axpy(-alpha, problem.C);
  return {proj_psd(arg), Vector(z_hat.size(), 0.0)};
}

/// Resolvent of g = I_{A(X) + T(X_hat) = b}: the Euclidean projection onto the
/// affine set. Since A A^T + T T^T = (1/R) I the multiplier is R times the
/// constraint residual.
inline LiftedPoint resolvent_g(const SymMat& v, std::span<const double> v_hat, double alpha,
                               const SdpProblem& problem, const LiftedOperator& lifted) {
  if (!(alpha > 0.0)) throw StepsizeError("resolvent_g: alpha must be positive");
  if (v_hat.size() != lifted.width()) throw DimensionError("resolvent_g: lifted vector length mismatch");
  Vector r = apply_A(problem.map, v);
  const Vector tv = lifted.apply(v_hat);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = lifted.R * (r[i] + tv[i] - problem.b[i]);

  LiftedPoint out{v, Vector(v_hat.begin(), v_hat.end())};
  out.X.axpy(-1.0, apply_At(problem.map, r));
  const Vector ttw = lifted.apply_transpose(r);
  for (std::size_t i = 0; i < out.X_hat.size(); ++i) out.X_hat[i] -= ttw[i];
  return out;
}

struct DrsStepResult {
  LiftedState next;
  SymMat X;  // primal point J_{alpha_prev f}(Z^k)
};

/// z+ = J_{a_k g}(J_{a_{k-1} f}(z) + t (J_{a_{k-1} f}(z) - z)) + t (z - J_{a_{k-1} f}(z)),
/// t = a_k / a_{k-1}.
inline DrsStepResult drs_step(const SdpProblem& problem, const LiftedOperator& lifted, const LiftedState& state,
                              double alpha_k, double alpha_prev) {
  if (!(alpha_k > 0.0) || !(alpha_prev > 0.0)) throw StepsizeError("drs_step: stepsizes must be positive");
  const double t = alpha_k / alpha_prev;
  LiftedPoint xf = resolvent_f(state.Z, state.Z_hat, alpha_prev, problem);

  SymMat v = xf.X;
  v.axpy(t, xf.X);
  v.axpy(-t, state.Z);
  Vector v_hat(state.Z_hat.size());
  for (std::size_t i = 0; i < v_hat.size(); ++i) v_hat[i] = xf.X_hat[i] + t * (xf.X_hat[i] - state.Z_hat[i]);

  LiftedPoint xg = resolvent_g(v, v_hat, alpha_k, problem, lifted);

  DrsStepResult out;
  out.next.Z = std::move(xg.X);
  out.next.Z.axpy(t, state.Z);
  out.next.Z.axpy(-t, xf.X);
  out.next.Z_hat = std::move(xg.X_hat);
  for (std::size_t i = 0; i < out.next.Z_hat.size(); ++i)
    out.next.Z_hat[i] += t * (state.Z_hat[i] - xf.X_hat[i]);
  out.next.k = state.k + 1;
  out.X = std::move(xf.X);
  return out;
}

struct EquivalenceReport {
  double max_x_defect = 0.0;
  double max_z_defect = 0.0;
  std::size_t iters = 0;
  bool pass = false;
  double R = 0.0;
  /// Sign of the extrapolation term the PDHG engine uses.
  std::string extrapolation = "+theta(X_k - X_{k-1})";
};

struct EquivalenceOptions {
  double R_fraction = kDefaultProductFraction;  // R = R_fraction / lambda_max
  double beta_scale = 1.0;                      // != 1 breaks alpha_k beta_k = R in the engine
  std::optional<SymMat> X0;
  std::optional<Vector> y0;
};

/// Runs the PDHG engine under `schedule` side by side with the lifted DRS
/// recursion and reports the worst iterate and correspondence defects.
inline EquivalenceReport check_equivalence(const SdpProblem& problem, const std::function<double(std::size_t)>& schedule,
                                           std::size_t iters, double tol, const EquivalenceOptions& opt = {}) {
  for (std::size_t k = 0; k <= iters; ++k)
    if (!(schedule(k) > 0.0) || !std::isfinite(schedule(k)))
      throw StepsizeError("check_equivalence: schedule must be positive and finite");
  if (!(opt.R_fraction > 0.0 && opt.R_fraction < 1.0))
    throw StepsizeError("check_equivalence: R must lie strictly below 1/lambda_max");

  const double lmax = lambda_max_AAt(problem.map);
  const double R = opt.R_fraction / detail::usable_lambda(lmax);
  const LiftedOperator lifted = build_T(problem.map, R);

  std::vector<SymMat> xs;
  std::vector<Vector> ys;
  xs.reserve(iters + 1);
  ys.reserve(iters + 1);
  SolveConfig cfg;
  cfg.max_iters = iters;
  cfg.tol = 0.0;  // never stop early
  cfg.X0 = opt.X0;
  cfg.y0 = opt.y0;
  cfg.on_iterate = [&](std::size_t, const SymMat& x, const Vector& y) {
    xs.push_back(x);
    ys.push_back(y);
  };
  SchedulePolicy policy(schedule, R, opt.beta_scale);
  solve(problem, policy, cfg);

  EquivalenceReport rep;
  rep.R = R;
  rep.iters = xs.size() - 1;

  auto lifted_of = [&](std::size_t k) {
    // Z^{k+1} = X^k - a_k A^T(y^k), Z_hat^{k+1} = -a_k T^T(y^k) in engine indexing.
    LiftedState s;
    s.Z = xs[k];
    s.Z.axpy(-schedule(k), apply_At(problem.map, ys[k]));
    s.Z_hat = lifted.apply_transpose(ys[k]);
    for (double& v : s.Z_hat) v *= -schedule(k);
    s.k = k + 1;
    return s;
  };

  LiftedState state = lifted_of(0);
  for (std::size_t k = 1; k <= rep.iters; ++k) {
    DrsStepResult st = drs_step(problem, lifted, state, schedule(k), schedule(k - 1));
    rep.max_x_defect = std::max(rep.max_x_defect, frobenius_norm(st.X - xs[k]));

    const LiftedState expect = lifted_of(k);
    const double dz = frobenius_norm(st.next.Z - expect.Z);
    const double dzh = norm2(st.next.Z_hat - expect.Z_hat);
    rep.max_z_defect = std::max(rep.max_z_defect, std::hypot(dz, dzh));
    if (!std::isfinite(rep.max_x_defect) || !std::isfinite(rep.max_z_defect)) {
      rep.max_x_defect = rep.max_z_defect = std::numeric_limits<double>::infinity();
      break;
    }
    state = std::move(st.next);
  }
  rep.pass = rep.max_x_defect < tol && rep.max_z_defect < tol;
  return rep;
}

/// alpha_k = 1
inline double constant_schedule(std::size_t) { return 1.0; }
/// alpha_k = 1 + 2^-k
inline double geometric_schedule(std::size_t k) { return 1.0 + std::exp2(-static_cast<double>(k)); }

}  // namespace tfpdhg
