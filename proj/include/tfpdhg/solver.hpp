#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tfpdhg/error.hpp"
#include "tfpdhg/linalg.hpp"
#include "tfpdhg/operators.hpp"
#include "tfpdhg/problems.hpp"
#include "tfpdhg/projections.hpp"

namespace tfpdhg {

struct IterateState {
  SymMat X_cur;
  SymMat X_prev;
  Vector y;
  std::size_t k = 0;
};

/// (alpha, beta, theta) for one dual step plus the target product R that
/// product-preserving policies hold alpha * beta to.
struct StepsizeState {
  double alpha = 1.0;
  double beta = 1.0;
  double theta = 1.0;
  double R = 1.0;
};

struct ResidualReport {
  double p_norm = 0.0;
  double d_norm = 0.0;
  double combined = 0.0;
};

enum TraceFlag : unsigned {
  kFlagNone = 0,
  kFlagDegenerateCosine = 1u << 0,
  kFlagZeroDenominator = 1u << 1,
  kFlagBacktracked = 1u << 2,
};

/// One engine iteration. alpha/beta/theta are the triple of this row's dual
/// step: beta and theta were used in the y-update, and alpha (paired with
/// beta, alpha * beta = R) is the primal stepsize of the next X-update.
struct TraceRow {
  std::size_t iter = 0;  // 1-based
  double p_norm = 0.0;
  double d_norm = 0.0;
  double combined = 0.0;
  double objective = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double theta = 0.0;
  double wall_ms = 0.0;
  unsigned flags = kFlagNone;
};

enum class RunStatus { converged, iteration_cap, error };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::iteration_cap: return "iteration_cap";
    case RunStatus::error: return "error";
  }
  return "unknown";
}

struct RunTrace {
  std::string policy;
  double alpha0 = 0.0;  // primal stepsize of the first X-update
  std::vector<TraceRow> rows;
  RunStatus status = RunStatus::iteration_cap;
  std::string message;
  SymMat X;  // last primal iterate
  Vector y;  // last dual iterate

  std::size_t iterations() const { return rows.size(); }
  bool converged() const { return status == RunStatus::converged; }
};

/// Solver failure; carries the trace recorded up to the failure.
class SolveError : public Error {
 public:
  SolveError(const std::string& what, RunTrace trace) : Error(what), trace_(std::move(trace)) {}
  const RunTrace& trace() const { return trace_; }

 private:
  RunTrace trace_;
};

// -----------------------------------------------------------------------------
// Update maps and residuals
// -----------------------------------------------------------------------------

/// Proj(X - alpha (A^T y + C))
inline SymMat x_update(const SdpProblem& problem, const SymMat& x, std::span<const double> y, double alpha,
                       const ProjectionConfig& proj = {}) {
  if (!(alpha > 0.0)) throw StepsizeError("x_update: alpha must be positive");
  SymMat step = apply_At(problem.map, y);
  step += problem.C;
  SymMat arg = x;
  arg.axpy(-alpha, step);
  return project(arg, proj);
}

inline SymMat x_update(const SdpProblem& problem, const IterateState& state, double alpha,
                       const ProjectionConfig& proj = {}) {
  return x_update(problem, state.X_cur, state.y, alpha, proj);
}

/// y + beta (A(X_new + theta (X_new - X_cur)) - b)
inline Vector y_update(const SdpProblem& problem, std::span<const double> y, const SymMat& x_cur,
                       const SymMat& x_new, double beta, double theta) {
  if (!(beta > 0.0)) throw StepsizeError("y_update: beta must be positive");
  SymMat bar = x_new;
  bar.axpy(theta, x_new);
  bar.axpy(-theta, x_cur);
  Vector ax = apply_A(problem.map, bar);
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += beta * (ax[i] - problem.b[i]);
  return out;
}

inline Vector y_update(const SdpProblem& problem, const IterateState& state, const SymMat& x_new, double beta,
                       double theta) {
  return y_update(problem, state.y, state.X_cur, x_new, beta, theta);
}

/// p = ||(X_prev - X_new)/alpha - A^T(y_prev - y_new)||_F,
/// d = ||(y_prev - y_new)/beta - A(X_prev - X_new)||_2.
inline ResidualReport residuals(const SdpProblem& problem, const SymMat& x_prev, const SymMat& x_new,
                                std::span<const double> y_prev, std::span<const double> y_new, double alpha,
                                double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw StepsizeError("residuals: stepsizes must be positive");
  const SymMat dx = x_prev - x_new;
  Vector dy(y_prev.size());
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = y_prev[i] - y_new[i];

  SymMat p = (1.0 / alpha) * dx;
  p -= apply_At(problem.map, dy);
  Vector adx = apply_A(problem.map, dx);
  Vector d(dy.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = dy[i] / beta - adx[i];

  ResidualReport r;
  r.p_norm = frobenius_norm(p);
  r.d_norm = norm2(d);
  r.combined = r.p_norm * r.p_norm + r.d_norm * r.d_norm;
  return r;
}

inline constexpr double kDefaultTol = 1e-6;

/// Strict: converged iff p^2 + d^2 < tol.
inline bool stop_check(const ResidualReport& r, double tol = kDefaultTol) { return r.combined < tol; }

// -----------------------------------------------------------------------------
// Policy hooks
// -----------------------------------------------------------------------------

/// What a policy sees between the X-update and the y-update of iteration k.
struct DualStepContext {
  const SdpProblem& problem;
  std::size_t k;  // 0-based engine iteration
  const SymMat& X_cur;
  const SymMat& X_new;
  const Vector& y_cur;
  double alpha_cur;  // stepsize that produced X_new
};

struct DualStep {
  double alpha_next = 0.0;
  double beta = 0.0;
  double theta = 1.0;
  Vector y_new;
  unsigned flags = kFlagNone;
};

/// What a policy sees after the residuals of iteration k are known.
struct ObserveContext {
  const DualStepContext& before;
  const DualStep& step;
  const ResidualReport& report;
};

template <class P>
concept StepsizePolicy = requires(P p, const DualStepContext& dc, const ObserveContext& oc) {
  { p.name() } -> std::convertible_to<std::string>;
  { p.initial_alpha() } -> std::convertible_to<double>;
  { p.dual_step(dc) } -> std::same_as<DualStep>;
  p.observe(oc);
};

struct SolveConfig {
  std::size_t max_iters = 10000;
  double tol = kDefaultTol;
  ProjectionConfig proj;
  std::optional<SymMat> X0;  // defaults to 0
  std::optional<Vector> y0;  // defaults to 0
  /// Called with (k, X^k, y^k) for k = 0 and after every completed iteration.
  std::function<void(std::size_t, const SymMat&, const Vector&)> on_iterate;
};

/// Runs the generic adaptive PDHG loop:
///   X+ = Proj(X - alpha (A^T y + C));  policy picks (alpha_next, beta, theta)
///   y+ = y + beta (A(X+ + theta (X+ - X)) - b);  residuals;  stop check.
/// Library errors inside the loop surface as SolveError carrying the trace.
template <StepsizePolicy Policy>
RunTrace solve(const SdpProblem& problem, Policy& policy, const SolveConfig& config = {}) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  RunTrace trace;
  trace.policy = policy.name();
  SymMat x = config.X0 ? *config.X0 : SymMat(problem.n());
  Vector y = config.y0 ? *config.y0 : Vector(problem.m(), 0.0);
  if (x.n() != problem.n()) throw DimensionError("solve: X0 dimension mismatch");
  if (y.size() != problem.m()) throw DimensionError("solve: y0 length mismatch");
  config.proj.validate(problem.n());

  double alpha = policy.initial_alpha();
  trace.alpha0 = alpha;
  trace.status = RunStatus::iteration_cap;

  if (config.on_iterate) config.on_iterate(0, x, y);
  try {
    for (std::size_t k = 0; k < config.max_iters; ++k) {
      SymMat x_new = x_update(problem, x, y, alpha, config.proj);
      const DualStepContext ctx{problem, k, x, x_new, y, alpha};
      DualStep step = policy.dual_step(ctx);
      const ResidualReport report = residuals(problem, x, x_new, y, step.y_new, alpha, step.beta);

      TraceRow row;
      row.iter = k + 1;
      row.p_norm = report.p_norm;
      row.d_norm = report.d_norm;
      row.combined = report.combined;
      row.objective = frobenius_inner(problem.C, x_new);
      row.alpha = step.alpha_next;
      row.beta = step.beta;
      row.theta = step.theta;
      row.flags = step.flags;
      row.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      trace.rows.push_back(row);

      policy.observe(ObserveContext{ctx, step, report});

      if (!std::isfinite(report.combined) || !std::isfinite(step.alpha_next) || !(step.alpha_next > 0.0)) {
        trace.X = std::move(x_new);
        trace.y = std::move(step.y_new);
        throw Error("non-finite iterate (diverged) at iteration " + std::to_string(k + 1));
      }
      x = std::move(x_new);
      y = std::move(step.y_new);
      alpha = step.alpha_next;
      if (config.on_iterate) config.on_iterate(k + 1, x, y);
      if (stop_check(report, config.tol)) {
        trace.status = RunStatus::converged;
        break;
      }
    }
  } catch (const Error& e) {
    trace.status = RunStatus::error;
    trace.message = e.what();
    if (trace.X.empty()) trace.X = std::move(x);
    if (trace.y.empty()) trace.y = std::move(y);
    throw SolveError(e.what(), std::move(trace));
  }
  trace.X = std::move(x);
  trace.y = std::move(y);
  return trace;
}

}  // namespace tfpdhg
