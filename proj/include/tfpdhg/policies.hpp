#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <type_traits>
#include <variant>

#include "tfpdhg/error.hpp"
#include "tfpdhg/operators.hpp"
#include "tfpdhg/problems.hpp"
#include "tfpdhg/solver.hpp"

namespace tfpdhg {

/// Fraction of 1/lambda_max used for the default stepsize product.
inline constexpr double kDefaultProductFraction = 0.9;

namespace detail {

inline double usable_lambda(double lambda_max) { return lambda_max > 0.0 ? lambda_max : 1.0; }

inline void check_product(double alpha0, double beta0, double lambda_max) {
  if (!(alpha0 > 0.0) || !(beta0 > 0.0)) throw StepsizeError("initial stepsizes must be positive");
  if (lambda_max > 0.0 && alpha0 * beta0 * lambda_max >= 1.0) {
    throw StepsizeError("alpha0 * beta0 must be below 1/lambda_max(A^T A)");
  }
}

}  // namespace detail

// -----------------------------------------------------------------------------
// Fixed
// -----------------------------------------------------------------------------

struct FixedParams {
  std::optional<double> alpha0;  // default sqrt(0.9 / lambda_max)
  std::optional<double> beta0;
};

/// Constant (alpha, beta) with theta = 1.
inline StepsizeState policy_fixed(const StepsizeState& s) {
  StepsizeState out = s;
  out.theta = 1.0;
  return out;
}

class FixedPolicy {
 public:
  FixedPolicy(const SdpProblem& problem, const FixedParams& prm = {}) {
    const double lmax = lambda_max_AAt(problem.map);
    const double base = std::sqrt(kDefaultProductFraction / detail::usable_lambda(lmax));
    state_.alpha = prm.alpha0.value_or(base);
    state_.beta = prm.beta0.value_or(base);
    detail::check_product(state_.alpha, state_.beta, lmax);
    state_.R = state_.alpha * state_.beta;
    state_.theta = 1.0;
  }

  std::string name() const { return "fixed"; }
  double initial_alpha() const { return state_.alpha; }

  DualStep dual_step(const DualStepContext& c) {
    state_ = policy_fixed(state_);
    DualStep s;
    s.alpha_next = state_.alpha;
    s.beta = state_.beta;
    s.theta = state_.theta;
    s.y_new = y_update(c.problem, c.y_cur, c.X_cur, c.X_new, s.beta, s.theta);
    return s;
  }
  void observe(const ObserveContext&) {}

  const StepsizeState& state() const { return state_; }

 private:
  StepsizeState state_;
};

// -----------------------------------------------------------------------------
// Three-branch balancing shared by B-PDR and A-LV
// -----------------------------------------------------------------------------

enum class BalanceBranch { increase, keep, decrease };

/// increase: alpha/(1-eps), beta(1-eps), theta = 1/(1-eps)
/// keep:     unchanged, theta = 1
/// decrease: alpha(1-eps), beta/(1-eps), theta = 1-eps
/// beta is recomputed as R/alpha so the product stays R to rounding.
inline StepsizeState balance_step(const StepsizeState& s, BalanceBranch branch, double eps) {
  StepsizeState out = s;
  double factor = 1.0;
  switch (branch) {
    case BalanceBranch::increase: factor = 1.0 / (1.0 - eps); break;
    case BalanceBranch::keep: factor = 1.0; break;
    case BalanceBranch::decrease: factor = 1.0 - eps; break;
  }
  out.alpha = s.alpha * factor;
  out.beta = s.R / out.alpha;
  out.theta = factor;
  return out;
}

struct BpdrParams {
  double eps0 = 0.5;
  double eta = 0.95;
  double delta = 1.0;
  std::optional<double> alpha0;
  std::optional<double> beta0;

  void validate() const {
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw StepsizeError("B-PDR: eps0 must lie in (0,1)");
    if (!(eta > 0.0 && eta < 1.0)) throw StepsizeError("B-PDR: eta must lie in (0,1)");
    if (!(delta > 0.0)) throw StepsizeError("B-PDR: delta must be positive");
  }
};

inline BalanceBranch bpdr_branch(const ResidualReport& r, double delta) {
  if (r.p_norm > 2.0 * r.d_norm * delta) return BalanceBranch::increase;
  if (0.5 * r.d_norm <= r.p_norm && r.p_norm <= 2.0 * r.d_norm) return BalanceBranch::keep;
  return BalanceBranch::decrease;
}

/// One balancing update keyed on the primal/dual residual ratio.
inline StepsizeState policy_bpdr(const StepsizeState& s, const ResidualReport& r, const BpdrParams& prm, double eps_k) {
  return balance_step(s, bpdr_branch(r, prm.delta), eps_k);
}

namespace detail {

// Shared machinery for the residual-driven balancing policies. The decision
// from iteration k's residuals fixes the primal stepsize two X-updates ahead:
// it is applied at the dual step of iteration k+1, where the next alpha is
// chosen and beta, theta follow from it.
class BalancingBase {
 public:
  BalancingBase(const SdpProblem& problem, double eps0, double eta, std::optional<double> a0,
                std::optional<double> b0) {
    const double lmax = lambda_max_AAt(problem.map);
    const double base = std::sqrt(kDefaultProductFraction / usable_lambda(lmax));
    state_.alpha = a0.value_or(base);
    state_.beta = b0.value_or(base);
    check_product(state_.alpha, state_.beta, lmax);
    state_.R = state_.alpha * state_.beta;
    pending_ = state_;
    pending_.theta = 1.0;
    eps_ = eps0;
    eta_ = eta;
  }

  double initial_alpha() const { return state_.alpha; }
  double current_eps() const { return eps_; }
  std::size_t decisions() const { return decisions_; }

  DualStep dual_step(const DualStepContext& c) {
    const double prev = state_.alpha;
    state_ = pending_;
    state_.theta = state_.alpha / prev;
    DualStep s;
    s.alpha_next = state_.alpha;
    s.beta = state_.beta;
    s.theta = state_.theta;
    s.y_new = y_update(c.problem, c.y_cur, c.X_cur, c.X_new, s.beta, s.theta);
    return s;
  }

 protected:
  void decide(BalanceBranch branch) {
    pending_ = balance_step(state_, branch, eps_);
    eps_ *= eta_;
    ++decisions_;
  }

  StepsizeState state_;  // triple of the most recent dual step

 private:
  StepsizeState pending_;
  double eps_ = 0.5;
  double eta_ = 0.95;
  std::size_t decisions_ = 0;
};

}  // namespace detail

class BpdrPolicy : public detail::BalancingBase {
 public:
  BpdrPolicy(const SdpProblem& problem, const BpdrParams& prm = {})
      : BalancingBase(problem, (prm.validate(), prm.eps0), prm.eta, prm.alpha0, prm.beta0), prm_(prm) {}

  std::string name() const { return "bpdr"; }
  void observe(const ObserveContext& o) { decide(bpdr_branch(o.report, prm_.delta)); }

 private:
  BpdrParams prm_;
};

// -----------------------------------------------------------------------------
// A-LV
// -----------------------------------------------------------------------------

enum class AlvResidual { delta_y, absolute_y };

struct AlvParams {
  double eps0 = 0.5;
  double eta = 0.95;
  double cosine_threshold = 0.99;
  AlvResidual residual_variant = AlvResidual::delta_y;
  std::optional<double> alpha0;
  std::optional<double> beta0;

  void validate() const {
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw StepsizeError("A-LV: eps0 must lie in (0,1)");
    if (!(eta > 0.0 && eta < 1.0)) throw StepsizeError("A-LV: eta must lie in (0,1)");
  }
};

/// Cosine between X_prev - X_new and the primal residual direction; nullopt
/// when either has zero norm.
inline std::optional<double> alv_cosine(const SdpProblem& problem, const SymMat& x_prev, const SymMat& x_new,
                                        std::span<const double> y_prev, std::span<const double> y_new, double alpha,
                                        AlvResidual variant) {
  const SymMat dx = x_prev - x_new;
  SymMat p = (1.0 / alpha) * dx;
  if (variant == AlvResidual::delta_y) {
    Vector dy(y_prev.size());
    for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = y_prev[i] - y_new[i];
    p -= apply_At(problem.map, dy);
  } else {
    p -= apply_At(problem.map, y_prev);
  }
  const double ndx = frobenius_norm(dx);
  const double np = frobenius_norm(p);
  if (ndx == 0.0 || np == 0.0) return std::nullopt;
  return frobenius_inner(dx, p) / (ndx * np);
}

inline BalanceBranch alv_branch(double w, double threshold) {
  if (w > threshold) return BalanceBranch::increase;
  if (w >= 0.0) return BalanceBranch::keep;
  return BalanceBranch::decrease;
}

struct AlvDecision {
  StepsizeState next;
  std::optional<double> cosine;
  bool degenerate = false;
};

inline AlvDecision policy_alv(const StepsizeState& s, const SdpProblem& problem, const SymMat& x_prev,
                              const SymMat& x_new, std::span<const double> y_prev, std::span<const double> y_new,
                              double alpha, const AlvParams& prm, double eps_k) {
  AlvDecision d;
  d.cosine = alv_cosine(problem, x_prev, x_new, y_prev, y_new, alpha, prm.residual_variant);
  d.degenerate = !d.cosine.has_value();
  const BalanceBranch br = d.degenerate ? BalanceBranch::keep : alv_branch(*d.cosine, prm.cosine_threshold);
  d.next = balance_step(s, br, eps_k);
  return d;
}

class AlvPolicy : public detail::BalancingBase {
 public:
  AlvPolicy(const SdpProblem& problem, const AlvParams& prm = {})
      : BalancingBase(problem, (prm.validate(), prm.eps0), prm.eta, prm.alpha0, prm.beta0), prm_(prm) {}

  std::string name() const { return "alv"; }

  DualStep dual_step(const DualStepContext& c) {
    DualStep s = BalancingBase::dual_step(c);
    if (degenerate_pending_) s.flags |= kFlagDegenerateCosine;
    degenerate_pending_ = false;
    return s;
  }

  void observe(const ObserveContext& o) {
    const auto& b = o.before;
    auto w = alv_cosine(b.problem, b.X_cur, b.X_new, b.y_cur, o.step.y_new, b.alpha_cur, prm_.residual_variant);
    if (!w) {
      degenerate_pending_ = true;
      ++degenerate_count_;
      decide(BalanceBranch::keep);
    } else {
      decide(alv_branch(*w, prm_.cosine_threshold));
    }
  }

  std::size_t degenerate_count() const { return degenerate_count_; }

 private:
  AlvParams prm_;
  bool degenerate_pending_ = false;
  std::size_t degenerate_count_ = 0;
};

// -----------------------------------------------------------------------------
// Linesearch
// -----------------------------------------------------------------------------

struct LsParams {
  double s = 1.0;
  double mu = 0.7;
  int max_shrinks = 60;
  std::optional<double> alpha0;  // default sqrt(0.9 / (s lambda_max))

  void validate() const {
    if (!(s > 0.0)) throw StepsizeError("LS: s must be positive");
    if (!(mu > 0.0 && mu < 1.0)) throw StepsizeError("LS: mu must lie in (0,1)");
  }
};

class LinesearchStalled : public Error {
 public:
  using Error::Error;
};

struct LinesearchResult {
  StepsizeState step;
  Vector y_next;
  int shrinks = 0;
};

/// Backtracking dual step: starts at alpha_prev sqrt(1 + theta_prev) and
/// shrinks by mu until ||A^T(y+ - y)||_F <= ||y+ - y|| / (sqrt(s) alpha).
inline LinesearchResult policy_linesearch_step(const SdpProblem& problem, const SymMat& x_cur, const SymMat& x_new,
                                               std::span<const double> y, double alpha_prev, double theta_prev,
                                               const LsParams& prm) {
  LinesearchResult out;
  double alpha = alpha_prev * std::sqrt(1.0 + theta_prev);
  const double sqrt_s = std::sqrt(prm.s);
  for (int shrink = 0;; ++shrink) {
    const double beta = prm.s * alpha;
    const double theta = alpha / alpha_prev;
    Vector y_next = y_update(problem, y, x_cur, x_new, beta, theta);
    Vector dy(y.size());
    for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = y_next[i] - y[i];
    const double lhs = frobenius_norm(apply_At(problem.map, dy));
    const double rhs = norm2(dy) / (sqrt_s * alpha);
    if (!(lhs > rhs)) {
      out.step = StepsizeState{alpha, beta, theta, alpha * beta};
      out.y_next = std::move(y_next);
      out.shrinks = shrink;
      return out;
    }
    if (shrink >= prm.max_shrinks) throw LinesearchStalled("linesearch stalled");
    alpha *= prm.mu;
  }
}

class LsPolicy {
 public:
  LsPolicy(const SdpProblem& problem, const LsParams& prm = {}) : prm_(prm) {
    prm_.validate();
    const double lmax = detail::usable_lambda(lambda_max_AAt(problem.map));
    alpha_ = prm.alpha0.value_or(std::sqrt(kDefaultProductFraction / (prm.s * lmax)));
    if (!(alpha_ > 0.0)) throw StepsizeError("LS: alpha0 must be positive");
  }

  std::string name() const {
    std::ostringstream os;
    os << "ls-s" << prm_.s;
    return os.str();
  }
  double initial_alpha() const { return alpha_; }

  DualStep dual_step(const DualStepContext& c) {
    LinesearchResult r = policy_linesearch_step(c.problem, c.X_cur, c.X_new, c.y_cur, c.alpha_cur, theta_prev_, prm_);
    theta_prev_ = r.step.theta;
    alpha_ = r.step.alpha;
    total_shrinks_ += static_cast<std::size_t>(r.shrinks);
    DualStep s;
    s.alpha_next = r.step.alpha;
    s.beta = r.step.beta;
    s.theta = r.step.theta;
    s.y_new = std::move(r.y_next);
    if (r.shrinks > 0) s.flags |= kFlagBacktracked;
    return s;
  }
  void observe(const ObserveContext&) {}

  std::size_t total_shrinks() const { return total_shrinks_; }

 private:
  LsParams prm_;
  double alpha_ = 1.0;
  double theta_prev_ = 1.0;
  std::size_t total_shrinks_ = 0;
};

// -----------------------------------------------------------------------------
// Tuning-free
// -----------------------------------------------------------------------------

/// Which theta feeds the dual extrapolation.
enum class TfExtrapolation {
  /// theta = alpha_k / alpha_{k-1}, the ratio the convergence analysis needs.
  stepsize_ratio,
  /// theta = the clamped norm ratio itself, as the update rule is displayed.
  clamped_ratio,
};

struct TfParams {
  std::optional<double> eps;  // default lambda_max (1 + 1e-6)
  double theta_min = 1e-5;
  double theta_max = 1e5;
  double alpha0 = 1.0;
  TfExtrapolation extrapolation = TfExtrapolation::stepsize_ratio;
  /// Ratio used when numerator and denominator both vanish (0/0). Unset
  /// means theta_max, the same as any other zero denominator.
  std::optional<double> indeterminate_ratio;

  /// omega_k = 2^(-k/100)
  static double omega(std::size_t k) { return std::exp2(-static_cast<double>(k) / 100.0); }
};

/// Margin applied over lambda_max so the tuning-free product 1/eps stays
/// strictly below 1/lambda_max.
inline constexpr double kTfSafety = 1.0 + 1e-6;

struct TfUpdate {
  StepsizeState step;  // alpha = new alpha_k, beta = 1/(eps alpha_k), theta = extrapolation used
  double ratio = 0.0;  // clamped norm ratio
  bool zero_denominator = false;
};

/// ratio = clamp(||X_k|| / ||X_k - X_{k-1} + alpha_{k-1} A^T(y_k)||, theta_min, theta_max)
/// alpha_k = (1 - omega_k + omega_k ratio) alpha_{k-1},  beta_k = 1/(eps alpha_k).
/// `k` is the 1-based index of the omega schedule.
inline TfUpdate policy_tuning_free(const SdpProblem& problem, const SymMat& x_new, const SymMat& x_prev,
                                   std::span<const double> y, double alpha_prev, double eps, const TfParams& prm,
                                   std::size_t k) {
  SymMat den = x_new - x_prev;
  den.axpy(alpha_prev, apply_At(problem.map, y));
  const double num = frobenius_norm(x_new);
  const double dn = frobenius_norm(den);
  TfUpdate out;
  if (dn == 0.0) {
    out.zero_denominator = true;
    out.ratio = (num == 0.0 && prm.indeterminate_ratio)
                    ? std::clamp(*prm.indeterminate_ratio, prm.theta_min, prm.theta_max)
                    : prm.theta_max;
  } else {
    out.ratio = std::clamp(num / dn, prm.theta_min, prm.theta_max);
  }
  const double w = TfParams::omega(k);
  const double alpha = (1.0 - w + w * out.ratio) * alpha_prev;
  out.step.alpha = alpha;
  out.step.beta = 1.0 / (eps * alpha);
  out.step.R = 1.0 / eps;
  out.step.theta = prm.extrapolation == TfExtrapolation::stepsize_ratio ? alpha / alpha_prev : out.ratio;
  return out;
}

class TfPolicy {
 public:
  TfPolicy(const SdpProblem& problem, const TfParams& prm = {}) : prm_(prm) {
    if (!(prm.theta_min > 0.0) || !(prm.theta_min <= 1.0) || !(prm.theta_max >= 1.0)) {
      throw StepsizeError("TF: need 0 < theta_min <= 1 <= theta_max");
    }
    if (!(prm.alpha0 > 0.0)) throw StepsizeError("TF: alpha0 must be positive");
    const double lmax = lambda_max_AAt(problem.map);
    const double safe = detail::usable_lambda(lmax) * kTfSafety;
    eps_ = prm.eps.value_or(safe);
    if (eps_ < safe) {
      throw StepsizeError("TF: eps must be at least lambda_max(A^T A) (1 + 1e-6) = " + std::to_string(safe));
    }
  }

  std::string name() const { return "tf"; }
  double initial_alpha() const { return prm_.alpha0; }
  double eps() const { return eps_; }

  DualStep dual_step(const DualStepContext& c) {
    TfUpdate u = policy_tuning_free(c.problem, c.X_new, c.X_cur, c.y_cur, c.alpha_cur, eps_, prm_, c.k + 1);
    DualStep s;
    s.alpha_next = u.step.alpha;
    s.beta = u.step.beta;
    s.theta = u.step.theta;
    if (u.zero_denominator) {
      s.flags |= kFlagZeroDenominator;
      ++zero_denominators_;
    }
    last_ratio_ = u.ratio;
    s.y_new = y_update(c.problem, c.y_cur, c.X_cur, c.X_new, s.beta, s.theta);
    return s;
  }
  void observe(const ObserveContext&) {}

  double last_ratio() const { return last_ratio_; }
  std::size_t zero_denominators() const { return zero_denominators_; }

 private:
  TfParams prm_;
  double eps_ = 1.0;
  double last_ratio_ = 1.0;
  std::size_t zero_denominators_ = 0;
};

// -----------------------------------------------------------------------------
// Prescribed schedule (used by the equivalence oracle)
// -----------------------------------------------------------------------------

/// alpha_k from a user schedule, theta_k = alpha_k/alpha_{k-1},
/// beta_k = beta_scale * R / alpha_k. beta_scale != 1 breaks the product.
class SchedulePolicy {
 public:
  SchedulePolicy(std::function<double(std::size_t)> alpha, double R, double beta_scale = 1.0)
      : alpha_(std::move(alpha)), R_(R), beta_scale_(beta_scale) {
    if (!(R > 0.0)) throw StepsizeError("schedule: R must be positive");
  }

  std::string name() const { return "schedule"; }
  double initial_alpha() const { return alpha_(0); }

  DualStep dual_step(const DualStepContext& c) {
    DualStep s;
    s.alpha_next = alpha_(c.k + 1);
    if (!(s.alpha_next > 0.0)) throw StepsizeError("schedule: alpha must be positive");
    s.theta = s.alpha_next / c.alpha_cur;
    s.beta = beta_scale_ * R_ / s.alpha_next;
    s.y_new = y_update(c.problem, c.y_cur, c.X_cur, c.X_new, s.beta, s.theta);
    return s;
  }
  void observe(const ObserveContext&) {}

 private:
  std::function<double(std::size_t)> alpha_;
  double R_;
  double beta_scale_;
};

// -----------------------------------------------------------------------------
// Runtime selection
// -----------------------------------------------------------------------------

using PolicySpec = std::variant<FixedParams, BpdrParams, AlvParams, LsParams, TfParams>;

inline std::string policy_label(const PolicySpec& spec) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FixedParams>) return "fixed";
        else if constexpr (std::is_same_v<T, BpdrParams>) return "bpdr";
        else if constexpr (std::is_same_v<T, AlvParams>) return "alv";
        else if constexpr (std::is_same_v<T, LsParams>) {
          std::ostringstream os;
          os << "ls-s" << p.s;
          return os.str();
        } else return "tf";
      },
      spec);
}

inline RunTrace solve_with(const SdpProblem& problem, const PolicySpec& spec, const SolveConfig& config = {}) {
  return std::visit(
      [&](const auto& prm) {
        using T = std::decay_t<decltype(prm)>;
        if constexpr (std::is_same_v<T, FixedParams>) {
          FixedPolicy p(problem, prm);
          return solve(problem, p, config);
        } else if constexpr (std::is_same_v<T, BpdrParams>) {
          BpdrPolicy p(problem, prm);
          return solve(problem, p, config);
        } else if constexpr (std::is_same_v<T, AlvParams>) {
          AlvPolicy p(problem, prm);
          return solve(problem, p, config);
        } else if constexpr (std::is_same_v<T, LsParams>) {
          LsPolicy p(problem, prm);
          return solve(problem, p, config);
        } else {
          TfPolicy p(problem, prm);
          return solve(problem, p, config);
        }
      },
      spec);
}

}  // namespace tfpdhg
