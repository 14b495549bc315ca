#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tfpdhg/error.hpp"
#include "tfpdhg/linalg.hpp"

namespace tfpdhg {

/// The linear map X -> (<A_1, X>, ..., <A_m, X>) and its adjoint.
class ConstraintMap {
 public:
  ConstraintMap() = default;

  explicit ConstraintMap(std::vector<SymMat> mats) : mats_(std::move(mats)) {
    if (mats_.empty()) throw DimensionError("ConstraintMap needs at least one constraint");
    const std::size_t n = mats_.front().n();
    for (const SymMat& a : mats_)
      if (a.n() != n) throw DimensionError("ConstraintMap: constraint matrices differ in dimension");
  }

  std::size_t m() const { return mats_.size(); }
  std::size_t n() const { return mats_.empty() ? 0 : mats_.front().n(); }
  const std::vector<SymMat>& mats() const { return mats_; }
  const SymMat& operator[](std::size_t i) const { return mats_[i]; }

  friend bool operator==(const ConstraintMap&, const ConstraintMap&) = default;

 private:
  std::vector<SymMat> mats_;
};

inline Vector apply_A(const ConstraintMap& map, const SymMat& x) {
  if (x.n() != map.n()) throw DimensionError("apply_A: dimension mismatch");
  Vector out(map.m());
  for (std::size_t i = 0; i < map.m(); ++i) out[i] = frobenius_inner(map[i], x);
  return out;
}

inline SymMat apply_At(const ConstraintMap& map, std::span<const double> y) {
  if (y.size() != map.m()) throw DimensionError("apply_At: length mismatch");
  SymMat out(map.n());
  for (std::size_t i = 0; i < map.m(); ++i)
    if (y[i] != 0.0) out.axpy(y[i], map[i]);
  return out;
}

/// G_ij = <A_i, A_j>, i.e. the matrix of A A^T.
inline SymMat gram(const ConstraintMap& map) {
  SymMat g(map.m());
  for (std::size_t j = 0; j < map.m(); ++j)
    for (std::size_t i = 0; i <= j; ++i) g(i, j) = frobenius_inner(map[i], map[j]);
  return g;
}

/// Up to this many constraints the Gram matrix is decomposed exactly.
inline constexpr std::size_t kExactGramLimit = 2000;
/// Inflation applied to power-iteration estimates so they bound the truth.
inline constexpr double kPowerSafety = 1.0 + 1e-6;

/// lambda_max(A^T A) = lambda_max(Gram).
inline double lambda_max_AAt(const ConstraintMap& map) {
  const SymMat g = gram(map);
  if (map.m() <= kExactGramLimit) {
    return std::max(0.0, sym_eig(g).eigvals.front());
  }
  Rng rng(0x9a3b51ULL);
  Vector v(map.m());
  for (double& x : v) x = rng.normal();
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  double lambda = 0.0;
  Vector w(map.m());
  for (int it = 0; it < 10000; ++it) {
    g.multiply(v, w);
    const double next = norm2(w);
    if (next == 0.0) return 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / next;
    const bool done = std::abs(next - lambda) <= 1e-8 * next;
    lambda = next;
    if (done) break;
  }
  return lambda * kPowerSafety;
}

/// Matrix representation of the auxiliary operator T that lifts PDHG to
/// Douglas-Rachford: T T^T = S = (1/R) I - A A^T.
///
/// Rows act on plain vec(X) in R^{n^2}; only the first m columns are nonzero.
struct LiftedOperator {
  std::size_t n = 0;
  double R = 0.0;
  std::vector<Vector> T_rows;  // m rows, each of length n^2
  SymMat S;                    // (1/R) I - Gram

  std::size_t m() const { return T_rows.size(); }
  std::size_t width() const { return n * n; }

  /// T(v) for v in R^{n^2}.
  Vector apply(std::span<const double> v) const {
    if (v.size() != width()) throw DimensionError("LiftedOperator::apply: length mismatch");
    Vector out(m());
    for (std::size_t i = 0; i < m(); ++i) out[i] = dot(T_rows[i], v);
    return out;
  }

  /// T^T(w) in R^{n^2}.
  Vector apply_transpose(std::span<const double> w) const {
    if (w.size() != m()) throw DimensionError("LiftedOperator::apply_transpose: length mismatch");
    Vector out(width(), 0.0);
    for (std::size_t i = 0; i < m(); ++i)
      for (std::size_t k = 0; k < width(); ++k) out[k] += w[i] * T_rows[i][k];
    return out;
  }

  /// T T^T as an m x m symmetric matrix.
  SymMat ttt() const {
    SymMat out(m());
    for (std::size_t j = 0; j < m(); ++j)
      for (std::size_t i = 0; i <= j; ++i) out(i, j) = dot(T_rows[i], T_rows[j]);
    return out;
  }
};

/// Tolerated negative round-off in the eigenvalues of S before it is treated
/// as a genuine precondition violation.
inline constexpr double kLiftClampTol = 1e-12;

inline LiftedOperator build_T(const ConstraintMap& map, double R) {
  const std::size_t m = map.m();
  const std::size_t n = map.n();
  if (m > n * n) throw DimensionError("build_T: requires m <= n^2");
  if (!(R > 0.0)) throw StepsizeError("build_T: stepsize product must be positive");
  const double lmax = lambda_max_AAt(map);
  if (R * lmax >= 1.0) {
    throw StepsizeError("stepsize product violates positivity of (1/R) I - A A^T: R = " + std::to_string(R) +
                        " >= 1/lambda_max = " + std::to_string(1.0 / lmax));
  }

  LiftedOperator lifted;
  lifted.n = n;
  lifted.R = R;
  lifted.S = (1.0 / R) * SymMat::identity(m) - gram(map);

  const SpectralDecomp eig = sym_eig(lifted.S);
  lifted.T_rows.assign(m, Vector(n * n, 0.0));
  for (std::size_t c = 0; c < m; ++c) {
    double lambda = eig.eigvals[c];
    if (lambda < 0.0) {
      if (lambda < -kLiftClampTol) {
        throw StepsizeError("build_T: (1/R) I - A A^T has eigenvalue " + std::to_string(lambda));
      }
      lambda = 0.0;
    }
    const double root = std::sqrt(lambda);
    // T = V diag(sqrt(lambda)), zero-padded from width m to n^2.
    for (std::size_t i = 0; i < m; ++i) lifted.T_rows[i][c] = eig.eigvecs[c][i] * root;
  }
  return lifted;
}

struct LiftCertificate {
  double s_defect = 0.0;      // ||T T^T - S||_F
  double s_norm = 0.0;        // ||S||_F
  double total_defect = 0.0;  // ||A A^T + T T^T - (1/R) I||_F
  bool pass = false;
};

/// Checks the lifting identities of `lifted` against `map`.
inline LiftCertificate certify_lift(const ConstraintMap& map, const LiftedOperator& lifted, double s_tol = 1e-10,
                                    double total_tol = 1e-9) {
  const SymMat ttt = lifted.ttt();
  LiftCertificate c;
  c.s_defect = frobenius_norm(ttt - lifted.S);
  c.s_norm = frobenius_norm(lifted.S);
  SymMat total = gram(map) + ttt;
  total -= (1.0 / lifted.R) * SymMat::identity(map.m());
  c.total_defect = frobenius_norm(total);
  c.pass = c.s_defect < s_tol * std::max(1.0, c.s_norm) && c.total_defect < total_tol;
  return c;
}

}  // namespace tfpdhg
