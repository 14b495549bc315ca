#pragma once

// Independent reference computations shared by the tests. Eigen stands in as
// the trusted dense eigensolver; everything else is naive dense arithmetic.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "tfpdhg/linalg.hpp"
#include "tfpdhg/operators.hpp"
#include "tfpdhg/random.hpp"

namespace oracle {

using tfpdhg::SymMat;
using tfpdhg::Vector;

inline Eigen::MatrixXd dense(const SymMat& m) {
  Eigen::MatrixXd d(m.n(), m.n());
  for (std::size_t i = 0; i < m.n(); ++i)
    for (std::size_t j = 0; j < m.n(); ++j) d(i, j) = m(i, j);
  return d;
}

inline SymMat sym(const Eigen::MatrixXd& d) {
  SymMat m(static_cast<std::size_t>(d.rows()));
  for (std::size_t i = 0; i < m.n(); ++i)
    for (std::size_t j = i; j < m.n(); ++j) m(i, j) = 0.5 * (d(i, j) + d(j, i));
  return m;
}

inline SymMat random_sym(tfpdhg::Rng& rng, std::size_t n, double scale = 1.0) {
  SymMat m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = scale * rng.normal();
  return m;
}

inline Eigen::VectorXd eigvals_desc(const SymMat& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(m));
  return es.eigenvalues().reverse();
}

/// Frobenius-nearest PSD matrix by clipping Eigen's eigenvalues.
inline SymMat clip_psd(const SymMat& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(m));
  Eigen::VectorXd l = es.eigenvalues().cwiseMax(0.0);
  return sym(es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose());
}

/// Keeps the positive parts of the r largest eigenpairs.
inline SymMat clip_top_r(const SymMat& m, std::size_t r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(m));
  const Eigen::Index n = es.eigenvalues().size();
  Eigen::VectorXd l = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = n - static_cast<Eigen::Index>(r); i < n; ++i) l(i) = std::max(0.0, es.eigenvalues()(i));
  return sym(es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose());
}

inline double max_abs_diff(const SymMat& a, const SymMat& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i)
    for (std::size_t j = 0; j < a.n(); ++j) out = std::max(out, std::abs(a(i, j) - b(i, j)));
  return out;
}

/// Rows of the m x n^2 matrix representing A on plain vec(X).
inline Eigen::MatrixXd a_matrix(const tfpdhg::ConstraintMap& map) {
  const std::size_t n = map.n();
  Eigen::MatrixXd a(map.m(), n * n);
  for (std::size_t k = 0; k < map.m(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(k, i * n + j) = map[k](i, j);
  return a;
}

/// sum_ij a_ij b_ij over all n^2 entries.
inline double brute_inner(const SymMat& a, const SymMat& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i)
    for (std::size_t j = 0; j < a.n(); ++j) s += a(i, j) * b(i, j);
  return s;
}

inline tfpdhg::ConstraintMap random_map(tfpdhg::Rng& rng, std::size_t n, std::size_t m) {
  std::vector<SymMat> mats;
  for (std::size_t k = 0; k < m; ++k) mats.push_back(random_sym(rng, n));
  return tfpdhg::ConstraintMap(std::move(mats));
}

}  // namespace oracle
