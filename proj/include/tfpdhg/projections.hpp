#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "tfpdhg/error.hpp"
#include "tfpdhg/linalg.hpp"

namespace tfpdhg {

enum class ProjectionMode { exact, truncated };

struct ProjectionConfig {
  ProjectionMode mode = ProjectionMode::exact;
  std::size_t r = 1;
  double lanczos_tol = 1e-10;

  void validate(std::size_t n) const {
    if (mode == ProjectionMode::truncated && (r < 1 || r > n)) {
      throw DimensionError("truncated projection requires 1 <= r <= n");
    }
  }
};

/// ceil(ln n), at least 1.
inline std::size_t default_truncation_rank(std::size_t n) {
  const double l = std::ceil(std::log(static_cast<double>(n)));
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(l, 1.0)), 1, n);
}

inline SymMat clip_positive(const SpectralDecomp& eig, std::size_t n) {
  SymMat out(n);
  for (std::size_t i = 0; i < eig.eigvals.size(); ++i)
    if (eig.eigvals[i] > 0.0) out.add_rank_one(eig.eigvals[i], eig.eigvecs[i]);
  return out;
}

/// Frobenius-nearest PSD matrix: sum_i max(0, lambda_i) u_i u_i^T.
inline SymMat proj_psd(const SymMat& m) { return clip_positive(sym_eig(m), m.n()); }

/// Rank-r truncated projection keeping the positive parts of the r largest
/// eigenpairs (computed by Lanczos).
inline SymMat approx_proj_psd(const SymMat& m, std::size_t r, double lanczos_tol = 1e-10) {
  if (r < 1 || r > m.n()) throw DimensionError("approx_proj_psd: need 1 <= r <= n");
  return clip_positive(lanczos_top_r(m, r, lanczos_tol), m.n());
}

inline SymMat project(const SymMat& m, const ProjectionConfig& cfg) {
  if (cfg.mode == ProjectionMode::exact) return proj_psd(m);
  return approx_proj_psd(m, cfg.r, cfg.lanczos_tol);
}

}  // namespace tfpdhg
