#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tfpdhg/error.hpp"
#include "tfpdhg/random.hpp"

namespace tfpdhg {

using Vector = std::vector<double>;

// -----------------------------------------------------------------------------
// Vector helpers
// -----------------------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Vector operator-(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("vector subtraction: length mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vector operator+(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("vector addition: length mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vector operator*(double s, const Vector& a) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

// -----------------------------------------------------------------------------
// SymMat
// -----------------------------------------------------------------------------

/// Dense real symmetric matrix with packed upper-triangular storage.
///
/// Every unordered index pair (i, j) owns exactly one slot, so (i, j) and
/// (j, i) are bit-identical by construction.
class SymMat {
 public:
  SymMat() = default;

  explicit SymMat(std::size_t n) : n_(n), data_(n * (n + 1) / 2, 0.0) {
    if (n == 0) throw DimensionError("SymMat dimension must be at least 1");
  }

  static SymMat zeros(std::size_t n) { return SymMat(n); }

  static SymMat identity(std::size_t n) {
    SymMat m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static SymMat diagonal(std::span<const double> d) {
    SymMat m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  /// Builds from a row-major n*n array, reading the upper triangle only.
  static SymMat from_upper(std::size_t n, std::span<const double> row_major) {
    if (row_major.size() != n * n) throw DimensionError("from_upper: expected n*n entries");
    SymMat m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) m(i, j) = row_major[i * n + j];
    return m;
  }

  /// A = u u^T for a vector u.
  static SymMat outer(std::span<const double> u) {
    SymMat m(u.size());
    m.add_rank_one(1.0, u);
    return m;
  }

  std::size_t n() const { return n_; }
  bool empty() const { return n_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return data_[slot(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[slot(i, j)]; }

  std::span<const double> packed() const { return data_; }
  std::span<double> packed() { return data_; }

  /// this += s * u u^T
  void add_rank_one(double s, std::span<const double> u) {
    if (u.size() != n_) throw DimensionError("add_rank_one: length mismatch");
    for (std::size_t j = 0; j < n_; ++j) {
      const double su = s * u[j];
      double* col = data_.data() + j * (j + 1) / 2;
      for (std::size_t i = 0; i <= j; ++i) col[i] += su * u[i];
    }
  }

  /// this += s * other
  void axpy(double s, const SymMat& other) {
    check_same(other, "axpy");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * other.data_[k];
  }

  SymMat& operator+=(const SymMat& o) {
    axpy(1.0, o);
    return *this;
  }
  SymMat& operator-=(const SymMat& o) {
    axpy(-1.0, o);
    return *this;
  }
  SymMat& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
  friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
  friend SymMat operator*(double s, SymMat a) { return a *= s; }

  Vector diag() const {
    Vector d(n_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = (*this)(i, i);
    return d;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  /// Row-major dense copy (both triangles filled).
  Vector to_dense() const {
    Vector d(n_ * n_);
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i <= j; ++i) d[i * n_ + j] = d[j * n_ + i] = (*this)(i, j);
    return d;
  }

  /// Plain column-stacked vectorization in R^{n^2} (no sqrt(2) scaling).
  Vector vec() const { return to_dense(); }

  /// y = M x
  void multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != n_ || y.size() != n_) throw DimensionError("SymMat::multiply: length mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      const double* col = data_.data() + j * (j + 1) / 2;
      double acc = 0.0;
      for (std::size_t i = 0; i < j; ++i) {
        y[i] += col[i] * x[j];
        acc += col[i] * x[i];
      }
      y[j] += acc + col[j] * x[j];
    }
  }

  Vector operator*(std::span<const double> x) const {
    Vector y(n_);
    multiply(x, y);
    return y;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const SymMat&, const SymMat&) = default;

 private:
  std::size_t slot(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return j * (j + 1) / 2 + i;
  }

  void check_same(const SymMat& o, const char* what) const {
    if (o.n_ != n_) throw DimensionError(std::string(what) + ": dimension mismatch");
  }

  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// <A, B> = sum_ij A_ij B_ij
inline double frobenius_inner(const SymMat& a, const SymMat& b) {
  if (a.n() != b.n()) throw DimensionError("frobenius_inner: dimension mismatch");
  const auto pa = a.packed();
  const auto pb = b.packed();
  double diag = 0.0;
  double off = 0.0;
  const std::size_t n = a.n();
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t base = j * (j + 1) / 2;
    for (std::size_t i = 0; i < j; ++i) off += pa[base + i] * pb[base + i];
    diag += pa[base + j] * pb[base + j];
  }
  return diag + 2.0 * off;
}

inline double frobenius_norm(const SymMat& a) { return std::sqrt(frobenius_inner(a, a)); }

// -----------------------------------------------------------------------------
// Eigendecomposition
// -----------------------------------------------------------------------------

/// Eigenpairs in non-increasing eigenvalue order.
struct SpectralDecomp {
  Vector eigvals;
  std::vector<Vector> eigvecs;
  std::size_t rank_computed = 0;

  /// sum_i lambda_i u_i u_i^T over the stored pairs.
  SymMat reconstruct(std::size_t n) const {
    SymMat m(n);
    for (std::size_t i = 0; i < eigvals.size(); ++i) m.add_rank_one(eigvals[i], eigvecs[i]);
    return m;
  }
};

namespace detail {

// Householder reduction of a row-major symmetric matrix to tridiagonal form.
// On exit `a` holds the accumulated orthogonal transform, d the diagonal and
// e the subdiagonal (e[0] = 0). Follows the classic tred2 layout.
inline void householder_tridiagonalize(std::size_t n, std::vector<double>& a, Vector& d, Vector& e) {
  auto A = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) d[j] = A(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = A(i - 1, j);
        A(i, j) = 0.0;
        A(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        A(j, i) = f;
        g = e[j] + A(j, j) * f;
        for (std::size_t k = j + 1; k <= i - 1; ++k) {
          g += A(k, j) * d[k];
          e[k] += A(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k <= i - 1; ++k) A(k, j) -= (f * e[k] + g * d[k]);
        d[j] = A(i - 1, j);
        A(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  // Accumulate transformations.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    A(n - 1, i) = A(i, i);
    A(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = A(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += A(k, i + 1) * A(k, j);
        for (std::size_t k = 0; k <= i; ++k) A(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) A(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = A(n - 1, j);
    A(n - 1, j) = 0.0;
  }
  A(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit-shift QL on a symmetric tridiagonal matrix. `z` (row-major n*n)
// is updated in place so its columns become eigenvectors. Throws EigenError
// after `max_sweeps` QL sweeps on a single eigenvalue.
inline void tridiagonal_ql(std::size_t n, Vector& d, Vector& e, std::vector<double>& z,
                           int max_sweeps) {
  auto Z = [&](std::size_t i, std::size_t j) -> double& { return z[i * n + j]; };
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;

    if (m > l) {
      int sweeps = 0;
      do {
        if (++sweeps > max_sweeps) {
          throw EigenError("tridiagonal QL did not converge for eigenvalue " + std::to_string(l), d, e);
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          const std::size_t i = ii;
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (std::size_t k = 0; k < n; ++k) {
            h = Z(k, i + 1);
            Z(k, i + 1) = s * Z(k, i) + c * h;
            Z(k, i) = c * Z(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

// Sorts columns of z by descending eigenvalue with a stable sort.
inline SpectralDecomp sorted_decomp(std::size_t n, const Vector& d, const std::vector<double>& z,
                                    std::size_t keep) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
  SpectralDecomp out;
  keep = std::min(keep, d.size());
  out.eigvals.reserve(keep);
  out.eigvecs.reserve(keep);
  const std::size_t cols = d.size();
  for (std::size_t t = 0; t < keep; ++t) {
    const std::size_t c = order[t];
    out.eigvals.push_back(d[c]);
    Vector v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = z[k * cols + c];
    out.eigvecs.push_back(std::move(v));
  }
  out.rank_computed = keep;
  return out;
}

}  // namespace detail

/// Maximum QL sweeps per eigenvalue before sym_eig gives up.
inline constexpr int kMaxQlSweeps = 60;

/// Full symmetric eigendecomposition (Householder tridiagonalization followed
/// by implicit-shift QL). Eigenvalues come back non-increasing.
inline SpectralDecomp sym_eig(const SymMat& m) {
  const std::size_t n = m.n();
  if (n == 0) throw DimensionError("sym_eig: empty matrix");
  if (!m.all_finite()) throw EigenError("sym_eig: non-finite input", {}, {});
  if (n == 1) {
    SpectralDecomp out;
    out.eigvals = {m(0, 0)};
    out.eigvecs = {Vector{1.0}};
    out.rank_computed = 1;
    return out;
  }
  std::vector<double> a = m.to_dense();
  Vector d, e;
  detail::householder_tridiagonalize(n, a, d, e);
  detail::tridiagonal_ql(n, d, e, a, kMaxQlSweeps);
  return detail::sorted_decomp(n, d, a, n);
}

/// Eigenvalues and eigenvectors of a symmetric tridiagonal matrix given by
/// its diagonal and off-diagonal (off.size() == diag.size() - 1).
inline SpectralDecomp tridiagonal_eig(const Vector& diag, const Vector& off) {
  const std::size_t n = diag.size();
  if (n == 0) throw DimensionError("tridiagonal_eig: empty matrix");
  Vector d = diag;
  Vector e(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) e[i] = off[i - 1];
  std::vector<double> z(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
  if (n > 1) detail::tridiagonal_ql(n, d, e, z, kMaxQlSweeps);
  return detail::sorted_decomp(n, d, z, n);
}

// -----------------------------------------------------------------------------
// Lanczos
// -----------------------------------------------------------------------------

struct LanczosOptions {
  std::uint64_t seed = 0x5eed1a2c20ULL;
  int max_restarts = 8;
  /// Krylov dimension grows in blocks of this many steps between checks.
  std::size_t check_every = 5;
};

/// The r algebraically largest eigenpairs of the symmetric operator `matvec`
/// on R^n, via Lanczos with full reorthogonalization.
///
/// `matvec(x, y)` must write M x into y. A Ritz pair is accepted when its
/// residual |beta_j s_j| is below tol * max(1, |theta_1|); the Krylov space is
/// grown up to n, where the decomposition is exact. Breakdown restarts from a
/// fresh random vector orthogonal to the current basis.
template <class MatVec>
SpectralDecomp lanczos_top_r(MatVec&& matvec, std::size_t n, std::size_t r, double tol,
                             const LanczosOptions& opts = {}) {
  if (n == 0 || r == 0 || r > n) throw DimensionError("lanczos_top_r: need 1 <= r <= n");
  Rng rng(opts.seed);

  std::vector<Vector> basis;
  Vector alpha;
  Vector beta;  // beta[j] couples basis[j] and basis[j+1]
  basis.reserve(n);

  auto orthogonalize = [&](Vector& v) {
    // Two passes of classical Gram-Schmidt against the full basis.
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : basis) {
        const double c = dot(q, v);
        for (std::size_t i = 0; i < n; ++i) v[i] -= c * q[i];
      }
    }
  };

  int restarts = 0;
  auto fresh_vector = [&]() -> Vector {
    while (true) {
      Vector v(n);
      for (double& x : v) x = rng.normal();
      orthogonalize(v);
      const double nv = norm2(v);
      if (nv > 1e-8) {
        for (double& x : v) x /= nv;
        return v;
      }
      if (++restarts > opts.max_restarts) {
        throw EigenError("lanczos_top_r: exceeded restart budget", alpha, beta);
      }
    }
  };

  basis.push_back(fresh_vector());
  Vector w(n);
  double last_beta = 0.0;

  while (true) {
    const Vector& q = basis.back();
    matvec(std::span<const double>(q), std::span<double>(w));
    const double a = dot(q, w);
    alpha.push_back(a);
    orthogonalize(w);
    last_beta = norm2(w);

    const std::size_t j = basis.size();
    const bool full = j == n;
    const bool check = full || (j >= r && (j - r) % opts.check_every == 0);
    if (check) {
      SpectralDecomp ritz = tridiagonal_eig(alpha, beta);
      bool done = full;
      if (!done) {
        const double scale = std::max(1.0, std::abs(ritz.eigvals[0]));
        done = true;
        for (std::size_t i = 0; i < r; ++i) {
          if (std::abs(last_beta * ritz.eigvecs[i][j - 1]) > tol * scale) {
            done = false;
            break;
          }
        }
      }
      if (done) {
        SpectralDecomp out;
        const std::size_t keep = std::min(r, j);
        for (std::size_t i = 0; i < keep; ++i) {
          Vector u(n, 0.0);
          for (std::size_t k = 0; k < j; ++k) {
            const double c = ritz.eigvecs[i][k];
            for (std::size_t t = 0; t < n; ++t) u[t] += c * basis[k][t];
          }
          const double nu = norm2(u);
          for (double& x : u) x /= nu;
          out.eigvals.push_back(ritz.eigvals[i]);
          out.eigvecs.push_back(std::move(u));
        }
        out.rank_computed = keep;
        return out;
      }
    }

    // Breakdown threshold relative to the operator scale seen so far.
    double scale = 0.0;
    for (double x : alpha) scale = std::max(scale, std::abs(x));
    for (double x : beta) scale = std::max(scale, std::abs(x));
    if (last_beta <= 1e-12 * std::max(1.0, scale)) {
      beta.push_back(0.0);
      basis.push_back(fresh_vector());
    } else {
      beta.push_back(last_beta);
      Vector next(n);
      for (std::size_t i = 0; i < n; ++i) next[i] = w[i] / last_beta;
      orthogonalize(next);
      const double nn = norm2(next);
      for (double& x : next) x /= nn;
      basis.push_back(std::move(next));
    }
  }
}

/// Convenience overload for an explicit SymMat.
inline SpectralDecomp lanczos_top_r(const SymMat& m, std::size_t r, double tol,
                                    const LanczosOptions& opts = {}) {
  return lanczos_top_r([&m](std::span<const double> x, std::span<double> y) { m.multiply(x, y); },
                       m.n(), r, tol, opts);
}

}  // namespace tfpdhg
