#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tfpdhg/error.hpp"
#include "tfpdhg/linalg.hpp"
#include "tfpdhg/operators.hpp"
#include "tfpdhg/random.hpp"

namespace tfpdhg {

/// Generator provenance plus, where the generator knows one, a strictly
/// feasible primal point X0 and a dual pair (y0, S0) with C = A^T y0 + S0.
struct ProblemMeta {
  std::string generator = "user";
  std::uint64_t seed = 0;
  std::optional<SymMat> X0;
  std::optional<Vector> y0;
  std::optional<SymMat> S0;
};

/// min <C, X>  s.t.  A(X) = b,  X PSD.
struct SdpProblem {
  SymMat C;
  ConstraintMap map;
  Vector b;
  ProblemMeta meta;

  SdpProblem() = default;
  SdpProblem(SymMat c, ConstraintMap a, Vector rhs, ProblemMeta info = {})
      : C(std::move(c)), map(std::move(a)), b(std::move(rhs)), meta(std::move(info)) {
    if (C.n() != map.n()) throw DimensionError("SdpProblem: C and constraint dimensions differ");
    if (b.size() != map.m()) throw DimensionError("SdpProblem: b length differs from constraint count");
  }

  std::size_t n() const { return C.n(); }
  std::size_t m() const { return map.m(); }
};

// -----------------------------------------------------------------------------
// Random generation (RG)
// -----------------------------------------------------------------------------

namespace detail {

inline SymMat gaussian_sym(Rng& rng, std::size_t n) {
  SymMat a(n);
  // Entries of an i.i.d. normal matrix G, symmetrized as (G + G^T) / 2.
  Vector g(n * n);
  for (double& x : g) x = rng.normal();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = 0.5 * (g[i * n + j] + g[j * n + i]);
  return a;
}

// G G^T + shift * I for an i.i.d. normal n x n matrix G.
inline SymMat gaussian_gram_plus_shift(Rng& rng, std::size_t n, double shift) {
  Vector g(n * n);
  for (double& x : g) x = rng.normal();
  SymMat out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += g[i * n + k] * g[j * n + k];
      out(i, j) = s;
    }
  for (std::size_t i = 0; i < n; ++i) out(i, i) += shift;
  return out;
}

}  // namespace detail

/// Random instance with a known strictly feasible primal-dual pair.
inline SdpProblem gen_random(std::uint64_t seed, std::size_t n = 50, std::size_t m = 50) {
  if (n < 1 || m < 1) throw DimensionError("gen_random: need n >= 1 and m >= 1");
  Rng rng(seed);
  std::vector<SymMat> mats;
  mats.reserve(m);
  for (std::size_t i = 0; i < m; ++i) mats.push_back(detail::gaussian_sym(rng, n));
  ConstraintMap map(std::move(mats));

  SymMat x0 = detail::gaussian_gram_plus_shift(rng, n, 0.1);
  Vector y0(m);
  for (double& v : y0) v = rng.normal();
  SymMat s0 = detail::gaussian_gram_plus_shift(rng, n, 0.1);

  Vector b = apply_A(map, x0);
  SymMat c = apply_At(map, y0) + s0;

  ProblemMeta meta;
  meta.generator = "rg";
  meta.seed = seed;
  meta.X0 = std::move(x0);
  meta.y0 = std::move(y0);
  meta.S0 = std::move(s0);
  return SdpProblem(std::move(c), std::move(map), std::move(b), std::move(meta));
}

// -----------------------------------------------------------------------------
// Max-cut (MC)
// -----------------------------------------------------------------------------

using Edge = std::pair<std::size_t, std::size_t>;

/// L = sum over edges of (e_i - e_j)(e_i - e_j)^T.
inline SymMat graph_laplacian(std::size_t n, const std::vector<Edge>& edges) {
  SymMat l(n);
  for (auto [i, j] : edges) {
    if (i >= n || j >= n || i == j) throw DimensionError("graph_laplacian: invalid edge");
    l(i, i) += 1.0;
    l(j, j) += 1.0;
    l(i, j) -= 1.0;
  }
  return l;
}

/// min <L, X> (or <-L, X> when negated)  s.t.  diag(X) = 1,  X PSD.
inline SdpProblem maxcut_from_edges(std::size_t n, const std::vector<Edge>& edges,
                                    bool negate_objective = false) {
  SymMat c = graph_laplacian(n, edges);
  if (negate_objective) c *= -1.0;
  std::vector<SymMat> mats;
  mats.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SymMat e(n);
    e(i, i) = 1.0;
    mats.push_back(std::move(e));
  }
  ProblemMeta meta;
  meta.generator = "mc";
  return SdpProblem(std::move(c), ConstraintMap(std::move(mats)), Vector(n, 1.0), std::move(meta));
}

inline std::vector<Edge> cycle_graph(std::size_t n) {
  if (n < 3) throw DimensionError("cycle_graph: need n >= 3");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
  std::sort(edges.begin(), edges.end());
  return edges;
}

/// Uniformly sampled simple graph with exactly m_edges edges.
inline std::vector<Edge> random_graph(std::uint64_t seed, std::size_t n, std::size_t m_edges) {
  const std::size_t pairs = n * (n - 1) / 2;
  if (m_edges > pairs) {
    throw DimensionError("gen_maxcut: " + std::to_string(m_edges) + " edges exceed n(n-1)/2 = " +
                         std::to_string(pairs));
  }
  std::vector<Edge> all;
  all.reserve(pairs);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(i, j);
  Rng rng(seed);
  for (std::size_t k = 0; k < m_edges; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(pairs - k));
    std::swap(all[k], all[pick]);
  }
  all.resize(m_edges);
  std::sort(all.begin(), all.end());
  return all;
}

inline SdpProblem gen_maxcut(std::uint64_t seed, std::size_t n = 100, std::size_t m_edges = 100,
                             bool negate_objective = false) {
  if (n < 1) throw DimensionError("gen_maxcut: need n >= 1");
  SdpProblem p = maxcut_from_edges(n, random_graph(seed, n, m_edges), negate_objective);
  p.meta.seed = seed;
  return p;
}

// -----------------------------------------------------------------------------
// Sensor network localization (SNL)
// -----------------------------------------------------------------------------

struct SnlParams {
  std::size_t m_anchors = 10;
  std::size_t n_sensors = 50;
  double radius = 0.3;
  std::size_t degree = 5;
  std::size_t p = 2;
  int max_retries = 200;
};

struct SnlGroundTruth {
  struct SensorEdge {
    std::size_t i, j;  // i < j
    double d;
  };
  struct AnchorEdge {
    std::size_t k, j;  // anchor k, sensor j
    double d;
  };

  std::size_t p = 2;
  std::vector<Vector> anchors;
  std::vector<Vector> sensors;
  std::vector<SensorEdge> edges_xx;
  std::vector<AnchorEdge> edges_ax;

  /// Z* = [[I, X], [X^T, X^T X]] built from the true sensor positions.
  SymMat z_star() const {
    const std::size_t n = sensors.size();
    SymMat z(p + n);
    for (std::size_t s = 0; s < p; ++s) z(s, s) = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t s = 0; s < p; ++s) z(s, p + j) = sensors[j][s];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) z(p + i, p + j) = dot(sensors[i], sensors[j]);
    return z;
  }
};

namespace detail {

inline double distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Indices of at most `cap` nearest points within `radius`, ties broken by index.
inline std::vector<std::size_t> nearest_within(const Vector& from, const std::vector<Vector>& pts,
                                               double radius, std::size_t cap,
                                               std::optional<std::size_t> skip) {
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (skip && *skip == k) continue;
    const double d = distance(from, pts[k]);
    if (d < radius) cand.emplace_back(d, k);
  }
  std::sort(cand.begin(), cand.end());
  if (cand.size() > cap) cand.resize(cap);
  std::vector<std::size_t> out;
  for (auto& c : cand) out.push_back(c.second);
  return out;
}

}  // namespace detail

/// Sensor network localization feasibility SDP over Z in S^{p+n}.
///
/// Each sensor links to at most `degree` nearest sensors and `degree` nearest
/// anchors within `radius`. The top-left p x p block is pinned to I by
/// p(p+1)/2 linear equalities.
inline std::pair<SdpProblem, SnlGroundTruth> gen_snl(std::uint64_t seed, const SnlParams& prm = {}) {
  if (prm.p < 1) throw DimensionError("gen_snl: need p >= 1");
  if (!(prm.radius > 0.0)) throw DimensionError("gen_snl: need radius > 0");
  if (prm.n_sensors < 1) throw DimensionError("gen_snl: need at least one sensor");
  Rng rng(seed);
  const std::size_t p = prm.p;
  const std::size_t n = prm.n_sensors;

  for (int attempt = 0; attempt <= prm.max_retries; ++attempt) {
    SnlGroundTruth truth;
    truth.p = p;
    auto draw = [&](std::size_t count) {
      std::vector<Vector> pts(count, Vector(p));
      for (auto& v : pts)
        for (double& x : v) x = rng.uniform();
      return pts;
    };
    truth.anchors = draw(prm.m_anchors);
    truth.sensors = draw(n);

    std::set<Edge> xx;
    std::set<Edge> ax;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : detail::nearest_within(truth.sensors[i], truth.sensors, prm.radius, prm.degree, i))
        xx.emplace(std::min(i, j), std::max(i, j));
      for (std::size_t k : detail::nearest_within(truth.sensors[i], truth.anchors, prm.radius, prm.degree, {}))
        ax.emplace(k, i);
    }

    std::vector<bool> touched(n, false);
    for (auto [i, j] : xx) touched[i] = touched[j] = true;
    for (auto [k, j] : ax) touched[j] = true;
    if (!std::all_of(touched.begin(), touched.end(), [](bool t) { return t; })) continue;

    for (auto [i, j] : xx)
      truth.edges_xx.push_back({i, j, detail::distance(truth.sensors[i], truth.sensors[j])});
    for (auto [k, j] : ax)
      truth.edges_ax.push_back({k, j, detail::distance(truth.anchors[k], truth.sensors[j])});

    const std::size_t dim = p + n;
    std::vector<SymMat> mats;
    Vector b;
    for (const auto& e : truth.edges_xx) {
      Vector v(dim, 0.0);
      v[p + e.i] = 1.0;
      v[p + e.j] = -1.0;
      mats.push_back(SymMat::outer(v));
      b.push_back(e.d * e.d);
    }
    for (const auto& e : truth.edges_ax) {
      Vector v(dim, 0.0);
      for (std::size_t s = 0; s < p; ++s) v[s] = truth.anchors[e.k][s];
      v[p + e.j] = -1.0;
      mats.push_back(SymMat::outer(v));
      b.push_back(e.d * e.d);
    }
    for (std::size_t s = 0; s < p; ++s) {
      for (std::size_t t = s; t < p; ++t) {
        SymMat e(dim);
        // <E_st, Z> = Z_st for the symmetric elementary matrix.
        e(s, t) = (s == t) ? 1.0 : 0.5;
        mats.push_back(std::move(e));
        b.push_back(s == t ? 1.0 : 0.0);
      }
    }

    ProblemMeta meta;
    meta.generator = "snl";
    meta.seed = seed;
    meta.X0 = truth.z_star();
    SdpProblem problem(SymMat(dim), ConstraintMap(std::move(mats)), std::move(b), std::move(meta));
    return {std::move(problem), std::move(truth)};
  }
  throw Error("gen_snl: could not generate a geometry without isolated sensors after " +
              std::to_string(prm.max_retries) + " retries");
}

inline std::pair<SdpProblem, SnlGroundTruth> gen_snl(std::uint64_t seed, std::size_t m_anchors,
                                                     std::size_t n_sensors, double radius = 0.3,
                                                     std::size_t degree = 5, std::size_t p = 2) {
  SnlParams prm;
  prm.m_anchors = m_anchors;
  prm.n_sensors = n_sensors;
  prm.radius = radius;
  prm.degree = degree;
  prm.p = p;
  return gen_snl(seed, prm);
}

}  // namespace tfpdhg
