#pragma once

// Eigenvalues of the linearized operator L = -Δ - 2λ f / (1-u)^3 restricted to
// radial functions: symmetrization, Sturm counts, bisection and inverse iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mems/discretization.hpp"
#include "mems/errors.hpp"
#include "mems/mesh.hpp"
#include "mems/problem.hpp"
#include "mems/tridiagonal.hpp"

namespace mems {

struct SymmetricTridiagonal {
  std::vector<double> diag;
  /// off[i] couples i and i+1; size n-1.
  std::vector<double> off;

  [[nodiscard]] std::size_t size() const { return diag.size(); }

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = diag[i] * x[i];
      if (i > 0) v += off[i - 1] * x[i - 1];
      if (i + 1 < n) v += off[i] * x[i + 1];
      y[i] = v;
    }
    return y;
  }

  [[nodiscard]] TridiagonalOperator as_operator(double shift = 0.0) const {
    TridiagonalOperator t(size());
    for (std::size_t i = 0; i < size(); ++i) {
      t.diag[i] = diag[i] - shift;
      if (i > 0) t.sub[i] = off[i - 1];
      if (i + 1 < size()) t.sup[i] = off[i];
    }
    return t;
  }
};

/// V^{1/2} J V^{-1/2} for the cell volumes V of the mesh. Because V·(-Δ_h)
/// is symmetric the result is symmetric and has the spectrum of J.
inline SymmetricTridiagonal symmetrize(const TridiagonalOperator& j,
                                       std::span<const double> volumes) {
  const std::size_t n = j.size();
  if (volumes.size() != n) throw SizeError("symmetrize: volume count != operator size");
  SymmetricTridiagonal s;
  s.diag = j.diag;
  s.off.resize(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(volumes[i] > 0.0 && volumes[i + 1] > 0.0)) {
      throw SingularityError("symmetrize: vanishing cell volume");
    }
    s.off[i] = j.sup[i] * std::sqrt(volumes[i] / volumes[i + 1]);
  }
  return s;
}

inline SymmetricTridiagonal symmetrize(const Discretization& disc, std::span<const double> u,
                                       double lambda) {
  return symmetrize(disc.jacobian(u, lambda), disc.mesh().cell_volumes);
}

inline SymmetricTridiagonal symmetrize(const RadialMesh& mesh, const ProblemSpec& spec,
                                       std::span<const double> u, double lambda) {
  return symmetrize(Discretization(mesh, spec), u, lambda);
}

/// Number of eigenvalues strictly below mu, from the signs of the pivots of
/// the LDLᵀ factorization of T - mu I. A pivot that vanishes numerically is
/// replaced by +pivmin, so an eigenvalue equal to mu is not counted.
inline int sturm_count(const SymmetricTridiagonal& t, double mu) {
  const std::size_t n = t.size();
  double emax = 1.0;
  for (double e : t.off) emax = std::max(emax, e * e);
  const double pivmin = std::numeric_limits<double>::min() * emax;
  int count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    d = (t.diag[i] - mu) - (i > 0 ? t.off[i - 1] * t.off[i - 1] / d : 0.0);
    if (std::abs(d) < pivmin) d = pivmin;
    if (d < 0.0) ++count;
  }
  return count;
}

struct SpectrumResult {
  /// μ_1 <= μ_2 <= … <= μ_k.
  std::vector<double> eigenvalues;
  /// Unit eigenvectors of the symmetrized operator (empty unless requested).
  std::vector<std::vector<double>> eigenvectors;
  /// ‖Tφ - μφ‖ / ‖φ‖ per pair (empty unless vectors were requested).
  std::vector<double> residuals;
  /// sturm_count(T, 0).
  int morse_index_radial = 0;
  int requested = 0;
};

struct EigenOptions {
  /// Bisection stops at width tol * max(1, |μ|).
  double tol = 1e-10;
  bool with_vectors = true;
  int max_bisections = 400;
};

/// Gershgorin interval containing the whole spectrum.
inline std::pair<double, double> gershgorin_bounds(const SymmetricTridiagonal& t) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    double rad = 0.0;
    if (i > 0) rad += std::abs(t.off[i - 1]);
    if (i + 1 < n) rad += std::abs(t.off[i]);
    lo = std::min(lo, t.diag[i] - rad);
    hi = std::max(hi, t.diag[i] + rad);
  }
  return {lo, hi};
}

/// The k smallest eigenvalues by Sturm bisection, each followed by inverse
/// iteration for its eigenvector.
inline SpectrumResult smallest_eigenvalues(const SymmetricTridiagonal& t, int k,
                                           const EigenOptions& opt = {}) {
  if (k < 1 || k > 10) throw DomainError("smallest_eigenvalues: k must lie in [1, 10]");
  const std::size_t n = t.size();
  if (static_cast<std::size_t>(k) > n) throw SizeError("smallest_eigenvalues: k exceeds size");

  SpectrumResult out;
  out.requested = k;
  out.morse_index_radial = sturm_count(t, 0.0);

  auto [glo, ghi] = gershgorin_bounds(t);
  const double pad = 1e-12 * std::max({1.0, std::abs(glo), std::abs(ghi)});
  glo -= pad;
  ghi += pad;
  double floor = glo;
  for (int j = 1; j <= k; ++j) {
    double lo = floor;
    double hi = ghi;
    for (int it = 0; it < opt.max_bisections; ++it) {
      const double width = hi - lo;
      const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
      if (width <= opt.tol * scale) break;
      const double mid = lo + 0.5 * width;
      if (mid <= lo || mid >= hi) break;
      if (sturm_count(t, mid) >= j) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    const double mu = 0.5 * (lo + hi);
    out.eigenvalues.push_back(mu);
    floor = lo;
  }

  if (opt.with_vectors) {
    for (int j = 0; j < k; ++j) {
      const double mu = out.eigenvalues[static_cast<std::size_t>(j)];
      const TridiagonalLU lu(t.as_operator(mu), false);
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * std::sin(0.7 * static_cast<double>(i) + j);
      double res = std::numeric_limits<double>::infinity();
      for (int it = 0; it < 3; ++it) {
        lu.solve_in_place(x);
        double nrm = 0.0;
        for (double v : x) nrm += v * v;
        nrm = std::sqrt(nrm);
        for (auto& v : x) v /= nrm;
        const auto tx = t.apply(x);
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) r2 += (tx[i] - mu * x[i]) * (tx[i] - mu * x[i]);
        res = std::sqrt(r2);
        if (res <= 1e-8 * std::max(1.0, std::abs(mu))) break;
      }
      out.eigenvectors.push_back(std::move(x));
      out.residuals.push_back(res);
    }
  }
  return out;
}

/// Radial Morse index: eigenvalues of the symmetrized linearization below 0.
inline int morse_index_radial(const Discretization& disc, std::span<const double> u, double lambda) {
  return sturm_count(symmetrize(disc, u, lambda), 0.0);
}

inline int morse_index_radial(const RadialMesh& mesh, const ProblemSpec& spec,
                              std::span<const double> u, double lambda) {
  return morse_index_radial(Discretization(mesh, spec), u, lambda);
}

}  // namespace mems
