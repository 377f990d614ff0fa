#pragma once

// Graded radial mesh on [0, 1] with quadrature for the N-dimensional radial
// measure σ_N r^{N-1} dr and the dual-cell volumes used by the operator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "mems/errors.hpp"
#include "mems/problem.hpp"

namespace mems {

struct RadialMesh {
  int dimension = 2;
  double grading = 1.0;
  /// r_0 = 0 < r_1 < ... < r_M = 1.
  std::vector<double> nodes;
  /// ∫_B φ dx ≈ Σ w_i φ(r_i).
  std::vector<double> weights;
  /// Dual-cell volumes per unit solid angle, ∫ r^{N-1} dr over
  /// [r_{i-1/2}, r_{i+1/2}] (over [0, r_{1/2}] for i = 0). One per unknown, i < M.
  std::vector<double> cell_volumes;

  [[nodiscard]] std::size_t intervals() const { return nodes.size() - 1; }
  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// a^n - b^n for a >= b >= 0 without cancellation.
inline double pow_difference(double a, double b, int n) {
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += std::pow(a, k) * std::pow(b, n - 1 - k);
  return (a - b) * sum;
}

inline double int_pow(double x, int n) {
  double out = 1.0;
  for (int k = 0; k < n; ++k) out *= x;
  return out;
}

/// ∫_{lo}^{hi} ℓ_k(r) r^{N-1} dr for the Lagrange basis ℓ_k on the points
/// xs (at most three). The Gauss rule is exact for these integrands.
inline std::array<double, 3> product_weights(std::span<const double> xs, double lo, double hi,
                                             int dim) {
  const int npts = dim / 2 + 2;
  const auto [gx, gw] = gauss_legendre(npts);
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  std::array<double, 3> out{};
  for (int q = 0; q < npts; ++q) {
    const double r = mid + half * gx[q];
    const double rw = half * gw[q] * int_pow(r, dim - 1);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      double l = 1.0;
      for (std::size_t j = 0; j < xs.size(); ++j) {
        if (j != k) l *= (r - xs[j]) / (xs[k] - xs[j]);
      }
      out[k] += rw * l;
    }
  }
  return out;
}

}  // namespace detail

/// Nodes r_i = (i/M)^γ.
///
/// Quadrature weights integrate the piecewise-quadratic interpolant of φ
/// exactly against σ_N r^{N-1} over panels [r_{2j}, r_{2j+2}]; a panel whose
/// weights would turn negative (strong grading at the axis) falls back to the
/// piecewise-linear interpolant. An odd last interval uses the quadratic
/// through the last three nodes.
inline RadialMesh build_mesh(int intervals, double gamma, int dimension) {
  if (intervals < 16) throw SizeError("build_mesh: need at least 16 intervals");
  if (!(gamma >= 1.0)) throw DomainError("build_mesh: grading exponent must be >= 1");
  if (dimension < 1) throw DomainError("build_mesh: dimension must be >= 1");

  RadialMesh mesh;
  mesh.dimension = dimension;
  mesh.grading = gamma;
  const auto m = static_cast<std::size_t>(intervals);
  mesh.nodes.resize(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    const double s = static_cast<double>(i) / intervals;
    mesh.nodes[i] = gamma == 1.0 ? s : std::pow(s, gamma);
  }
  mesh.nodes[0] = 0.0;
  mesh.nodes[m] = 1.0;

  const auto& r = mesh.nodes;
  std::vector<double> w(m + 1, 0.0);
  const std::size_t paired = m - (m % 2);
  for (std::size_t j = 0; j + 2 <= paired; j += 2) {
    const double xs[3] = {r[j], r[j + 1], r[j + 2]};
    const auto pw = detail::product_weights(xs, r[j], r[j + 2], dimension);
    if (pw[0] >= 0.0 && pw[1] >= 0.0 && pw[2] >= 0.0) {
      for (std::size_t k = 0; k < 3; ++k) w[j + k] += pw[k];
    } else {
      for (std::size_t k = j; k < j + 2; ++k) {
        const double lx[2] = {r[k], r[k + 1]};
        const auto lw = detail::product_weights(lx, r[k], r[k + 1], dimension);
        w[k] += lw[0];
        w[k + 1] += lw[1];
      }
    }
  }
  if (m % 2 == 1) {
    const double xs[3] = {r[m - 2], r[m - 1], r[m]};
    const auto pw = detail::product_weights(xs, r[m - 1], r[m], dimension);
    for (std::size_t k = 0; k < 3; ++k) w[m - 2 + k] += pw[k];
  }
  const double sigma = sphere_area(dimension);
  for (auto& x : w) x *= sigma;
  mesh.weights = std::move(w);

  mesh.cell_volumes.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double right = 0.5 * (r[i] + r[i + 1]);
    const double left = i == 0 ? 0.0 : 0.5 * (r[i - 1] + r[i]);
    mesh.cell_volumes[i] = detail::pow_difference(right, left, dimension) / dimension;
  }
  return mesh;
}

/// Σ w_i values_i.
inline double quadrature(const RadialMesh& mesh, std::span<const double> values) {
  if (values.size() != mesh.size()) throw SizeError("quadrature: value count != node count");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += mesh.weights[i] * values[i];
  return sum;
}

/// du/dr at the nodes: three-point central differences inside, second-order
/// one-sided at r = 1, and 0 at the axis.
inline std::vector<double> radial_gradient(const RadialMesh& mesh, std::span<const double> u) {
  if (u.size() != mesh.size()) throw SizeError("radial_gradient: value count != node count");
  const auto& r = mesh.nodes;
  const std::size_t m = mesh.intervals();
  std::vector<double> g(m + 1, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    const double hm = r[i] - r[i - 1];
    const double hp = r[i + 1] - r[i];
    g[i] = (-hp / (hm * (hm + hp))) * u[i - 1] + ((hp - hm) / (hm * hp)) * u[i] +
           (hm / (hp * (hm + hp))) * u[i + 1];
  }
  const double h1 = r[m - 1] - r[m - 2];
  const double h2 = r[m] - r[m - 1];
  g[m] = (h2 / (h1 * (h1 + h2))) * u[m - 2] - ((h1 + h2) / (h1 * h2)) * u[m - 1] +
         ((h1 + 2.0 * h2) / (h2 * (h1 + h2))) * u[m];
  return g;
}

/// Samples φ(r) at every node.
template <class F>
std::vector<double> sample(const RadialMesh& mesh, F&& phi) {
  std::vector<double> out(mesh.size());
  std::transform(mesh.nodes.begin(), mesh.nodes.end(), out.begin(), std::forward<F>(phi));
  return out;
}

}  // namespace mems
