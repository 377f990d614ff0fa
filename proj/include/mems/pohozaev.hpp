#pragma once

// Pohozaev identity for radial solutions, the auxiliary functions g_λ, G_λ of
// the reduced problem, and star-shapedness certificates with affine fields.
//
// Writing v for a solution of -Δv = f(x, v) in the unit ball, v = 0 on the
// boundary, F(x, s) = ∫_0^s f(x, t) dt, and h a vector field, the identity reads
//   ∫ [div(h) F - a v f + <∇_x F, h>]
//     = ∫ [(div(h)/2 - a) |∇v|^2 - <Dh ∇v, ∇v>] + 1/2 ∫_{∂B} |∇v|^2 <h, ν>.
// For h = Ax + b and radial data everything reduces to one-dimensional
// integrals with c = tr(A)/N: the angular mean of x̂ᵀ A x̂ is c and b drops out.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mems/errors.hpp"
#include "mems/mesh.hpp"
#include "mems/problem.hpp"

namespace mems {

namespace detail {
inline double checked_gap(double u_min, double s, const char* who) {
  const double gap = 1.0 - u_min - s;
  if (!(gap > 0.0) || !(u_min < 1.0)) throw SingularityError(std::string(who) + ": 1 - u - s must be positive");
  return gap;
}
}  // namespace detail

/// g(u, s) = 1/(1-u-s)^2 - 1/(1-u)^2.
inline double g_lambda(double u_min, double s) {
  const double gap = detail::checked_gap(u_min, s, "g_lambda");
  const double c = 1.0 - u_min;
  return 1.0 / (gap * gap) - 1.0 / (c * c);
}

/// G(u, s) = 1/(1-u-s) - 1/(1-u) - s/(1-u)^2, the antiderivative of g in s.
inline double G_lambda(double u_min, double s) {
  const double gap = detail::checked_gap(u_min, s, "G_lambda");
  const double c = 1.0 - u_min;
  return 1.0 / gap - 1.0 / c - s / (c * c);
}

/// ∂G/∂u at fixed s, so that ∇_x G = (∂G/∂u) ∇u.
inline double dG_du_min(double u_min, double s) {
  const double gap = detail::checked_gap(u_min, s, "dG_du_min");
  const double c = 1.0 - u_min;
  return 1.0 / (gap * gap) - 1.0 / (c * c) - 2.0 * s / (c * c * c);
}

struct QuotientBounds {
  /// max |G/g| / (1-u-s).
  double value_quotient = 0.0;
  /// max |(∂G/∂u)/g - 1| / (1-u-s)^2, the deviation of ∇_x G / g from ∇u.
  double gradient_quotient = 0.0;
  std::size_t samples = 0;
  std::size_t skipped = 0;
};

/// Scans both quotients over all (u, s) pairs. Pairs with 1-u-s below the
/// guard are skipped; s must be positive so the 0/0 limit at s = 0 never occurs.
inline QuotientBounds quotient_bound_scan(std::span<const double> u_min,
                                          std::span<const double> s_grid, double guard = 1e-4) {
  for (double s : s_grid) {
    if (!(s > 0.0)) throw DomainError("quotient_bound_scan: s-grid must exclude s <= 0");
  }
  QuotientBounds out;
  for (double u : u_min) {
    for (double s : s_grid) {
      const double gap = 1.0 - u - s;
      if (!(gap >= guard)) {
        ++out.skipped;
        continue;
      }
      const double g = g_lambda(u, s);
      const double q1 = std::abs(G_lambda(u, s) / g) / gap;
      const double q2 = std::abs(dG_du_min(u, s) / g - 1.0) / (gap * gap);
      out.value_quotient = std::max(out.value_quotient, q1);
      out.gradient_quotient = std::max(out.gradient_quotient, q2);
      ++out.samples;
    }
  }
  return out;
}

/// Affine field h(x) = A x + b, A stored row-major.
struct AffineField {
  int dimension = 0;
  std::vector<double> A;
  std::vector<double> b;

  /// h(x) = x / N.
  static AffineField radial(int n) {
    AffineField f;
    f.dimension = n;
    f.A.assign(static_cast<std::size_t>(n * n), 0.0);
    for (int i = 0; i < n; ++i) f.A[static_cast<std::size_t>(i * n + i)] = 1.0 / n;
    f.b.assign(static_cast<std::size_t>(n), 0.0);
    return f;
  }

  [[nodiscard]] double trace() const {
    double t = 0.0;
    for (int i = 0; i < dimension; ++i) t += A[static_cast<std::size_t>(i * dimension + i)];
    return t;
  }

  void check() const {
    if (dimension < 1) throw DomainError("AffineField: dimension must be >= 1");
    const auto n = static_cast<std::size_t>(dimension);
    if (A.size() != n * n || b.size() != n) throw SizeError("AffineField: A must be NxN and b of length N");
  }
};

struct RadialOverN {};

using FieldChoice = std::variant<RadialOverN, AffineField>;

/// Nonlinearity of the identity as functions of (r, s): f, its antiderivative
/// F in s, and r ∂_r F at fixed s.
struct Nonlinearity {
  std::function<double(std::size_t node, double s)> f;
  std::function<double(std::size_t node, double s)> F;
  std::function<double(std::size_t node, double s)> r_dF;
};

struct PohozaevReport {
  double lhs_volume = 0.0;
  double rhs_volume = 0.0;
  double boundary_term = 0.0;
  double residual = 0.0;
  double relative_residual = 0.0;
  /// relative_residual > 0.2.
  bool coarse_mesh_warning = false;
};

inline constexpr double kCoarseMeshThreshold = 0.2;

/// Radial form of the identity for an arbitrary nonlinearity; `c` is tr(A)/N.
inline PohozaevReport pohozaev_identity(const RadialMesh& mesh, std::span<const double> v,
                                        const Nonlinearity& nl, double a, double c) {
  if (v.size() != mesh.size()) throw SizeError("pohozaev_identity: v must be nodal");
  const int n = mesh.dimension;
  const auto dv = radial_gradient(mesh, v);
  std::vector<double> lhs(mesh.size()), rhs(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const double s = v[i];
    lhs[i] = n * c * nl.F(i, s) - a * s * nl.f(i, s) + c * nl.r_dF(i, s);
    rhs[i] = (0.5 * n * c - a - c) * dv[i] * dv[i];
  }
  PohozaevReport rep;
  rep.lhs_volume = quadrature(mesh, lhs);
  rep.rhs_volume = quadrature(mesh, rhs);
  rep.boundary_term = 0.5 * c * sphere_area(n) * dv.back() * dv.back();
  rep.residual = rep.lhs_volume - rep.rhs_volume - rep.boundary_term;
  const double scale = std::max(std::abs(rep.lhs_volume), std::abs(rep.rhs_volume) + std::abs(rep.boundary_term));
  rep.relative_residual = scale > 0.0 ? std::abs(rep.residual) / scale : 0.0;
  rep.coarse_mesh_warning = rep.relative_residual > kCoarseMeshThreshold;
  return rep;
}

inline double field_ratio(const FieldChoice& field, int n) {
  if (std::holds_alternative<RadialOverN>(field)) return 1.0 / n;
  const auto& af = std::get<AffineField>(field);
  af.check();
  if (af.dimension != n) throw SizeError("pohozaev_residual: field dimension differs from N");
  return af.trace() / n;
}

/// Identity for a computed solution. With u_min empty, v is the full
/// solution and f = λ p(r)/(1-v)^2; otherwise v solves the reduced problem
/// around u_min and f = λ p(r) g(u_min, v).
inline PohozaevReport pohozaev_residual(const RadialMesh& mesh, const ProblemSpec& spec,
                                        double lambda, std::span<const double> v,
                                        std::span<const double> u_min, double a,
                                        const FieldChoice& field = RadialOverN{}) {
  spec.validate();
  if (mesh.dimension != spec.dimension) throw DomainError("pohozaev_residual: dimension mismatch");
  if (v.size() != mesh.size()) throw SizeError("pohozaev_residual: v must be nodal");
  const bool reduced = !u_min.empty();
  if (reduced && u_min.size() != mesh.size()) throw SizeError("pohozaev_residual: u_min must be nodal");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] + (reduced ? u_min[i] : 0.0) < 1.0)) {
      throw SingularityError("pohozaev_residual: max(v + u_min) must stay below 1");
    }
  }
  const double c = field_ratio(field, spec.dimension);

  std::vector<double> p(mesh.size()), rp(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    p[i] = profile_eval(spec, mesh.nodes[i]);
    rp[i] = profile_r_derivative(spec, mesh.nodes[i]);
  }
  Nonlinearity nl;
  if (!reduced) {
    nl.f = [&](std::size_t i, double s) { return lambda * p[i] / ((1.0 - s) * (1.0 - s)); };
    nl.F = [&](std::size_t i, double s) { return lambda * p[i] * (1.0 / (1.0 - s) - 1.0); };
    nl.r_dF = [&](std::size_t i, double s) { return lambda * rp[i] * (1.0 / (1.0 - s) - 1.0); };
    return pohozaev_identity(mesh, v, nl, a, c);
  }
  const auto du = radial_gradient(mesh, u_min);
  nl.f = [&](std::size_t i, double s) { return lambda * p[i] * g_lambda(u_min[i], s); };
  nl.F = [&](std::size_t i, double s) { return lambda * p[i] * G_lambda(u_min[i], s); };
  nl.r_dF = [&](std::size_t i, double s) {
    const double r = mesh.nodes[i];
    return lambda * (rp[i] * G_lambda(u_min[i], s) + p[i] * dG_du_min(u_min[i], s) * r * du[i]);
  };
  return pohozaev_identity(mesh, v, nl, a, c);
}

/// Largest eigenvalue of (A + Aᵀ)/2.
inline double mu_bar_affine(std::span<const double> A, int n) {
  if (n < 1 || A.size() != static_cast<std::size_t>(n * n)) throw SizeError("mu_bar_affine: A must be NxN");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m(i, j) = 0.5 * (A[static_cast<std::size_t>(i * n + j)] + A[static_cast<std::size_t>(j * n + i)]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

struct BoundarySample {
  std::vector<double> point;
  std::vector<double> normal;
};

enum class CertificateVerdict { UniquenessForSmallLambda, Inconclusive };

inline const char* to_string(CertificateVerdict v) {
  return v == CertificateVerdict::UniquenessForSmallLambda ? "uniqueness_for_small_lambda"
                                                           : "inconclusive";
}

struct StarShapeCertificate {
  AffineField field;
  double alpha = 0.0;
  double div_check = 0.0;
  bool div_ok = false;
  double mu_bar_sup = 0.0;
  double boundary_min_flux = 0.0;
  double M_bound = 0.0;
  CertificateVerdict verdict = CertificateVerdict::Inconclusive;
  /// Reasons for an inconclusive verdict.
  std::vector<std::string> notes;
};

inline constexpr double kDivergenceTolerance = 1e-12;
inline constexpr double kNormalTolerance = 1e-6;

/// Checks h = Ax + b against div(h) = 1, <h, ν> >= 0 on the sampled boundary
/// and sup μ̄ < 1/2. The verdict states only that the minimal solution is the
/// unique one for λ small enough; no threshold on λ is estimated.
inline StarShapeCertificate star_certificate(std::span<const BoundarySample> samples, int n,
                                             double alpha, const AffineField& field) {
  field.check();
  if (field.dimension != n) throw SizeError("star_certificate: field dimension differs from N");
  if (samples.empty()) throw SizeError("star_certificate: no boundary samples");
  StarShapeCertificate cert;
  cert.field = field;
  cert.alpha = alpha;
  cert.div_check = field.trace();
  cert.div_ok = std::abs(cert.div_check - 1.0) <= kDivergenceTolerance;
  cert.mu_bar_sup = mu_bar_affine(field.A, n);
  cert.M_bound = cert.mu_bar_sup;

  double min_flux = std::numeric_limits<double>::infinity();
  for (const auto& smp : samples) {
    if (smp.point.size() != static_cast<std::size_t>(n) || smp.normal.size() != static_cast<std::size_t>(n)) {
      throw SizeError("star_certificate: sample of wrong dimension");
    }
    double nn = 0.0;
    for (double x : smp.normal) nn += x * x;
    if (std::abs(std::sqrt(nn) - 1.0) > kNormalTolerance) {
      throw DomainError("star_certificate: boundary normal is not a unit vector");
    }
    double flux = 0.0;
    for (int i = 0; i < n; ++i) {
      double hi = field.b[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) hi += field.A[static_cast<std::size_t>(i * n + j)] * smp.point[static_cast<std::size_t>(j)];
      flux += hi * smp.normal[static_cast<std::size_t>(i)];
    }
    min_flux = std::min(min_flux, flux);
  }
  cert.boundary_min_flux = min_flux;

  if (!cert.div_ok) cert.notes.emplace_back("div(h) = tr(A) differs from 1");
  if (min_flux < 0.0) cert.notes.emplace_back("<h, nu> is negative at a boundary sample");
  if (!(cert.M_bound < 0.5)) cert.notes.emplace_back("M >= 1/2");
  if (!(n >= 3 || alpha > 0.0)) cert.notes.emplace_back("needs N >= 3 or alpha > 0");
  cert.verdict = cert.notes.empty() ? CertificateVerdict::UniquenessForSmallLambda
                                    : CertificateVerdict::Inconclusive;
  return cert;
}

/// One sample per line: N coordinates of the point, then N of the outward
/// normal. '#' starts a comment; blank lines are ignored.
inline std::vector<BoundarySample> parse_boundary_samples(std::string_view text, int n) {
  if (n < 1) throw DomainError("parse_boundary_samples: dimension must be >= 1");
  std::vector<BoundarySample> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::vector<double> vals;
    std::string tok;
    while (row >> tok) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ParseError("not a number: '" + tok + "'", lineno);
      vals.push_back(x);
    }
    if (vals.empty()) continue;
    if (vals.size() != static_cast<std::size_t>(2 * n)) {
      throw ParseError("expected " + std::to_string(2 * n) + " columns, found " + std::to_string(vals.size()), lineno);
    }
    BoundarySample s;
    s.point.assign(vals.begin(), vals.begin() + n);
    s.normal.assign(vals.begin() + n, vals.end());
    out.push_back(std::move(s));
  }
  return out;
}

/// Deterministic samples of the unit sphere (point = normal): the ±e_i and
/// `count` further points, evenly spaced on the circle for N = 2 and
/// normalized Gaussian draws from a fixed seed otherwise.
inline std::vector<BoundarySample> unit_sphere_samples(int n, int count) {
  if (n < 1 || count < 0) throw DomainError("unit_sphere_samples: bad arguments");
  std::vector<BoundarySample> out;
  for (int i = 0; i < n; ++i) {
    for (double sgn : {1.0, -1.0}) {
      std::vector<double> x(static_cast<std::size_t>(n), 0.0);
      x[static_cast<std::size_t>(i)] = sgn;
      out.push_back({x, x});
    }
  }
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < count; ++k) {
    std::vector<double> x(static_cast<std::size_t>(n));
    if (n == 2) {
      const double th = 2.0 * std::numbers::pi * (k + 0.5) / count;
      x = {std::cos(th), std::sin(th)};
    } else {
      double nn = 0.0;
      do {
        nn = 0.0;
        for (auto& xi : x) {
          xi = gauss(rng);
          nn += xi * xi;
        }
      } while (nn < 1e-12);
      for (auto& xi : x) xi /= std::sqrt(nn);
    }
    out.push_back({x, x});
  }
  return out;
}

}  // namespace mems
