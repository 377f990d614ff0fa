#pragma once

// Conservative three-point discretization of the radial operator
//   -Δu = -(u'' + (N-1)/r u')
// on a RadialMesh, with u_M = 0 eliminated and the axis closed by symmetry.
//
// Row i balances the fluxes r^{N-1} u' through the dual-cell faces
// r_{i±1/2} = (r_i + r_{i±1})/2 against the cell volume V_i. At the axis the
// row reduces to 2N (u_0 - u_1) / r_1^2, which is the ghost-node closure
// u_{-1} = u_1 of Δu(0) = N u''(0). The scheme reproduces -Δ of quadratics
// exactly on any mesh, and V·(-Δ_h) is symmetric.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mems/errors.hpp"
#include "mems/mesh.hpp"
#include "mems/problem.hpp"
#include "mems/tridiagonal.hpp"

namespace mems {

/// Discrete -Δ_h on the unknowns u_0 … u_{M-1}.
inline TridiagonalOperator assemble_laplacian(const RadialMesh& mesh) {
  const std::size_t m = mesh.intervals();
  const int n = mesh.dimension;
  const auto& r = mesh.nodes;
  std::vector<double> kappa(m);  // face conductance at r_{i+1/2}
  for (std::size_t i = 0; i < m; ++i) {
    const double face = 0.5 * (r[i] + r[i + 1]);
    kappa[i] = detail::int_pow(face, n - 1) / (r[i + 1] - r[i]);
  }
  TridiagonalOperator op(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double v = mesh.cell_volumes[i];
    const double left = i == 0 ? 0.0 : kappa[i - 1];
    op.diag[i] = (left + kappa[i]) / v;
    if (i > 0) op.sub[i] = -left / v;
    if (i + 1 < m) op.sup[i] = -kappa[i] / v;
  }
  return op;
}

/// (-Δ_h u)_i for i < M, including the coupling of row M-1 to a nonzero u_M.
/// Entry M of the result is 0.
inline std::vector<double> negative_laplacian(const RadialMesh& mesh,
                                              std::span<const double> u) {
  if (u.size() != mesh.size()) throw SizeError("negative_laplacian: value count != node count");
  const auto op = assemble_laplacian(mesh);
  auto out = op.apply(u.first(mesh.intervals()));
  const std::size_t m = mesh.intervals();
  const auto& r = mesh.nodes;
  const double face = 0.5 * (r[m - 1] + r[m]);
  const double kappa = detail::int_pow(face, mesh.dimension - 1) / (r[m] - r[m - 1]);
  out[m - 1] -= kappa / mesh.cell_volumes[m - 1] * u[m];
  out.push_back(0.0);
  return out;
}

/// Mesh, problem and the λ-independent pieces assembled once: -Δ_h and the
/// nodal profile f(r_i).
class Discretization {
 public:
  Discretization(RadialMesh mesh, ProblemSpec spec)
      : mesh_(std::move(mesh)), spec_(std::move(spec)) {
    spec_.validate();
    if (mesh_.dimension != spec_.dimension) {
      throw DomainError("Discretization: mesh and problem dimensions differ");
    }
    laplacian_ = assemble_laplacian(mesh_);
    profile_.resize(mesh_.size());
    for (std::size_t i = 0; i < mesh_.size(); ++i) profile_[i] = profile_eval(spec_, mesh_.nodes[i]);
  }

  [[nodiscard]] const RadialMesh& mesh() const { return mesh_; }
  [[nodiscard]] const ProblemSpec& spec() const { return spec_; }
  [[nodiscard]] const TridiagonalOperator& laplacian() const { return laplacian_; }
  [[nodiscard]] std::span<const double> profile() const { return profile_; }
  /// Number of unknowns, M.
  [[nodiscard]] std::size_t unknowns() const { return mesh_.intervals(); }

  /// R_i = (-Δ_h u)_i - λ f(r_i) / (1 - u_i)^2 for i < M; R_M = 0.
  [[nodiscard]] std::vector<double> residual(std::span<const double> u, double lambda) const {
    check_nodal(u, "residual");
    const std::size_t m = unknowns();
    auto out = laplacian_.apply(u.first(m));
    for (std::size_t i = 0; i < m; ++i) {
      const double gap = 1.0 - u[i];
      if (!(gap > 0.0)) throw SingularityError("residual: 1 - u reached 0 at node " + std::to_string(i));
      out[i] -= lambda * profile_[i] / (gap * gap);
    }
    out.push_back(0.0);
    return out;
  }

  /// Single residual row, usable where other nodes touch the singularity.
  [[nodiscard]] double residual_row(std::span<const double> u, double lambda, std::size_t i) const {
    check_nodal(u, "residual_row");
    if (i >= unknowns()) return 0.0;
    double v = laplacian_.diag[i] * u[i] + laplacian_.sup[i] * u[i + 1];
    if (i > 0) v += laplacian_.sub[i] * u[i - 1];
    const double gap = 1.0 - u[i];
    if (!(gap > 0.0)) throw SingularityError("residual_row: 1 - u reached 0");
    return v - lambda * profile_[i] / (gap * gap);
  }

  /// -Δ_h - diag(2λ f / (1-u)^3).
  [[nodiscard]] TridiagonalOperator jacobian(std::span<const double> u, double lambda) const {
    check_nodal(u, "jacobian");
    TridiagonalOperator j = laplacian_;
    for (std::size_t i = 0; i < unknowns(); ++i) {
      const double gap = 1.0 - u[i];
      if (!(gap > 0.0)) throw SingularityError("jacobian: 1 - u reached 0 at node " + std::to_string(i));
      j.diag[i] -= 2.0 * lambda * profile_[i] / (gap * gap * gap);
    }
    return j;
  }

  /// ∂R/∂λ = -f / (1-u)^2 on the unknowns.
  [[nodiscard]] std::vector<double> lambda_derivative(std::span<const double> u) const {
    check_nodal(u, "lambda_derivative");
    std::vector<double> out(unknowns());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double gap = 1.0 - u[i];
      if (!(gap > 0.0)) throw SingularityError("lambda_derivative: 1 - u reached 0");
      out[i] = -profile_[i] / (gap * gap);
    }
    return out;
  }

  /// max_i |R_i| / (-Δ_h)_{ii}: the residual in units of u, independent of
  /// the local mesh width.
  [[nodiscard]] double scaled_norm(std::span<const double> r) const {
    double m = 0.0;
    for (std::size_t i = 0; i < unknowns(); ++i) m = std::max(m, std::abs(r[i]) / laplacian_.diag[i]);
    return m;
  }

 private:
  void check_nodal(std::span<const double> u, const char* who) const {
    if (u.size() != mesh_.size()) throw SizeError(std::string(who) + ": expected a nodal vector");
  }

  RadialMesh mesh_;
  ProblemSpec spec_;
  TridiagonalOperator laplacian_;
  std::vector<double> profile_;
};

inline std::vector<double> residual(const RadialMesh& mesh, const ProblemSpec& spec,
                                    std::span<const double> u, double lambda) {
  if (!u.empty() && u.back() != 0.0) throw DomainError("residual: u_M must vanish");
  return Discretization(mesh, spec).residual(u, lambda);
}

inline TridiagonalOperator assemble_jacobian(const RadialMesh& mesh, const ProblemSpec& spec,
                                             std::span<const double> u, double lambda) {
  return Discretization(mesh, spec).jacobian(u, lambda);
}

}  // namespace mems
