#pragma once

// Newton's method at fixed λ, minimal-branch sweeps and pull-in bracketing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mems/discretization.hpp"
#include "mems/errors.hpp"
#include "mems/mesh.hpp"
#include "mems/problem.hpp"
#include "mems/tridiagonal.hpp"

namespace mems {

struct Solution {
  /// Nodal values, u.back() == 0.
  std::vector<double> u;
  double lambda = 0.0;
  /// u(0), which is the maximum for radial solutions.
  double amplitude = 0.0;
  /// Scaled residual (see Discretization::scaled_norm) of the unregularized problem.
  double residual_norm = 0.0;
  int newton_iters = 0;
  /// Max-norm of every accepted Newton update, in order.
  std::vector<double> increment_norms;
};

struct NoConvergence {
  std::vector<double> last_iterate;
  int iterations = 0;
  double residual_norm = 0.0;
  std::string reason;
};

struct NewtonOptions {
  /// Bound on the max-norm of the final Newton update (and on the λ update
  /// in bordered variants).
  double tol = 1e-10;
  int max_iter = 50;
  /// Iterates are kept at 1 - u >= delta_reg.
  double delta_reg = 1e-6;
  int max_halvings = 30;
};

using NewtonResult = Outcome<Solution, NoConvergence>;

namespace detail {
inline void clamp_iterate(std::vector<double>& u, double delta_reg) {
  const double cap = 1.0 - delta_reg;
  for (auto& x : u) x = std::min(x, cap);
  u.back() = 0.0;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}
}  // namespace detail

/// Damped Newton iteration on the residual at fixed λ.
///
/// Each iterate is capped at u <= 1 - delta_reg, which is the regularized
/// nonlinearity (1-u)^{-2} -> delta_reg^{-2} evaluated at the capped point.
/// The update is halved while the scaled residual fails to decrease.
/// Converged once the max-norm of the Newton update drops to tol.
inline NewtonResult newton_solve(const Discretization& disc, double lambda,
                                 std::span<const double> u_init, const NewtonOptions& opt = {}) {
  if (!(lambda >= 0.0)) throw DomainError("newton_solve: λ must be >= 0");
  if (!(opt.tol > 0.0)) throw DomainError("newton_solve: tolerance must be positive");
  if (!(opt.delta_reg > 0.0 && opt.delta_reg < 0.5)) {
    throw DomainError("newton_solve: delta_reg must lie in (0, 0.5)");
  }
  if (u_init.size() != disc.mesh().size()) throw SizeError("newton_solve: bad initial guess size");
  if (*std::max_element(u_init.begin(), u_init.end()) >= 1.0) {
    throw DomainError("newton_solve: initial guess must satisfy max(u) < 1");
  }

  const std::size_t m = disc.unknowns();
  std::vector<double> u(u_init.begin(), u_init.end());
  detail::clamp_iterate(u, opt.delta_reg);
  auto r = disc.residual(u, lambda);
  double norm = disc.scaled_norm(r);
  std::vector<double> increments;

  auto converged = [&](int it) {
    Solution s;
    s.u = std::move(u);
    s.lambda = lambda;
    s.amplitude = s.u.front();
    s.residual_norm = norm;
    s.newton_iters = it;
    s.increment_norms = std::move(increments);
    return s;
  };

  for (int it = 0;; ++it) {
    if (it >= opt.max_iter) {
      return NoConvergence{std::move(u), it, norm, "iteration limit reached"};
    }

    std::vector<double> step;
    try {
      const TridiagonalLU lu(disc.jacobian(u, lambda));
      step.assign(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(m));
      for (auto& x : step) x = -x;
      lu.solve_in_place(step);
    } catch (const PivotError&) {
      return NoConvergence{std::move(u), it, norm, "singular Jacobian"};
    }

    // The Newton step estimates the error of the current iterate; a small
    // residual alone does not bound it on fine meshes.
    const double step_norm = detail::max_abs(step);
    if (step_norm <= opt.tol) {
      for (std::size_t i = 0; i < m; ++i) u[i] += step[i];
      detail::clamp_iterate(u, opt.delta_reg);
      r = disc.residual(u, lambda);
      norm = disc.scaled_norm(r);
      increments.push_back(step_norm);
      return converged(it + 1);
    }

    double t = 1.0;
    bool accepted = false;
    std::vector<double> trial(u.size());
    for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
      for (std::size_t i = 0; i < m; ++i) trial[i] = u[i] + t * step[i];
      trial[m] = 0.0;
      detail::clamp_iterate(trial, opt.delta_reg);
      auto r_trial = disc.residual(trial, lambda);
      const double n_trial = disc.scaled_norm(r_trial);
      // Near convergence the residual sits at its roundoff floor; a small
      // full step is taken even if it does not reduce it.
      if (n_trial < norm || (h == 0 && n_trial <= 2.0 * norm && step_norm < 1e-6)) {
        increments.push_back(t * step_norm);
        u.swap(trial);
        r = std::move(r_trial);
        norm = n_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) return NoConvergence{std::move(u), it, norm, "line search failed"};
  }
}

inline NewtonResult newton_solve(const RadialMesh& mesh, const ProblemSpec& spec, double lambda,
                                 std::span<const double> u_init, const NewtonOptions& opt = {}) {
  return newton_solve(Discretization(mesh, spec), lambda, u_init, opt);
}

struct MinimalSweep {
  std::vector<Solution> solutions;
  /// True when Newton failed before the end of the grid.
  bool truncated = false;
  /// Largest λ with a converged solution (NaN if none).
  double last_good_lambda = std::nan("");
  std::optional<double> failed_lambda;
};

/// Warm-started Newton sweep along an increasing λ grid starting from u ≡ 0.
/// Newton from below converges to the minimal solution for this convex
/// nonlinearity, and warm starts keep every iterate below it.
inline MinimalSweep minimal_branch(const Discretization& disc, std::span<const double> lambda_grid,
                                   const NewtonOptions& opt = {}) {
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (lambda_grid[i] < 0.0) throw DomainError("minimal_branch: λ must be >= 0");
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
      throw DomainError("minimal_branch: λ grid must be strictly increasing");
    }
  }
  MinimalSweep out;
  std::vector<double> guess(disc.mesh().size(), 0.0);
  for (double lam : lambda_grid) {
    auto res = newton_solve(disc, lam, guess, opt);
    if (!res) {
      out.truncated = true;
      out.failed_lambda = lam;
      break;
    }
    guess = res.value().u;
    out.last_good_lambda = lam;
    out.solutions.push_back(std::move(res).value());
  }
  return out;
}

inline MinimalSweep minimal_branch(const RadialMesh& mesh, const ProblemSpec& spec,
                                   std::span<const double> lambda_grid, const NewtonOptions& opt = {}) {
  return minimal_branch(Discretization(mesh, spec), lambda_grid, opt);
}

/// Bisection on Newton success between λ_lo (solvable) and λ_hi (not).
/// Returns the midpoint of the final bracket, an estimate of the fold value
/// of the minimal branch.
inline double pull_in_bisection(const Discretization& disc, double lambda_lo, double lambda_hi,
                                double tol_lambda, const NewtonOptions& opt = {}) {
  if (!(lambda_lo >= 0.0) || !(lambda_lo < lambda_hi)) {
    throw BracketError("pull_in_bisection: need 0 <= lambda_lo < lambda_hi");
  }
  if (!(tol_lambda > 0.0)) throw DomainError("pull_in_bisection: tolerance must be positive");

  constexpr int kWarmSteps = 16;
  std::vector<double> grid;
  for (int k = 1; k <= kWarmSteps; ++k) grid.push_back(lambda_lo * k / kWarmSteps);
  if (lambda_lo == 0.0) grid = {0.0};
  auto sweep = minimal_branch(disc, grid, opt);
  if (sweep.truncated) throw BracketError("pull_in_bisection: no solution at lambda_lo");
  std::vector<double> u_lo = sweep.solutions.back().u;

  if (newton_solve(disc, lambda_hi, u_lo, opt)) {
    throw BracketError("pull_in_bisection: Newton converged at lambda_hi");
  }
  double lo = lambda_lo;
  double hi = lambda_hi;
  while (hi - lo > tol_lambda) {
    const double mid = 0.5 * (lo + hi);
    auto res = newton_solve(disc, mid, u_lo, opt);
    if (res) {
      lo = mid;
      u_lo = std::move(res).value().u;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double pull_in_bisection(const RadialMesh& mesh, const ProblemSpec& spec, double lambda_lo,
                                double lambda_hi, double tol_lambda, const NewtonOptions& opt = {}) {
  return pull_in_bisection(Discretization(mesh, spec), lambda_lo, lambda_hi, tol_lambda, opt);
}

}  // namespace mems
