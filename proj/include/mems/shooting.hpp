#pragma once

// Shooting for the radial ODE
//   u'' + (N-1)/r u' + λ f(r) / (1-u)^2 = 0,  u(0) = a,  u'(0) = 0,
// with bisection on λ until u(1) = 0. Independent of the finite-difference path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mems/errors.hpp"
#include "mems/problem.hpp"

namespace mems {

struct ShootingResult {
  double lambda = 0.0;
  double amplitude = 0.0;
  /// u(1) at the returned λ.
  double terminal = 0.0;
  std::vector<double> radii;
  std::vector<double> profile;
};

struct ShootingOptions {
  /// Integration starts here, seeded from the Taylor expansion at the axis.
  double start_radius = 1e-6;
  /// Bisection stops once the bracket is narrower than this (relative).
  double lambda_rel_tol = 1e-14;
  int max_bisections = 200;
};

namespace detail {

struct ShotState {
  double u;
  double du;
};

/// Fixed-step RK4 from r0 to 1; returns u(1) and optionally records the path.
inline double shoot(const ProblemSpec& spec, double amplitude, double lambda, int steps,
                    double r0, std::vector<double>* radii, std::vector<double>* values) {
  const int n = spec.dimension;
  const double f0 = profile_eval(spec, 0.0);
  const double c = lambda * f0 / ((1.0 - amplitude) * (1.0 - amplitude));
  ShotState y{amplitude, 0.0};
  if (spec.alpha == 0.0) {
    y.u = amplitude - c * r0 * r0 / (2.0 * n);
    y.du = -c * r0 / n;
  }
  auto rhs = [&](double r, const ShotState& s) {
    const double gap = 1.0 - s.u;
    const double rr = std::min(r, 1.0);
    return ShotState{s.du, -(n - 1.0) / r * s.du - lambda * profile_eval(spec, rr) / (gap * gap)};
  };
  const double h = (1.0 - r0) / steps;
  if (radii) {
    radii->assign(1, r0);
    values->assign(1, y.u);
  }
  for (int k = 0; k < steps; ++k) {
    const double r = r0 + k * h;
    const ShotState k1 = rhs(r, y);
    const ShotState k2 = rhs(r + 0.5 * h, {y.u + 0.5 * h * k1.u, y.du + 0.5 * h * k1.du});
    const ShotState k3 = rhs(r + 0.5 * h, {y.u + 0.5 * h * k2.u, y.du + 0.5 * h * k2.du});
    const ShotState k4 = rhs(r + h, {y.u + h * k3.u, y.du + h * k3.du});
    y.u += h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
    y.du += h / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
    if (radii) {
      radii->push_back(r + h);
      values->push_back(y.u);
    }
  }
  return y.u;
}

}  // namespace detail

/// For fixed u(0) = a, finds λ with u(1) = 0 by bisection over (0, 4λ*]
/// where λ* is the closed-form value (8 when that is not positive, N = 1).
/// u(1; λ) decreases in λ; every bisection midpoint is checked against this.
inline ShootingResult shooting_oracle(const ProblemSpec& spec, double amplitude, int steps,
                                      const ShootingOptions& opt = {}) {
  if (!(amplitude > 0.0 && amplitude < 1.0)) {
    throw DomainError("shooting_oracle: amplitude must lie in (0, 1)");
  }
  if (steps < 1000) throw DomainError("shooting_oracle: need at least 1000 steps");
  spec.validate();

  const double closed = exact_extremal(spec.dimension, spec.alpha).lambda_star;
  double lo = 0.0;
  double hi = closed > 0.0 ? 4.0 * closed : 8.0;
  const double r0 = opt.start_radius;
  double t_lo = amplitude;
  double t_hi = detail::shoot(spec, amplitude, hi, steps, r0, nullptr, nullptr);
  if (!(t_hi < 0.0)) {
    throw BracketError("shooting_oracle: u(1) does not change sign on the λ interval");
  }
  for (int it = 0; it < opt.max_bisections && hi - lo > opt.lambda_rel_tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double t_mid = detail::shoot(spec, amplitude, mid, steps, r0, nullptr, nullptr);
    if (!(t_mid <= t_lo && t_mid >= t_hi)) {
      throw BracketError("shooting_oracle: terminal value is not monotone in λ");
    }
    if (t_mid > 0.0) {
      lo = mid;
      t_lo = t_mid;
    } else {
      hi = mid;
      t_hi = t_mid;
    }
  }
  ShootingResult out;
  out.lambda = 0.5 * (lo + hi);
  out.amplitude = amplitude;
  out.terminal = detail::shoot(spec, amplitude, out.lambda, steps, r0, &out.radii, &out.profile);
  return out;
}

}  // namespace mems
