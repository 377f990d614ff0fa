#pragma once

// Pseudo-arclength continuation of the radial solution curve (λ(t), u(t))
// from (0, 0) towards u(0) -> 1, with turning-point detection, radial Morse
// indices along the way, an amplitude-parameterized cross-check and the
// extraction of second solutions from the upper sub-branch.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mems/discretization.hpp"
#include "mems/errors.hpp"
#include "mems/mesh.hpp"
#include "mems/problem.hpp"
#include "mems/solver.hpp"
#include "mems/spectrum.hpp"
#include "mems/tridiagonal.hpp"

namespace mems {

struct ContinuationOptions {
  double ds0 = 0.02;
  double amplitude_max = 0.999;
  int max_steps = 20000;
  /// Full nodal vectors are kept every thin_every-th point and at folds.
  int thin_every = 10;
  NewtonOptions newton;
  int max_corrector_iter = 12;
  double grow = 1.3;
  /// Minimum cosine between consecutive unit tangents.
  double min_tangent_cos = 0.9;
  /// Eigenvalues stored per point (raised to index + 2 where needed).
  int eigen_count = 3;
  double eigen_tol = 1e-10;
  /// Stop once this many turning points were passed (0: never).
  int stop_after_folds = 0;
  /// Minimum excursion of λ on both sides of a turning point.
  double hysteresis = 1e-9;
  /// Turning points are located to this fraction of the chord they lie on.
  bool refine_folds = true;
  double fold_tol = 1e-8;
  /// Stop once the axis core ((1 - u(0))^3 / (λ h(0)))^{1/(2+α)} is narrower
  /// than this many first cells (0: never).
  double min_core_cells = 1.0;
};

struct BranchPoint {
  int step = 0;
  /// Accumulated pseudo-arclength.
  double t = 0.0;
  double lambda = 0.0;
  double amplitude = 0.0;
  double mu1 = 0.0;
  int morse_index_radial = 0;
  bool is_fold = false;
  /// Smallest eigenvalues of the linearization, ascending.
  std::vector<double> mu;
  /// Nodal solution; empty for thinned points.
  std::vector<double> u;
};

struct Fold {
  /// Branch point closest to the turning point.
  std::size_t index = 0;
  /// Branch point where the sampled λ is extremal.
  std::size_t extremum = 0;
  /// True when (t, λ, amplitude, mu_critical) come from localize_fold.
  bool refined = false;
  /// Vertex of the quadratic through the three points around the extremum.
  double t = 0.0;
  double lambda = 0.0;
  double amplitude = 0.0;
  /// Misfit of that quadratic at the next points outward (0 if unavailable).
  double fit_residual = 0.0;
  /// +1 for a maximum of λ, -1 for a minimum.
  int direction = 0;
  int index_before = 0;
  int index_after = 0;
  /// Eigenvalue μ_{m+1} (m = index_before) at the fold point; it crosses 0 here.
  double mu_critical = 0.0;
  /// Largest change of that eigenvalue to a neighbouring branch point.
  double mu_spacing = 0.0;
  /// Change of that eigenvalue across the final localization bracket.
  double mu_tolerance = 0.0;
};

/// Unresolved: the mesh no longer resolves the layer at the axis. Raised when
/// u(0) stops increasing, the Morse index drops, or the core is narrower than
/// `min_core_cells` first cells.
enum class TraceStatus { Completed, StepsExhausted, Stalled, FoldLimit, Unresolved };

inline const char* to_string(TraceStatus s) {
  switch (s) {
    case TraceStatus::Completed: return "completed";
    case TraceStatus::StepsExhausted: return "steps_exhausted";
    case TraceStatus::Stalled: return "stalled";
    case TraceStatus::FoldLimit: return "fold_limit";
    case TraceStatus::Unresolved: return "unresolved";
  }
  return "?";
}

struct Branch {
  std::vector<BranchPoint> points;
  std::vector<Fold> folds;
  TraceStatus status = TraceStatus::Completed;
  int dimension = 0;
  double alpha = 0.0;
  int mesh_intervals = 0;
  double grading = 1.0;
  ContinuationOptions options;
  /// Smallest step size used.
  double min_ds = 0.0;
};

/// Turning point of a sampled λ sequence.
struct FoldLocation {
  std::size_t index = 0;
  int direction = 0;
  double t = 0.0;
  double lambda = 0.0;
  double fit_residual = 0.0;
};

namespace detail {

/// Quadratic through (x[i], y[i]), i = 0..2, as coefficients about x[1].
struct LocalQuadratic {
  double x1, a, b, c;
  [[nodiscard]] double operator()(double x) const {
    const double d = x - x1;
    return (a * d + b) * d + c;
  }
};

inline LocalQuadratic fit_quadratic(double x0, double x1, double x2, double y0, double y1,
                                    double y2) {
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  // Derivative at x1 of the interpolant.
  const double b = d01 + a * (x1 - x0);
  return {x1, a, b, y1};
}

}  // namespace detail

/// Turning points of λ(t): zigzag scan that only accepts an extremum once λ
/// has moved by at least `hysteresis` on both sides. The turning λ is refined
/// by the vertex of the quadratic through the three nearest samples.
inline std::vector<FoldLocation> detect_folds(std::span<const double> t,
                                              std::span<const double> lambda, double hysteresis) {
  if (t.size() != lambda.size()) throw SizeError("detect_folds: t and λ differ in length");
  if (hysteresis < 0.0) throw DomainError("detect_folds: hysteresis must be >= 0");
  std::vector<FoldLocation> out;
  const std::size_t n = lambda.size();
  if (n < 3) return out;

  auto moved = [&](double delta) { return hysteresis > 0.0 ? delta >= hysteresis : delta > 0.0; };
  int dir = 0;
  std::size_t ext = 0;
  std::size_t lo_idx = 0, hi_idx = 0;
  std::vector<std::pair<std::size_t, int>> extrema;
  for (std::size_t i = 1; i < n; ++i) {
    if (dir == 0) {
      if (lambda[i] > lambda[hi_idx]) hi_idx = i;
      if (lambda[i] < lambda[lo_idx]) lo_idx = i;
      if (moved(lambda[i] - lambda[lo_idx]) && i == hi_idx) {
        dir = +1;
        ext = i;
      } else if (moved(lambda[hi_idx] - lambda[i]) && i == lo_idx) {
        dir = -1;
        ext = i;
      }
      continue;
    }
    if (dir > 0) {
      if (lambda[i] > lambda[ext]) {
        ext = i;
      } else if (moved(lambda[ext] - lambda[i])) {
        extrema.emplace_back(ext, +1);
        dir = -1;
        ext = i;
      }
    } else {
      if (lambda[i] < lambda[ext]) {
        ext = i;
      } else if (moved(lambda[i] - lambda[ext])) {
        extrema.emplace_back(ext, -1);
        dir = +1;
        ext = i;
      }
    }
  }

  for (auto [k, d] : extrema) {
    FoldLocation f;
    f.index = k;
    f.direction = d;
    f.t = t[k];
    f.lambda = lambda[k];
    if (k >= 1 && k + 1 < n) {
      const auto q = detail::fit_quadratic(t[k - 1], t[k], t[k + 1], lambda[k - 1], lambda[k],
                                           lambda[k + 1]);
      if (q.a != 0.0) {
        const double tv = std::clamp(t[k] - q.b / (2.0 * q.a), t[k - 1], t[k + 1]);
        f.t = tv;
        f.lambda = q(tv);
      }
      double misfit = 0.0;
      if (k >= 2) misfit = std::max(misfit, std::abs(q(t[k - 2]) - lambda[k - 2]));
      if (k + 2 < n) misfit = std::max(misfit, std::abs(q(t[k + 2]) - lambda[k + 2]));
      f.fit_residual = misfit;
    }
    out.push_back(f);
  }
  return out;
}

/// Fold records for a traced branch, including the Morse index change and
/// the critical eigenvalue at each turning point. An extremum of λ across
/// which the radial Morse index does not change is roundoff on a flat stretch
/// of the curve, not a turning point, and is dropped.
inline std::vector<Fold> detect_folds(const Branch& branch, double hysteresis) {
  const auto& pts = branch.points;
  if (pts.size() < 3) throw SizeError("detect_folds: branch needs at least 3 points");
  std::vector<double> t(pts.size()), lam(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t[i] = pts[i].t;
    lam[i] = pts[i].lambda;
  }
  std::vector<Fold> folds;
  for (const auto& loc : detect_folds(t, lam, hysteresis)) {
    Fold f;
    f.t = loc.t;
    f.lambda = loc.lambda;
    f.direction = loc.direction;
    f.fit_residual = loc.fit_residual;
    const std::size_t k = loc.index;
    f.index = k;
    f.extremum = k;
    f.amplitude = pts[k].amplitude;
    if (k >= 1 && k + 1 < pts.size()) {
      const auto qa = detail::fit_quadratic(t[k - 1], t[k], t[k + 1], pts[k - 1].amplitude,
                                            pts[k].amplitude, pts[k + 1].amplitude);
      f.amplitude = qa(loc.t);
      f.index_before = pts[k - 1].morse_index_radial;
      f.index_after = pts[k + 1].morse_index_radial;
      std::size_t nearest = k;
      for (std::size_t j : {k - 1, k + 1}) {
        if (std::abs(t[j] - loc.t) < std::abs(t[nearest] - loc.t)) nearest = j;
      }
      f.index = nearest;
      const auto m = static_cast<std::size_t>(std::min(f.index_before, f.index_after));
      auto mu_at = [&](std::size_t j) {
        return m < pts[j].mu.size() ? pts[j].mu[m] : std::nan("");
      };
      f.mu_critical = mu_at(nearest);
      double spacing = 0.0;
      if (nearest >= 1) spacing = std::max(spacing, std::abs(mu_at(nearest) - mu_at(nearest - 1)));
      if (nearest + 1 < pts.size()) {
        spacing = std::max(spacing, std::abs(mu_at(nearest + 1) - mu_at(nearest)));
      }
      f.mu_spacing = spacing;
    } else {
      f.index_before = f.index_after = pts[k].morse_index_radial;
    }
    if (f.index_before == f.index_after) continue;
    folds.push_back(f);
  }
  return folds;
}

namespace detail {

/// Inner product on (u, λ) used by the arclength constraint:
///   s^2 [ (1/M) Σ u_i v_i + u_0 v_0 + λ μ ],   s = 1 / (1 - u_0).
/// The scale s makes equal steps cover equal ratios of 1 - u(0), which is
/// how the branch approaches the singular solution.
struct ArcMetric {
  double scale2 = 1.0;
  double node_weight = 1.0;

  [[nodiscard]] double dot(std::span<const double> x, double xl, std::span<const double> y,
                           double yl) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return scale2 * (node_weight * s + x[0] * y[0] + xl * yl);
  }
  /// Row vector c with c·(du, dλ) = dot(τ, (du, dλ)).
  void row(std::span<const double> tu, double tl, std::vector<double>& cu, double& cl) const {
    cu.resize(tu.size());
    for (std::size_t i = 0; i < tu.size(); ++i) cu[i] = scale2 * node_weight * tu[i];
    cu[0] += scale2 * tu[0];
    cl = scale2 * tl;
  }
};

struct Tangent {
  std::vector<double> u;  // on the unknowns
  double lambda = 0.0;
};

inline void normalize(Tangent& tau, const ArcMetric& metric) {
  const double nrm = std::sqrt(metric.dot(tau.u, tau.lambda, tau.u, tau.lambda));
  for (auto& x : tau.u) x /= nrm;
  tau.lambda /= nrm;
}

inline ArcMetric metric_at(double amplitude, std::size_t unknowns) {
  ArcMetric m;
  const double gap = 1.0 - amplitude;
  m.scale2 = 1.0 / (gap * gap);
  m.node_weight = 1.0 / static_cast<double>(unknowns);
  return m;
}


/// Corrector for the constraint c·(u - u_base) + c_λ (λ - λ_base) = ds,
/// starting from (un, ln). Returns the iteration count or -1 on failure.
inline int correct(const Discretization& disc, std::span<const double> u_base, double l_base,
                   std::span<const double> cu, double cl, double ds, std::vector<double>& un,
                   double& ln, const ContinuationOptions& opt) {
  const std::size_t m = disc.unknowns();
  std::vector<double> du, rhs;
  double prev_norm = std::numeric_limits<double>::infinity();
  for (int iters = 0;; ++iters) {
    if (*std::max_element(un.begin(), un.end()) >= 1.0 - opt.newton.delta_reg) return -1;
    auto r = disc.residual(un, ln);
    const double norm = disc.scaled_norm(r);
    if (iters >= opt.max_corrector_iter || (iters >= 2 && norm > 2.0 * prev_norm)) return -1;
    prev_norm = norm;
    double g = -ds;
    for (std::size_t i = 0; i < m; ++i) g += cu[i] * (un[i] - u_base[i]);
    g += cl * (ln - l_base);
    rhs.assign(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(m));
    for (auto& x : rhs) x = -x;
    double dl = 0.0;
    try {
      const BorderedTridiagonalLU lu(disc.jacobian(un, ln), disc.lambda_derivative(un), cu, cl);
      lu.solve(rhs, -g, du, dl);
    } catch (const Error&) {
      return -1;
    }
    for (std::size_t i = 0; i < m; ++i) un[i] += du[i];
    ln += dl;
    if (!std::isfinite(ln)) return -1;
    if (std::max(detail::max_abs(du), std::abs(dl)) <= opt.newton.tol) return iters + 1;
  }
}

/// Unit tangent at (u, λ) oriented by c·τ = 1 > 0; optionally returns J.
inline bool tangent_at(const Discretization& disc, std::span<const double> u, double l,
                       std::span<const double> cu, double cl, const ArcMetric& metric, Tangent& tau,
                       TridiagonalOperator* jac_out = nullptr) {
  try {
    auto jac = disc.jacobian(u, l);
    const BorderedTridiagonalLU lu(jac, disc.lambda_derivative(u), cu, cl);
    std::vector<double> zero(disc.unknowns(), 0.0);
    lu.solve(zero, 1.0, tau.u, tau.lambda);
    normalize(tau, metric);
    if (jac_out != nullptr) *jac_out = std::move(jac);
    return std::isfinite(tau.lambda);
  } catch (const Error&) {
    return false;
  }
}

}  // namespace detail

/// Locates a turning point between the branch points on either side of the
/// sampled extremum. Along the chord between them, X(s) solves the system
/// with the constraint <d, X - X_before> = s; the λ-component of the tangent
/// changes sign at the fold and is bisected until the bracket is below
/// fold_tol of the chord. Returns false (leaving f unchanged) when the
/// neighbouring solutions were not kept or the sign change is not found.
inline bool localize_fold(const Discretization& disc, const Branch& br, Fold& f,
                          const ContinuationOptions& opt) {
  const std::size_t k = f.extremum;
  if (k < 1 || k + 1 >= br.points.size()) return false;
  const auto& pa = br.points[k - 1];
  const auto& pb = br.points[k + 1];
  if (pa.u.empty() || pb.u.empty()) return false;
  const std::size_t m = disc.unknowns();

  const auto metric = detail::metric_at(pa.amplitude, m);
  detail::Tangent chord;
  chord.u.resize(m);
  for (std::size_t i = 0; i < m; ++i) chord.u[i] = pb.u[i] - pa.u[i];
  chord.lambda = pb.lambda - pa.lambda;
  const double length = std::sqrt(metric.dot(chord.u, chord.lambda, chord.u, chord.lambda));
  if (!(length > 0.0)) return false;
  detail::normalize(chord, metric);
  std::vector<double> cu;
  double cl = 0.0;
  metric.row(chord.u, chord.lambda, cu, cl);

  struct Eval {
    std::vector<double> u;
    double lambda = 0.0;
    double slope = 0.0;
  };
  auto eval = [&](double s, Eval& e) {
    const double w = s / length;
    e.u.assign(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) e.u[i] = (1.0 - w) * pa.u[i] + w * pb.u[i];
    e.lambda = (1.0 - w) * pa.lambda + w * pb.lambda;
    if (detail::correct(disc, pa.u, pa.lambda, cu, cl, s, e.u, e.lambda, opt) < 0) return false;
    detail::Tangent tau;
    if (!detail::tangent_at(disc, e.u, e.lambda, cu, cl, metric, tau)) return false;
    e.slope = tau.lambda;
    return true;
  };

  double lo = 0.0, hi = length;
  Eval elo, ehi, emid;
  if (!eval(lo, elo) || !eval(hi, ehi)) return false;
  if (!(elo.slope * ehi.slope < 0.0)) return false;
  while (hi - lo > opt.fold_tol * length) {
    const double mid = 0.5 * (lo + hi);
    if (!eval(mid, emid)) return false;
    if (emid.slope * elo.slope > 0.0) {
      lo = mid;
      std::swap(elo, emid);
    } else {
      hi = mid;
      std::swap(ehi, emid);
    }
  }
  const double mid = 0.5 * (lo + hi);
  if (!eval(mid, emid)) return false;

  const int idx = std::min(f.index_before, f.index_after);
  const int count = std::min({10, static_cast<int>(m), idx + 2});
  EigenOptions eo;
  eo.tol = 1e-13;
  eo.with_vectors = false;
  auto mu_at = [&](const Eval& e) {
    return smallest_eigenvalues(symmetrize(disc, e.u, e.lambda), count, eo)
        .eigenvalues[static_cast<std::size_t>(idx)];
  };
  f.mu_critical = mu_at(emid);
  f.mu_tolerance = std::abs(mu_at(ehi) - mu_at(elo));
  f.lambda = emid.lambda;
  f.amplitude = emid.u.front();
  f.t = pa.t + (pb.t - pa.t) * mid / length;
  f.refined = true;
  return true;
}

/// Predictor-corrector pseudo-arclength continuation from (λ, u) = (0, 0).
///
/// The corrector solves the bordered system
///   [ J    R_λ ] [δu]   [ -R ]
///   [ cᵀ   c_λ ] [δλ] = [ -g ]
/// where (c, c_λ) is the previous tangent in the arclength metric and
/// g = <τ, X - X_prev> - ds. Step size halves on corrector failure, grows
/// by `grow` after easy steps and stays within [ds0/1024, 8 ds0].
inline Branch trace_branch(const Discretization& disc, const ContinuationOptions& opt = {}) {
  if (!(opt.ds0 > 0.0)) throw DomainError("trace_branch: ds0 must be positive");
  if (!(opt.amplitude_max > 0.0 && opt.amplitude_max < 1.0 - opt.newton.delta_reg)) {
    throw DomainError("trace_branch: amplitude_max must lie in (0, 1 - delta_reg)");
  }
  if (opt.max_steps < 1 || opt.thin_every < 1) throw DomainError("trace_branch: bad step limits");

  const std::size_t m = disc.unknowns();
  const double ds_min = opt.ds0 / 1024.0;
  const double ds_max = 8.0 * opt.ds0;

  Branch br;
  br.dimension = disc.spec().dimension;
  br.alpha = disc.spec().alpha;
  br.mesh_intervals = static_cast<int>(m);
  br.grading = disc.mesh().grading;
  br.options = opt;
  br.min_ds = opt.ds0;

  std::vector<double> u(m + 1, 0.0);
  double lam = 0.0;

  auto record = [&](int step, double t, const std::vector<double>& uu, double l,
                    const TridiagonalOperator& jac, bool keep) {
    BranchPoint p;
    p.step = step;
    p.t = t;
    p.lambda = l;
    p.amplitude = uu.front();
    const auto sym = symmetrize(jac, disc.mesh().cell_volumes);
    p.morse_index_radial = sturm_count(sym, 0.0);
    const int k = std::min({10, static_cast<int>(m), std::max(opt.eigen_count, p.morse_index_radial + 2)});
    EigenOptions eo;
    eo.tol = opt.eigen_tol;
    eo.with_vectors = false;
    p.mu = smallest_eigenvalues(sym, k, eo).eigenvalues;
    p.mu1 = p.mu.front();
    if (keep) p.u = uu;
    br.points.push_back(std::move(p));
  };

  const double h_axis = disc.spec().h.value(0.0);
  const double first_cell = disc.mesh().nodes[1] - disc.mesh().nodes[0];
  auto core_resolved = [&](double amp, double l) {
    if (opt.min_core_cells <= 0.0 || !(l > 0.0)) return true;
    const double gap = 1.0 - amp;
    const double core = std::pow(gap * gap * gap / (l * h_axis), 1.0 / (2.0 + disc.spec().alpha));
    return core >= opt.min_core_cells * first_cell;
  };

  // Initial tangent: J du/dλ = -R_λ at the trivial solution.
  detail::Tangent tau;
  {
    auto jac = disc.jacobian(u, lam);
    auto rl = disc.lambda_derivative(u);
    for (auto& x : rl) x = -x;
    tau.u = solve_tridiagonal(jac, rl);
    tau.lambda = 1.0;
    record(0, 0.0, u, lam, jac, true);
  }
  detail::ArcMetric metric = detail::metric_at(u.front(), m);
  detail::normalize(tau, metric);

  double ds = opt.ds0;
  double t = 0.0;
  int folds_seen = 0;
  std::vector<bool> keep{true};
  br.status = TraceStatus::StepsExhausted;

  std::vector<double> cu;
  double cl = 0.0;
  for (int step = 1; step <= opt.max_steps; ++step) {
    bool accepted = false;
    int iters = 0;
    std::vector<double> un;
    double ln = 0.0;
    detail::Tangent tau_new;
    TridiagonalOperator jac;
    while (!accepted) {
      un.assign(m + 1, 0.0);
      for (std::size_t i = 0; i < m; ++i) un[i] = u[i] + ds * tau.u[i];
      ln = lam + ds * tau.lambda;
      metric.row(tau.u, tau.lambda, cu, cl);
      iters = detail::correct(disc, u, lam, cu, cl, ds, un, ln, opt);
      bool ok = iters >= 0 && detail::tangent_at(disc, un, ln, cu, cl, metric, tau_new, &jac);
      if (ok) {
        const double cosine = metric.dot(tau.u, tau.lambda, tau_new.u, tau_new.lambda);
        ok = cosine >= opt.min_tangent_cos;
      }
      if (ok) {
        accepted = true;
      } else {
        ds *= 0.5;
        br.min_ds = std::min(br.min_ds, ds);
        if (ds < ds_min) break;
      }
    }
    if (!accepted) {
      br.status = TraceStatus::Stalled;
      break;
    }
    if (!(un.front() > u.front()) || !core_resolved(un.front(), ln)) {
      br.status = TraceStatus::Unresolved;
      break;
    }

    t += ds;
    record(step, t, un, ln, jac, true);
    if (br.points.back().morse_index_radial < br.points[br.points.size() - 2].morse_index_radial) {
      br.points.pop_back();
      br.status = TraceStatus::Unresolved;
      break;
    }
    keep.push_back(step % opt.thin_every == 0);

    // A sign change of Δλ puts a turning point near the previous point; the
    // three points around it keep their solutions. Older points are thinned.
    const std::size_t np = br.points.size();
    if (np >= 3) {
      const double d1 = br.points[np - 2].lambda - br.points[np - 3].lambda;
      const double d2 = br.points[np - 1].lambda - br.points[np - 2].lambda;
      if (d1 * d2 < 0.0) {
        keep[np - 3] = keep[np - 2] = keep[np - 1] = true;
        if (br.points[np - 3].morse_index_radial != br.points[np - 1].morse_index_radial) ++folds_seen;
      }
      if (np >= 4 && !keep[np - 4]) {
        br.points[np - 4].u.clear();
        br.points[np - 4].u.shrink_to_fit();
      }
    }

    u = std::move(un);
    lam = ln;
    metric = detail::metric_at(u.front(), m);
    tau = std::move(tau_new);
    detail::normalize(tau, metric);
    if (iters <= 3) ds = std::min(ds * opt.grow, ds_max);

    if (u.front() >= opt.amplitude_max) {
      br.status = TraceStatus::Completed;
      break;
    }
    if (opt.stop_after_folds > 0 && folds_seen >= opt.stop_after_folds) {
      br.status = TraceStatus::FoldLimit;
      break;
    }
  }
  if (br.points.size() >= 3) {
    br.folds = detect_folds(br, opt.hysteresis);
    for (auto& f : br.folds) {
      if (opt.refine_folds) localize_fold(disc, br, f, opt);
      br.points[f.index].is_fold = true;
    }
  }
  return br;
}

inline Branch trace_branch(const RadialMesh& mesh, const ProblemSpec& spec,
                           const ContinuationOptions& opt = {}) {
  return trace_branch(Discretization(mesh, spec), opt);
}

struct AmplitudeSolution {
  double lambda = 0.0;
  Solution solution;
};

struct AmplitudeOptions {
  NewtonOptions newton;
  /// Largest amplitude increment of the internal sweep.
  double max_step = 0.05;
  /// Each sweep step keeps 1 - u(0) above this fraction of its previous value.
  double min_gap_ratio = 0.5;
  /// Amplitude where the sweep starts from the linearized solution.
  double start_amplitude = 1e-3;
};

/// Newton on the bordered system R(u, λ) = 0, u_0 = a from a given guess.
inline Outcome<AmplitudeSolution, NoConvergence> amplitude_newton(const Discretization& disc,
                                                                  double a,
                                                                  std::span<const double> u_guess,
                                                                  double lambda_guess,
                                                                  const NewtonOptions& opt) {
  const std::size_t m = disc.unknowns();
  std::vector<double> u(u_guess.begin(), u_guess.end());
  detail::clamp_iterate(u, opt.delta_reg);
  double lam = lambda_guess;
  std::vector<double> e0(m, 0.0);
  e0[0] = 1.0;

  auto merit = [&](std::span<const double> uu, double l, std::vector<double>& r) {
    r = disc.residual(uu, l);
    return std::max(disc.scaled_norm(r), std::abs(uu[0] - a));
  };
  std::vector<double> r;
  double norm = merit(u, lam, r);
  std::vector<double> incs;
  std::vector<double> du, rhs, trial(m + 1), r_trial;
  for (int it = 0;; ++it) {
    if (it >= opt.max_iter) return NoConvergence{std::move(u), it, norm, "iteration limit reached"};
    rhs.assign(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(m));
    for (auto& x : rhs) x = -x;
    double dl = 0.0;
    try {
      const BorderedTridiagonalLU lu(disc.jacobian(u, lam), disc.lambda_derivative(u), e0, 0.0);
      lu.solve(rhs, a - u[0], du, dl);
    } catch (const Error&) {
      return NoConvergence{std::move(u), it, norm, "singular bordered system"};
    }
    const double step_norm = std::max(detail::max_abs(du), std::abs(dl));
    bool accepted = false;
    double step = 1.0;
    for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5) {
      for (std::size_t i = 0; i < m; ++i) trial[i] = u[i] + step * du[i];
      trial[m] = 0.0;
      detail::clamp_iterate(trial, opt.delta_reg);
      const double lt = lam + step * dl;
      const double nt = merit(trial, lt, r_trial);
      if (nt < norm || (h == 0 && step_norm < 1e-6)) {
        incs.push_back(step * step_norm);
        u.swap(trial);
        lam = lt;
        r.swap(r_trial);
        norm = nt;
        accepted = true;
        break;
      }
    }
    if (!accepted) return NoConvergence{std::move(u), it, norm, "line search failed"};
    if (step == 1.0 && step_norm <= opt.tol) {
      Solution s;
      s.lambda = lam;
      s.amplitude = u.front();
      s.residual_norm = disc.scaled_norm(r);
      s.newton_iters = it + 1;
      s.increment_norms = std::move(incs);
      s.u = std::move(u);
      return AmplitudeSolution{lam, std::move(s)};
    }
  }
}

/// Solution with prescribed amplitude u(0) = a and its λ. Without a guess the
/// branch is swept in u(0) from the linearized solution at small amplitude.
inline Outcome<AmplitudeSolution, NoConvergence> amplitude_solve(
    const Discretization& disc, double a, const AmplitudeOptions& opt = {},
    const AmplitudeSolution* guess = nullptr) {
  if (!(a > 0.0 && a < 1.0 - opt.newton.delta_reg)) {
    throw DomainError("amplitude_solve: amplitude must lie in (0, 1 - delta_reg)");
  }
  if (guess != nullptr) {
    return amplitude_newton(disc, a, guess->solution.u, guess->lambda, opt.newton);
  }

  // Linearized start: u ≈ λ φ with -Δ_h φ = f.
  const std::size_t m = disc.unknowns();
  auto phi = solve_tridiagonal(disc.laplacian(), disc.profile().first(m));
  const double a0 = std::min(a, opt.start_amplitude);
  std::vector<double> u0(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) u0[i] = a0 * phi[i] / phi[0];
  auto cur = amplitude_newton(disc, a0, u0, a0 / phi[0], opt.newton);
  if (!cur) return cur;
  AmplitudeSolution state = std::move(cur).value();

  double step = opt.max_step;
  while (state.solution.amplitude < a) {
    const double gap = 1.0 - state.solution.amplitude;
    double target = std::min({a, state.solution.amplitude + step,
                              1.0 - opt.min_gap_ratio * gap});
    auto next = amplitude_newton(disc, target, state.solution.u, state.lambda, opt.newton);
    if (next) {
      state = std::move(next).value();
      step = std::min(opt.max_step, step * 1.5);
    } else {
      step *= 0.5;
      if (step < 1e-12) return next;
    }
  }
  return state;
}

inline Outcome<AmplitudeSolution, NoConvergence> amplitude_solve(const RadialMesh& mesh,
                                                                 const ProblemSpec& spec, double a,
                                                                 const AmplitudeOptions& opt = {}) {
  return amplitude_solve(Discretization(mesh, spec), a, opt);
}

struct SecondSolution {
  Solution solution;
  int morse_index_radial = 0;
  double mu1 = 0.0;
  /// λ of the first turning point of the traced branch.
  double fold_lambda = 0.0;
};

struct NotFound {
  std::string reason;
};

/// Non-minimal solution at λ_target on the sub-branch between the first and
/// second turning points, polished by Newton.
inline Outcome<SecondSolution, NotFound> second_solution(const Discretization& disc,
                                                         double lambda_target,
                                                         ContinuationOptions opt = {}) {
  opt.thin_every = 1;
  opt.stop_after_folds = 2;
  if (opt.amplitude_max < 0.9999) opt.amplitude_max = 0.9999;
  const Branch br = trace_branch(disc, opt);
  if (br.folds.empty()) return NotFound{"the traced branch has no turning point"};
  const Fold& first = br.folds.front();
  const double peak = br.points[first.index].lambda;
  if (!(lambda_target < std::min(peak, first.lambda))) {
    return NotFound{"lambda_target is not below the first turning point"};
  }
  // The extremum itself, not the fold-nearest point, opens the upper sub-branch.
  std::size_t start = first.index;
  while (start + 1 < br.points.size() && br.points[start + 1].lambda > br.points[start].lambda) ++start;
  const std::size_t stop = br.folds.size() > 1 ? br.folds[1].index + 1 : br.points.size() - 1;
  for (std::size_t j = start; j < stop && j + 1 < br.points.size(); ++j) {
    const auto& p = br.points[j];
    const auto& q = br.points[j + 1];
    if ((p.lambda - lambda_target) * (q.lambda - lambda_target) > 0.0) continue;
    const double w = (lambda_target - p.lambda) / (q.lambda - p.lambda);
    std::vector<double> guess(p.u.size());
    for (std::size_t i = 0; i < guess.size(); ++i) guess[i] = (1.0 - w) * p.u[i] + w * q.u[i];
    auto res = newton_solve(disc, lambda_target, guess, opt.newton);
    if (!res) return NotFound{"Newton polish on the upper sub-branch failed"};
    SecondSolution out;
    out.solution = std::move(res).value();
    const auto sym = symmetrize(disc, out.solution.u, lambda_target);
    out.morse_index_radial = sturm_count(sym, 0.0);
    EigenOptions eo;
    eo.with_vectors = false;
    out.mu1 = smallest_eigenvalues(sym, 1, eo).eigenvalues.front();
    out.fold_lambda = first.lambda;
    return out;
  }
  return NotFound{"lambda_target lies below the upper sub-branch"};
}

inline Outcome<SecondSolution, NotFound> second_solution(const RadialMesh& mesh,
                                                         const ProblemSpec& spec,
                                                         double lambda_target,
                                                         const ContinuationOptions& opt = {}) {
  return second_solution(Discretization(mesh, spec), lambda_target, opt);
}

}  // namespace mems
