#pragma once

// Problem definition for -Δu = λ f(x) / (1-u)^2 on the unit ball with radial
// profiles f(x) = |x|^α h(|x|), plus the closed-form quantities attached to it.

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <utility>

#include "mems/errors.hpp"

namespace mems {

namespace detail {
/// Shortest round-trip-safe decimal form used in every text artifact.
inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Radial factor h(r) of the profile. Carries its derivative so that
/// x-gradients of the profile can be formed exactly.
struct ProfileModifier {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  /// Canonical textual form, "constant:<v>" for constants.
  std::string description;

  static ProfileModifier constant(double c) {
    return {[c](double) { return c; }, [](double) { return 0.0; },
            "constant:" + detail::format_g17(c)};
  }

  /// h(r) = c0 + c2 r^2.
  static ProfileModifier quadratic(double c0, double c2) {
    return {[c0, c2](double r) { return c0 + c2 * r * r; }, [c2](double r) { return 2.0 * c2 * r; },
            "quadratic:" + detail::format_g17(c0) + "," + detail::format_g17(c2)};
  }
};

/// Lower bound the sampled h(r) must respect.
inline constexpr double kProfileModifierFloor = 1e-12;

struct ProblemSpec {
  int dimension = 2;
  double alpha = 0.0;
  ProfileModifier h = ProfileModifier::constant(1.0);

  ProblemSpec() = default;
  ProblemSpec(int n, double a, ProfileModifier mod = ProfileModifier::constant(1.0))
      : dimension(n), alpha(a), h(std::move(mod)) {
    validate();
  }

  /// Throws DomainError when N < 1, α < 0 or h dips below the floor on a
  /// 257-point sample of [0, 1].
  void validate() const {
    if (dimension < 1) throw DomainError("dimension must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be >= 0");
    if (!h.value) throw DomainError("profile modifier has no value function");
    for (int k = 0; k <= 256; ++k) {
      const double r = k / 256.0;
      const double v = h.value(r);
      if (!(v >= kProfileModifierFloor) || !std::isfinite(v)) {
        throw DomainError("profile modifier must stay positive on [0,1]; h(" +
                          std::to_string(r) + ") = " + std::to_string(v));
      }
    }
  }
};

/// f(r) = r^α h(r). At r = 0 this is h(0) when α = 0 and 0 otherwise.
inline double profile_eval(const ProblemSpec& spec, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("profile_eval: r outside [0,1]");
  const double hr = spec.h.value(r);
  if (spec.alpha == 0.0) return hr;
  if (r == 0.0) return 0.0;
  return std::pow(r, spec.alpha) * hr;
}

/// r f'(r) = α r^α h(r) + r^{α+1} h'(r), the radial part of <∇_x f, x>.
inline double profile_r_derivative(const ProblemSpec& spec, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("profile_r_derivative: r outside [0,1]");
  if (r == 0.0) return 0.0;
  const double ra = spec.alpha == 0.0 ? 1.0 : std::pow(r, spec.alpha);
  const double dh = spec.h.derivative ? spec.h.derivative(r) : 0.0;
  return spec.alpha * ra * spec.h.value(r) + ra * r * dh;
}

/// Volume of the unit ball in R^N via V_0 = 1, V_1 = 2, V_n = 2π/n V_{n-2}.
inline double ball_volume(int n) {
  if (n < 0) throw DomainError("ball_volume: negative dimension");
  double v = (n % 2 == 0) ? 1.0 : 2.0;
  for (int k = (n % 2 == 0) ? 2 : 3; k <= n; k += 2) v *= 2.0 * std::numbers::pi / k;
  return v;
}

/// Surface area of the unit sphere S^{N-1}, σ_N = N V_N.
inline double sphere_area(int n) { return n * ball_volume(n); }

enum class ExtremalRegime { SingularExtremal, ClassicalExtremal };

inline const char* to_string(ExtremalRegime r) {
  return r == ExtremalRegime::SingularExtremal ? "SingularExtremal" : "ClassicalExtremal";
}

struct ClosedFormExtremal {
  int dimension = 0;
  double alpha = 0.0;
  double lambda_star = 0.0;
  double beta = 0.0;
  ExtremalRegime regime = ExtremalRegime::ClassicalExtremal;

  /// u*(r) = 1 - r^β.
  [[nodiscard]] double u_star(double r) const { return 1.0 - std::pow(r, beta); }
};

/// α_N = (3N - 14 - 4√6) / (4 + 2√6), defined for N >= 8.
inline double alpha_threshold(int n) {
  if (n < 8) throw DomainError("alpha_threshold is defined for N >= 8");
  const double s6 = std::sqrt(6.0);
  // 3N - 14 - 4√6 cancels badly at N = 8; use (k^2 - 96) / (k + 4√6).
  const double k = 3.0 * n - 14.0;
  return (k * k - 96.0) / ((k + 4.0 * s6) * (4.0 + 2.0 * s6));
}

inline ClosedFormExtremal exact_extremal(int n, double alpha) {
  if (n < 1) throw DomainError("exact_extremal: N must be >= 1");
  if (!(alpha >= 0.0)) throw DomainError("exact_extremal: alpha must be >= 0");
  ClosedFormExtremal out;
  out.dimension = n;
  out.alpha = alpha;
  out.beta = (2.0 + alpha) / 3.0;
  out.lambda_star = (2.0 + alpha) * (3.0 * n + alpha - 4.0) / 9.0;
  // For N <= 7 the extremal solution is classical; the pair (u*, λ*) above is
  // then a formal singular solution only.
  out.regime = (n >= 8 && alpha <= alpha_threshold(n)) ? ExtremalRegime::SingularExtremal
                                                       : ExtremalRegime::ClassicalExtremal;
  return out;
}

/// |β(β+N-2) - λ*|: -Δ(1 - r^β) = β(β+N-2) r^{β-2} and λ* r^α / r^{2β}
/// share the power r^{β-2}, so the pair solves the equation iff this vanishes.
inline double verify_extremal_identity(int n, double alpha) {
  if (n < 2) throw DomainError("verify_extremal_identity: N must be >= 2");
  const ClosedFormExtremal e = exact_extremal(n, alpha);
  return std::abs(e.beta * (e.beta + n - 2.0) - e.lambda_star);
}

enum class Stability { Stable, SemiStable, Unstable };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "Stable";
    case Stability::SemiStable: return "SemiStable";
    case Stability::Unstable: return "Unstable";
  }
  return "?";
}

struct StabilityClass {
  Stability kind = Stability::Stable;
  double mu1 = 0.0;
};

inline constexpr double kDefaultEigenTolerance = 1e-8;

inline StabilityClass classify_stability(double mu1, double tol_eig = kDefaultEigenTolerance) {
  if (!(tol_eig > 0.0)) throw DomainError("classify_stability: tolerance must be positive");
  if (mu1 > tol_eig) return {Stability::Stable, mu1};
  if (mu1 >= -tol_eig) return {Stability::SemiStable, mu1};
  return {Stability::Unstable, mu1};
}

}  // namespace mems
