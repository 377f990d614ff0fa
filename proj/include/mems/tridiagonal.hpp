#pragma once

// Tridiagonal operators and the eliminations used by Newton, continuation and
// inverse iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mems/errors.hpp"

namespace mems {

enum class AxisClosure { GhostSymmetric };
enum class OuterClosure { DirichletEliminated };

/// Row i couples unknowns i-1, i, i+1 with coefficients sub[i], diag[i], sup[i];
/// sub[0] and sup[n-1] are always 0.
struct TridiagonalOperator {
  std::vector<double> sub;
  std::vector<double> diag;
  std::vector<double> sup;
  AxisClosure axis = AxisClosure::GhostSymmetric;
  OuterClosure outer = OuterClosure::DirichletEliminated;

  TridiagonalOperator() = default;
  explicit TridiagonalOperator(std::size_t n) : sub(n, 0.0), diag(n, 0.0), sup(n, 0.0) {}

  [[nodiscard]] std::size_t size() const { return diag.size(); }

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    if (x.size() < n) throw SizeError("TridiagonalOperator::apply: vector too short");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = diag[i] * x[i];
      if (i > 0) v += sub[i] * x[i - 1];
      if (i + 1 < n) v += sup[i] * x[i + 1];
      y[i] = v;
    }
    return y;
  }

  [[nodiscard]] double norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      m = std::max(m, std::abs(sub[i]) + std::abs(diag[i]) + std::abs(sup[i]));
    }
    return m;
  }
};

/// LU factorization with partial pivoting between adjacent rows (the gttrf
/// scheme). Row interchanges add a second superdiagonal to U.
class TridiagonalLU {
 public:
  /// With check = false a numerically zero pivot is replaced by a tiny
  /// positive one instead of raising PivotError.
  explicit TridiagonalLU(const TridiagonalOperator& t, bool check = true) { factor(t, check); }

  [[nodiscard]] std::size_t size() const { return d_.size(); }

  void solve_in_place(std::span<double> b) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (swapped_[i]) {
        const double tmp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = tmp - l_[i] * b[i];
      } else {
        b[i + 1] -= l_[i] * b[i];
      }
    }
    b[n - 1] /= d_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - u1_[n - 2] * b[n - 1]) / d_[n - 2];
    for (std::size_t k = n - 2; k-- > 0;) {
      b[k] = (b[k] - u1_[k] * b[k + 1] - u2_[k] * b[k + 2]) / d_[k];
    }
  }

  [[nodiscard]] std::vector<double> solve(std::span<const double> rhs) const {
    std::vector<double> x(rhs.begin(), rhs.end());
    solve_in_place(x);
    return x;
  }

  /// Smallest |U_ii|; tiny values flag proximity to a singular operator.
  [[nodiscard]] double min_pivot() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : d_) m = std::min(m, std::abs(v));
    return m;
  }

 private:
  void factor(const TridiagonalOperator& t, bool check) {
    const std::size_t n = t.size();
    if (n == 0) throw SizeError("TridiagonalLU: empty operator");
    d_ = t.diag;
    u1_.assign(n, 0.0);
    u2_.assign(n, 0.0);
    l_.assign(n, 0.0);
    swapped_.assign(n, false);
    for (std::size_t i = 0; i + 1 < n; ++i) u1_[i] = t.sup[i];
    std::vector<double> low(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) low[i] = t.sub[i + 1];

    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(low[i])) {
        if (d_[i] == 0.0) {
          if (check) throw PivotError("TridiagonalLU: zero pivot", i);
          d_[i] = std::numeric_limits<double>::min();
        }
        const double f = low[i] / d_[i];
        l_[i] = f;
        d_[i + 1] -= f * u1_[i];
      } else {
        const double f = d_[i] / low[i];
        d_[i] = low[i];
        l_[i] = f;
        const double tmp = u1_[i];
        u1_[i] = d_[i + 1];
        d_[i + 1] = tmp - f * d_[i + 1];
        if (i + 2 < n) {
          u2_[i] = u1_[i + 1];
          u1_[i + 1] = -f * u1_[i + 1];
        }
        swapped_[i] = true;
      }
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < n; ++i) {
      double scale = row_scale(t, i);
      if (i + 1 < n) scale = std::max(scale, row_scale(t, i + 1));
      if (!(std::abs(d_[i]) > 4.0 * eps * scale)) {
        if (!check) {
          // Perturb to a tiny pivot of fixed sign; inverse iteration wants exactly this.
          d_[i] = std::max(4.0 * eps * scale, std::numeric_limits<double>::min());
          continue;
        }
        throw PivotError("TridiagonalLU: singular pivot at row " + std::to_string(i), i);
      }
    }
  }

  static double row_scale(const TridiagonalOperator& t, std::size_t i) {
    return std::abs(t.sub[i]) + std::abs(t.diag[i]) + std::abs(t.sup[i]);
  }

  std::vector<double> d_, u1_, u2_, l_;
  std::vector<bool> swapped_;
};

/// Solves T x = rhs by Gaussian elimination with adjacent-row pivoting.
/// Throws PivotError when T is numerically singular.
inline std::vector<double> solve_tridiagonal(const TridiagonalOperator& t,
                                             std::span<const double> rhs) {
  if (rhs.size() != t.size()) throw SizeError("solve_tridiagonal: size mismatch");
  return TridiagonalLU(t).solve(rhs);
}

/// Factorization of the bordered matrix
///
///     [ T   c ]
///     [ bᵀ  δ ]
///
/// with T tridiagonal. Rows of T pivot among neighbours as in TridiagonalLU;
/// the last column of T pivots against the border row, so a singular T (a
/// fold) is harmless as long as the bordered matrix itself is regular.
class BorderedTridiagonalLU {
 public:
  BorderedTridiagonalLU(const TridiagonalOperator& t, std::span<const double> column,
                        std::span<const double> row, double corner)
      : t_(t), c0_(column.begin(), column.end()), b0_(row.begin(), row.end()), corner0_(corner) {
    const std::size_t n = t.size();
    if (n < 2 || column.size() != n || row.size() != n) {
      throw SizeError("BorderedTridiagonalLU: inconsistent sizes");
    }
    factor();
  }

  [[nodiscard]] std::size_t size() const { return d_.size(); }

  /// Solves for (x, y) with one step of iterative refinement.
  void solve(std::span<const double> rhs, double rhs_last, std::vector<double>& x,
             double& y) const {
    const std::size_t n = size();
    x.assign(rhs.begin(), rhs.end());
    y = rhs_last;
    raw_solve(x, y);

    std::vector<double> res(n);
    const auto tx = t_.apply(x);
    double last = rhs_last - corner0_ * y;
    for (std::size_t i = 0; i < n; ++i) {
      res[i] = rhs[i] - tx[i] - c0_[i] * y;
      last -= b0_[i] * x[i];
    }
    double dy = last;
    raw_solve(res, dy);
    for (std::size_t i = 0; i < n; ++i) x[i] += res[i];
    y += dy;
  }

 private:
  void factor() {
    const std::size_t n = t_.size();
    d_ = t_.diag;
    u1_.assign(n, 0.0);
    u2_.assign(n, 0.0);
    l_.assign(n, 0.0);
    bm_.assign(n, 0.0);
    swapped_.assign(n, false);
    c_ = c0_;
    for (std::size_t i = 0; i + 1 < n; ++i) u1_[i] = t_.sup[i];
    std::vector<double> low(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) low[i] = t_.sub[i + 1];
    std::vector<double> b = b0_;
    corner_ = corner0_;

    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(low[i])) {
        if (d_[i] == 0.0) throw PivotError("BorderedTridiagonalLU: zero pivot", i);
        const double f = low[i] / d_[i];
        l_[i] = f;
        d_[i + 1] -= f * u1_[i];
        c_[i + 1] -= f * c_[i];
      } else {
        const double f = d_[i] / low[i];
        d_[i] = low[i];
        l_[i] = f;
        const double tmp = u1_[i];
        u1_[i] = d_[i + 1];
        d_[i + 1] = tmp - f * d_[i + 1];
        if (i + 2 < n) {
          u2_[i] = u1_[i + 1];
          u1_[i + 1] = -f * u1_[i + 1];
        }
        const double ctmp = c_[i];
        c_[i] = c_[i + 1];
        c_[i + 1] = ctmp - f * c_[i + 1];
        swapped_[i] = true;
      }
      // Eliminate the border row entry in column i.
      const double m = b[i] / d_[i];
      bm_[i] = m;
      b[i + 1] -= m * u1_[i];
      if (i + 2 < n) b[i + 2] -= m * u2_[i];
      corner_ -= m * c_[i];
    }
    // Final 2x2 block [[d, c], [b, corner]] with partial pivoting.
    const std::size_t k = n - 1;
    last_swapped_ = std::abs(b[k]) > std::abs(d_[k]);
    if (last_swapped_) {
      std::swap(d_[k], b[k]);
      std::swap(c_[k], corner_);
    }
    if (d_[k] == 0.0) throw PivotError("BorderedTridiagonalLU: singular bordered matrix", k);
    last_mult_ = b[k] / d_[k];
    corner_ -= last_mult_ * c_[k];
    if (corner_ == 0.0 || !std::isfinite(corner_)) {
      throw PivotError("BorderedTridiagonalLU: singular bordered matrix", n);
    }
  }

  void raw_solve(std::vector<double>& x, double& y) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (swapped_[i]) {
        const double tmp = x[i];
        x[i] = x[i + 1];
        x[i + 1] = tmp - l_[i] * x[i];
      } else {
        x[i + 1] -= l_[i] * x[i];
      }
      y -= bm_[i] * x[i];
    }
    const std::size_t k = n - 1;
    if (last_swapped_) std::swap(x[k], y);
    y -= last_mult_ * x[k];

    y /= corner_;
    x[k] = (x[k] - c_[k] * y) / d_[k];
    if (n > 1) x[k - 1] = (x[k - 1] - u1_[k - 1] * x[k] - c_[k - 1] * y) / d_[k - 1];
    for (std::size_t i = n - 2; i-- > 0;) {
      x[i] = (x[i] - u1_[i] * x[i + 1] - u2_[i] * x[i + 2] - c_[i] * y) / d_[i];
    }
  }

  TridiagonalOperator t_;
  std::vector<double> c0_, b0_;
  double corner0_;

  std::vector<double> d_, u1_, u2_, l_, bm_, c_;
  std::vector<bool> swapped_;
  bool last_swapped_ = false;
  double last_mult_ = 0.0;
  double corner_ = 0.0;
};

}  // namespace mems
