#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mems/continuation.hpp"
#include "mems/solver.hpp"
#include "mems/spectrum.hpp"
#include "oracles.hpp"

using namespace mems;

namespace {

std::vector<std::vector<double>> dense(const SymmetricTridiagonal& t) {
  const std::size_t n = t.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = t.diag[i];
    if (i + 1 < n) a[i][i + 1] = a[i + 1][i] = t.off[i];
  }
  return a;
}

int count_below(const std::vector<double>& ev, double mu) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [mu](double x) { return x < mu; }));
}

SymmetricTridiagonal random_tridiagonal(std::size_t n, std::mt19937& rng) {
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  SymmetricTridiagonal t;
  t.diag.resize(n);
  t.off.resize(n - 1);
  for (auto& x : t.diag) x = d(rng);
  for (auto& x : t.off) x = d(rng);
  return t;
}

}  // namespace

TEST(Sturm, CountsEigenvaluesBelowShift) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_tridiagonal(12, rng);
    const auto ev = oracle::jacobi_eigenvalues(dense(t));
    for (double mu : {-4.0, -1.0, 0.0, 0.3, 2.0, 5.0}) EXPECT_EQ(sturm_count(t, mu), count_below(ev, mu));
  }
}

TEST(Sturm, DiagonalExamples) {
  SymmetricTridiagonal t;
  t.diag = {-2.0, 1.0, 3.0};
  t.off = {0.0, 0.0};
  EXPECT_EQ(sturm_count(t, 0.0), 1);
  EXPECT_EQ(sturm_count(t, 2.0), 2);
  EXPECT_EQ(sturm_count(t, 10.0), 3);
  EXPECT_EQ(sturm_count(t, -5.0), 0);
}

TEST(Eigen, RandomMatricesMatchJacobi) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_tridiagonal(15, rng);
    const auto ev = oracle::jacobi_eigenvalues(dense(t));
    const auto res = smallest_eigenvalues(t, 5, {1e-13, true});
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(res.eigenvalues[j], ev[j], 1e-10);
    for (double r : res.residuals) EXPECT_LT(r, 1e-7);
  }
}

TEST(Eigen, Validation) {
  SymmetricTridiagonal t;
  t.diag = {1.0, 2.0};
  t.off = {0.5};
  EXPECT_THROW(smallest_eigenvalues(t, 0), DomainError);
  EXPECT_THROW(smallest_eigenvalues(t, 11), DomainError);
  EXPECT_THROW(smallest_eigenvalues(t, 3), SizeError);
}

TEST(Spectrum, DiskDirichletEigenvalue) {
  const auto m = build_mesh(4096, 1.0, 2);
  const Discretization disc(m, ProblemSpec(2, 0.0));
  const auto t = symmetrize(disc, std::vector<double>(m.size(), 0.0), 0.0);
  const auto res = smallest_eigenvalues(t, 3);
  const double j01 = oracle::bessel_j0_first_zero();
  EXPECT_NEAR(res.eigenvalues[0], j01 * j01, 1e-3 * j01 * j01);
  EXPECT_NEAR(res.eigenvalues[0], 5.7832, 1e-3 * 5.7832);
  EXPECT_EQ(res.morse_index_radial, 0);
  EXPECT_EQ(morse_index_radial(disc, std::vector<double>(m.size(), 0.0), 0.0), 0);
}

TEST(Spectrum, SymmetrizedIsSimilarToJacobian) {
  // Eigenvalues of J and of its symmetrization agree (dense check at M = 32).
  const auto m = build_mesh(32, 2.0, 3);
  const Discretization disc(m, ProblemSpec(3, 0.0));
  const auto sol = newton_solve(disc, 0.9, std::vector<double>(m.size(), 0.0));
  ASSERT_TRUE(sol);
  const auto& u = sol.value().u;
  const auto t = symmetrize(disc, u, 0.9);
  const auto j = disc.jacobian(u, 0.9);
  // J x = μ x  <=>  T (V^{1/2} x) = μ (V^{1/2} x); check with T's eigenvectors.
  const auto res = smallest_eigenvalues(t, 3, {1e-13, true});
  for (int k = 0; k < 3; ++k) {
    std::vector<double> x(m.intervals());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = res.eigenvectors[k][i] / std::sqrt(m.cell_volumes[i]);
    const auto jx = j.apply(x);
    double err = 0.0, nrm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      err = std::max(err, std::abs(jx[i] - res.eigenvalues[k] * x[i]));
      nrm = std::max(nrm, std::abs(res.eigenvalues[k] * x[i]));
    }
    EXPECT_LT(err, 1e-7 * nrm);
  }
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    EXPECT_NEAR(t.off[i] * t.off[i], j.sup[i] * j.sub[i + 1], 1e-9 * std::abs(t.off[i] * t.off[i]));
  }
}

TEST(Spectrum, DenseOracleAtM32) {
  for (int n : {2, 3, 8}) {
    const auto m = build_mesh(32, n >= 8 ? 2.0 : 1.0, n);
    const Discretization disc(m, ProblemSpec(n, 0.0));
    const double lam = 0.5 * exact_extremal(n, 0.0).lambda_star;
    const auto sol = newton_solve(disc, lam, std::vector<double>(m.size(), 0.0));
    ASSERT_TRUE(sol);
    const auto t = symmetrize(disc, sol.value().u, lam);
    const auto ev = oracle::jacobi_eigenvalues(dense(t));
    const auto res = smallest_eigenvalues(t, 5, {1e-14, false});
    for (int k = 0; k < 5; ++k) {
      EXPECT_NEAR(res.eigenvalues[k], ev[k], 1e-9 * std::max(1.0, std::abs(ev[k]))) << "N=" << n << " k=" << k;
    }
    EXPECT_EQ(res.morse_index_radial, count_below(ev, 0.0));
  }
}

TEST(Spectrum, MultiplicityOfReturnedEigenvalues) {
  const auto m = build_mesh(512, 1.0, 3);
  const Discretization disc(m, ProblemSpec(3, 0.0));
  const auto t = symmetrize(disc, std::vector<double>(m.size(), 0.0), 0.0);
  const EigenOptions opt{1e-12, false};
  const auto res = smallest_eigenvalues(t, 5, opt);
  for (double mu : res.eigenvalues) {
    const double eps = 10.0 * opt.tol * std::max(1.0, std::abs(mu));
    EXPECT_EQ(sturm_count(t, mu + eps) - sturm_count(t, mu - eps), 1) << mu;
  }
  // Radial Dirichlet eigenvalues of the unit ball in R^3: (kπ)^2.
  for (int k = 0; k < 3; ++k) {
    const double exact = std::pow((k + 1) * std::numbers::pi, 2);
    EXPECT_NEAR(res.eigenvalues[k], exact, 1e-3 * exact);
  }
}

TEST(Spectrum, SmallLambdaMinimalIsStable) {
  const auto m = build_mesh(1024, 1.0, 2);
  const Discretization disc(m, ProblemSpec(2, 0.0));
  const auto sol = newton_solve(disc, 0.05, std::vector<double>(m.size(), 0.0));
  ASSERT_TRUE(sol);
  const auto res = smallest_eigenvalues(symmetrize(disc, sol.value().u, 0.05), 2);
  EXPECT_GT(res.eigenvalues[0], 0.0);
  EXPECT_EQ(res.morse_index_radial, 0);
  EXPECT_EQ(classify_stability(res.eigenvalues[0]).kind, Stability::Stable);
}

TEST(Spectrum, SecondSolutionHasIndexOne) {
  const auto m = build_mesh(1024, 2.0, 2);
  const Discretization disc(m, ProblemSpec(2, 0.0));
  const double lam_star = pull_in_bisection(disc, 0.5, 1.0, 1e-7);
  const auto second = second_solution(disc, 0.95 * lam_star);
  ASSERT_TRUE(second);
  const auto res = smallest_eigenvalues(symmetrize(disc, second.value().solution.u, 0.95 * lam_star), 2);
  EXPECT_LT(res.eigenvalues[0], 0.0);
  EXPECT_GT(res.eigenvalues[1], 0.0);
  EXPECT_EQ(res.morse_index_radial, 1);
}

TEST(Spectrum, GershgorinContainsSpectrum) {
  std::mt19937 rng(3);
  const auto t = random_tridiagonal(20, rng);
  const auto [lo, hi] = gershgorin_bounds(t);
  const auto ev = oracle::jacobi_eigenvalues(dense(t));
  EXPECT_LE(lo, ev.front());
  EXPECT_GE(hi, ev.back());
}
