#include <gtest/gtest.h>

#include <cmath>

#include "mems/continuation.hpp"
#include "mems/shooting.hpp"
#include "mems/solver.hpp"
#include "mems/spectrum.hpp"
#include "oracles.hpp"

using namespace mems;

namespace {
std::vector<double> zeros(const RadialMesh& m) { return std::vector<double>(m.size(), 0.0); }
}  // namespace

TEST(Newton, TrivialAtZeroLambda) {
  const auto m = build_mesh(256, 1.0, 2);
  const auto res = newton_solve(m, ProblemSpec(2, 0.0), 0.0, zeros(m));
  ASSERT_TRUE(res);
  EXPECT_EQ(res.value().newton_iters, 1);
  for (double x : res.value().u) EXPECT_EQ(x, 0.0);
}

TEST(Newton, SmallLambdaLinearization) {
  // u ≈ λ(1 - r^2)/(2N) for small λ, so u(0) ≈ λ/4 at N = 2.
  const auto m = build_mesh(1024, 1.0, 2);
  const auto res = newton_solve(m, ProblemSpec(2, 0.0), 1e-4, zeros(m));
  ASSERT_TRUE(res);
  EXPECT_NEAR(res.value().amplitude, 1e-4 / 4.0, 1e-7);
}

TEST(Newton, NoSolutionBeyondPullIn) {
  const auto m = build_mesh(512, 1.0, 2);
  const auto res = newton_solve(m, ProblemSpec(2, 0.0), 10.0, zeros(m));
  ASSERT_FALSE(res);
  EXPECT_FALSE(res.error().reason.empty());
  EXPECT_EQ(res.error().last_iterate.size(), m.size());
}

TEST(Newton, ResidualOfAcceptedSolutionBelowTolerance) {
  const auto m = build_mesh(1024, 1.0, 3);
  const Discretization disc(m, ProblemSpec(3, 0.0));
  for (double lam : {0.2, 0.6, 1.0}) {
    const auto res = newton_solve(disc, lam, zeros(m));
    ASSERT_TRUE(res) << lam;
    const auto& s = res.value();
    EXPECT_LE(disc.scaled_norm(disc.residual(s.u, lam)), 1e-10);
    EXPECT_EQ(s.u.back(), 0.0);
  }
}

TEST(Newton, QuadraticConvergence) {
  const auto m = build_mesh(1024, 1.0, 2);
  const auto res = newton_solve(m, ProblemSpec(2, 0.0), 0.7, zeros(m));
  ASSERT_TRUE(res);
  const auto& inc = res.value().increment_norms;
  ASSERT_GE(inc.size(), 3u);
  // Increments below ~cond(J) eps are roundoff; use the last pair above that.
  std::size_t k = inc.size() - 2;
  while (k > 0 && inc[k + 1] < 1e-11) --k;
  EXPECT_LE(inc[k + 1], 1e3 * inc[k] * inc[k]) << inc[k] << " -> " << inc[k + 1];
}

TEST(Newton, InputValidation) {
  const auto m = build_mesh(64, 1.0, 2);
  const Discretization disc(m, ProblemSpec(2, 0.0));
  EXPECT_THROW(newton_solve(disc, -1.0, zeros(m)), DomainError);
  EXPECT_THROW(newton_solve(disc, 0.1, std::vector<double>(5, 0.0)), SizeError);
}

TEST(MinimalBranch, MonotoneAndStable) {
  const auto m = build_mesh(1024, 1.0, 2);
  const Discretization disc(m, ProblemSpec(2, 0.0));
  std::vector<double> grid;
  for (int k = 1; k <= 20; ++k) grid.push_back(0.039 * k);
  const auto sweep = minimal_branch(disc, grid);
  ASSERT_FALSE(sweep.truncated);
  double prev_amp = 0.0, prev_mu = 1e300;
  for (const auto& s : sweep.solutions) {
    EXPECT_GT(s.amplitude, prev_amp);
    prev_amp = s.amplitude;
    const auto t = symmetrize(disc, s.u, s.lambda);
    EXPECT_EQ(sturm_count(t, 0.0), 0) << s.lambda;
    const double mu1 = smallest_eigenvalues(t, 1, {1e-12, false}).eigenvalues[0];
    EXPECT_LT(mu1, prev_mu);
    prev_mu = mu1;
  }
}

TEST(MinimalBranch, TruncatesPastPullIn) {
  const auto m = build_mesh(512, 1.0, 2);
  const std::vector<double> grid{0.2, 0.5, 0.7, 0.8, 0.9};
  const auto sweep = minimal_branch(m, ProblemSpec(2, 0.0), grid);
  EXPECT_TRUE(sweep.truncated);
  EXPECT_EQ(sweep.solutions.size(), 3u);
  EXPECT_DOUBLE_EQ(sweep.last_good_lambda, 0.7);
  ASSERT_TRUE(sweep.failed_lambda.has_value());
  EXPECT_DOUBLE_EQ(*sweep.failed_lambda, 0.8);
  EXPECT_THROW(minimal_branch(m, ProblemSpec(2, 0.0), std::vector<double>{0.3, 0.2}), DomainError);
}

TEST(PullIn, BisectionBracketsTheFold) {
  const auto m = build_mesh(1024, 1.0, 2);
  const Discretization disc(m, ProblemSpec(2, 0.0));
  const double lam = pull_in_bisection(disc, 0.5, 1.0, 1e-6);
  EXPECT_NEAR(lam, 0.78922, 2e-4);
  EXPECT_THROW(pull_in_bisection(disc, 0.9, 1.0, 1e-6), BracketError);
  EXPECT_THROW(pull_in_bisection(disc, 0.1, 0.3, 1e-6), BracketError);
}

TEST(Shooting, Examples) {
  const ProblemSpec spec(2, 0.0);
  EXPECT_NEAR(shooting_oracle(spec, 1e-4, 20000).lambda, 4e-4, 4e-6);
  EXPECT_NEAR(shooting_oracle(spec, 0.99, 100000).lambda, 4.0 / 9.0, 0.05 * 4.0 / 9.0);
  EXPECT_THROW(shooting_oracle(spec, 0.0, 20000), DomainError);
  EXPECT_THROW(shooting_oracle(spec, 1.0, 20000), DomainError);
}

TEST(Shooting, AgreesWithScaledIvpOracle) {
  struct Case {
    int n;
    double alpha;
  };
  for (const Case c : {Case{2, 0.0}, Case{3, 0.0}, Case{3, 1.0}, Case{7, 0.0}, Case{5, 0.5}}) {
    for (double a : {0.1, 0.5, 0.9}) {
      const double ref = oracle::branch_lambda(c.n, c.alpha, a);
      const double got = shooting_oracle(ProblemSpec(c.n, c.alpha), a, 20000).lambda;
      EXPECT_NEAR(got, ref, 1e-8 * ref) << "N=" << c.n << " alpha=" << c.alpha << " a=" << a;
    }
  }
}

TEST(Shooting, InsensitiveToStartRadius) {
  const ProblemSpec spec(3, 1.0);
  ShootingOptions a, b;
  a.start_radius = 1e-6;
  b.start_radius = 1e-4;
  EXPECT_NEAR(shooting_oracle(spec, 0.5, 20000, a).lambda, shooting_oracle(spec, 0.5, 20000, b).lambda, 1e-9);
}

// FD against the independent oracle: the difference is the discretization
// error, second order in h.
TEST(CrossOracle, FiniteDifferenceConvergesToOracle) {
  const ProblemSpec spec(2, 0.0);
  const double ref = oracle::branch_lambda(2, 0.0, 0.5);
  double prev = 0.0;
  for (int mm : {256, 512, 1024}) {
    const auto sol = amplitude_solve(build_mesh(mm, 1.0, 2), spec, 0.5);
    ASSERT_TRUE(sol);
    const double err = std::abs(sol.value().lambda - ref);
    if (prev > 0.0) {
      EXPECT_GT(prev / err, 3.5) << mm;
    }
    prev = err;
  }
  EXPECT_LT(prev / ref, 1e-5);
}
