#include <gtest/gtest.h>

#include <map>
#include <random>

#include "num/gabp.hpp"
#include "test_support.hpp"

namespace num {
namespace {

SymmetricSystem dense_system(const Eigen::MatrixXd& a, const Vector& b) {
  SymmetricSystem sys;
  sys.a = testing::from_dense(a);
  sys.b = b;
  return sys;
}

SymmetricSystem two_by_two() {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  return dense_system(a, {3.0, 3.0});
}

std::size_t edge_index(const GabpGraph& g, std::size_t from, std::size_t to) {
  for (std::size_t e = g.out_offsets[from]; e < g.out_offsets[from + 1]; ++e) {
    if (g.edge_to[e] == to) return e;
  }
  throw std::logic_error("no such edge");
}

TEST(GabpGraph, EdgesAreSymmetric) {
  std::mt19937_64 rng(1);
  auto sys = testing::random_dominant_system(30, rng, 0.2);
  auto g = GabpGraph::build(sys);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    EXPECT_EQ(g.edge_from[g.reverse[e]], g.edge_to[e]);
    EXPECT_EQ(g.edge_to[g.reverse[e]], g.edge_from[e]);
    EXPECT_NE(g.edge_from[e], g.edge_to[e]);
  }
  EXPECT_EQ(g.edge_count(), sys.a.nnz() - 30);
}

TEST(GabpGraph, PriorsFromDiagonal) {
  auto g = GabpGraph::build(two_by_two());
  EXPECT_EQ(g.prior_precision, (Vector{2.0, 2.0}));
  EXPECT_EQ(g.prior_mean, (Vector{1.5, 1.5}));
}

TEST(GabpGraph, ZeroDiagonalRejected) {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 2;
  EXPECT_THROW(GabpGraph::build(dense_system(a, {1.0, 1.0})), DegeneracyError);
}

TEST(GabpRound, FirstRoundByHand) {
  auto g = GabpGraph::build(two_by_two());
  auto s = gabp_round(g, GabpState::initial(g));
  std::size_t e12 = edge_index(g, 0, 1);
  // P_1\2 = 2, mu_1\2 = 1.5, P_12 = -1 * 1 / 2, mu_12 = -1 * 1.5 / P_12.
  EXPECT_DOUBLE_EQ(s.precision[e12], -0.5);
  EXPECT_DOUBLE_EQ(s.mean[e12], 3.0);
  EXPECT_EQ(s.round, 1u);
}

TEST(GabpSolve, TwoByTwoConvergesToOracle) {
  auto sys = two_by_two();
  auto r = solve_gabp(sys, 1e-12, 100);
  ASSERT_TRUE(r.converged);
  Vector oracle = testing::dense_solve(sys);
  EXPECT_NEAR(oracle[0], 1.0, 1e-14);
  EXPECT_NEAR(r.x[0], 1.0, 1e-10);
  EXPECT_NEAR(r.x[1], 1.0, 1e-10);
}

TEST(GabpSolve, DisconnectedDiagonal) {
  Eigen::MatrixXd a = Eigen::Vector3d(2.0, -4.0, 0.5).asDiagonal();
  auto sys = dense_system(a, {1.0, 2.0, 3.0});
  auto g = GabpGraph::build(sys);
  EXPECT_EQ(g.edge_count(), 0u);
  auto s = gabp_round(g, GabpState::initial(g));
  EXPECT_TRUE(s.precision.empty());
  EXPECT_EQ(gabp_infer(g, s).mean, (Vector{0.5, -0.5, 6.0}));
  auto r = solve_gabp(sys, 1e-8, 10);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.inner_iterations, 0u);
}

TEST(GabpSolve, SingleNode) {
  Eigen::MatrixXd a(1, 1);
  a << -3.0;
  auto sys = dense_system(a, {6.0});
  auto g = GabpGraph::build(sys);
  auto m = gabp_infer(g, GabpState::initial(g));
  EXPECT_EQ(m.precision[0], -3.0);
  EXPECT_EQ(m.mean[0], -2.0);
}

TEST(GabpSolve, IdentityAtRoundZero) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
  Vector b{1.0, -2.0, 3.0, 0.5};
  auto g = GabpGraph::build(dense_system(a, b));
  EXPECT_EQ(gabp_infer(g, GabpState::initial(g)).mean, b);
}

TEST(GabpSolve, ConvergedStateIsFixedPoint) {
  std::mt19937_64 rng(3);
  auto sys = testing::random_dominant_system(40, rng, 0.15);
  auto g = GabpGraph::build(sys);
  const double tol = 1e-9;
  GabpState s = GabpState::initial(g);
  double change = INFINITY;
  while (change > tol && s.round < 1000) {
    GabpState next = gabp_round(g, s);
    change = message_change(next, s);
    s = std::move(next);
  }
  ASSERT_LE(change, tol);
  EXPECT_LE(message_change(gabp_round(g, s), s), tol);
}

TEST(GabpSolve, DominantHundredMatchesOracle) {
  std::mt19937_64 rng(4);
  auto sys = testing::random_dominant_system(100, rng, 0.05);
  auto r = solve_gabp(sys, 1e-10, 1000);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(testing::max_abs_diff(r.x, testing::dense_solve(sys)), 1e-6);
  EXPECT_EQ(r.diagnostics.at("diag_dominant"), "true");
  EXPECT_EQ(r.diagnostics.at("rounds"), std::to_string(r.inner_iterations));
}

TEST(GabpSolve, NonWalkSummableNeverClaimsConvergence) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 2, 1;
  auto sys = dense_system(a, {1.0, 1.0});
  Vector oracle = testing::dense_solve(sys);
  try {
    auto r = solve_gabp(sys, 1e-8, 200);
    if (r.converged) {
      EXPECT_LE(testing::max_abs_diff(r.x, oracle), 1e-6);
    } else {
      SUCCEED();
    }
    EXPECT_EQ(r.diagnostics.at("diag_dominant"), "false");
  } catch (const DegeneracyError&) {
    SUCCEED();
  }
}

TEST(GabpSolve, ExactOnConvergenceAcrossSeeds) {
  const double tol = 1e-8;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::size_t n = std::vector<std::size_t>{10, 50, 200, 500}[seed % 4];
    auto sys = testing::random_dominant_system(n, rng, 4.0 / static_cast<double>(n));
    auto r = solve_gabp(sys, tol, 10 * n);
    ASSERT_TRUE(r.converged) << "seed " << seed;  // dominance guarantees convergence
    Vector oracle = testing::dense_solve(sys);
    EXPECT_LE(testing::max_abs_diff(r.x, oracle), 10 * tol * norm_inf(oracle)) << "seed " << seed;
  }
}

TEST(GabpSolve, Deterministic) {
  std::mt19937_64 rng(6);
  auto sys = testing::random_dominant_system(80, rng, 0.1);
  auto a = solve_gabp(sys, 1e-9, 500);
  auto b = solve_gabp(sys, 1e-9, 500);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.inner_iterations, b.inner_iterations);
}

TEST(GabpSolve, DampingReachesSameSolution) {
  std::mt19937_64 rng(8);
  auto sys = testing::random_dominant_system(60, rng, 0.1);
  auto r = solve_gabp(sys, 1e-10, 2000, GabpOptions{0.5});
  ASSERT_TRUE(r.converged);
  EXPECT_LE(testing::max_abs_diff(r.x, testing::dense_solve(sys)), 1e-7);
  EXPECT_THROW(solve_gabp(sys, 1e-10, 10, GabpOptions{1.0}), ParameterError);
  EXPECT_THROW(solve_gabp(sys, 0.0, 10), ParameterError);
}

TEST(GabpSolve, RoundCapReportsUnconverged) {
  std::mt19937_64 rng(9);
  auto sys = testing::random_dominant_system(60, rng, 0.2);
  auto r = solve_gabp(sys, 1e-14, 2);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.inner_iterations, 2u);
  EXPECT_NEAR(r.final_residual, relative_residual(sys, r.x), 1e-15);
}

TEST(GabpRound, ZeroCavityIsDegenerate) {
  // Round 1 sends P_01 = -A01 A10 / A00 = -1 to node 1, so its cavity toward node 2
  // in round 2 is A11 + P_01 = 0.
  Eigen::MatrixXd a(3, 3);
  a << 1, 1, 0, 1, 1, 0.5, 0, 0.5, 1;
  auto g = GabpGraph::build(dense_system(a, {1.0, 1.0, 1.0}));
  auto s = gabp_round(g, GabpState::initial(g));
  try {
    gabp_round(g, s);
    FAIL() << "expected DegeneracyError";
  } catch (const DegeneracyError& e) {
    EXPECT_EQ(e.from(), 1u);
    EXPECT_EQ(e.to(), 2u);
  }
}

// Per-node mailbox implementation: each node reads only its inbox and
// forms every exclusion sum explicitly.
GabpState mailbox_round(const SymmetricSystem& sys, const GabpGraph& g, const GabpState& prev) {
  const std::size_t n = g.size();
  std::vector<std::map<std::size_t, std::pair<double, double>>> inbox(n);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    inbox[g.edge_to[e]][g.edge_from[e]] = {prev.precision[e], prev.mean[e]};
  }
  GabpState next{Vector(g.edge_count()), Vector(g.edge_count()), prev.round + 1};
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    std::size_t i = g.edge_from[e], j = g.edge_to[e];
    double aii = sys.a.at(i, i);
    double p = aii;
    double h = sys.b[i];
    for (const auto& [k, msg] : inbox[i]) {
      if (k == j) continue;
      p += msg.first;
      h += msg.first * msg.second;
    }
    double pij = -sys.a.at(i, j) * sys.a.at(j, i) / p;
    next.precision[e] = pij;
    next.mean[e] = -sys.a.at(i, j) * (h / p) / pij;
  }
  return next;
}

TEST(GabpRound, MatchesMailboxImplementation) {
  std::mt19937_64 rng(10);
  auto sys = testing::random_dominant_system(50, rng, 0.1);
  auto g = GabpGraph::build(sys);
  GabpState s = GabpState::initial(g);
  for (int r = 0; r < 8; ++r) {
    GabpState global = gabp_round(g, s);
    GabpState local = mailbox_round(sys, g, s);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      EXPECT_NEAR(global.precision[e], local.precision[e], 1e-12 * (1 + std::abs(local.precision[e])));
      EXPECT_NEAR(global.mean[e], local.mean[e], 1e-11 * (1 + std::abs(local.mean[e])));
    }
    s = std::move(global);
  }
}

TEST(Diagnostics, Identity) {
  auto d = convergence_diagnostics(dense_system(Eigen::MatrixXd::Identity(3, 3), {1, 1, 1}));
  EXPECT_TRUE(d.diagonally_dominant);
  EXPECT_NEAR(d.rho_estimate, 0.0, 1e-12);
}

TEST(Diagnostics, DominantTwoByTwo) {
  auto d = convergence_diagnostics(two_by_two());
  EXPECT_TRUE(d.diagonally_dominant);
  // Unit-diagonal normalization leaves off-diagonals of 1/2.
  Eigen::Matrix2d b;
  b << 0, 0.5, 0.5, 0;
  double oracle = b.eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_NEAR(d.rho_estimate, oracle, 1e-8);
  EXPECT_NEAR(d.rho_estimate, 0.5, 1e-8);
}

TEST(Diagnostics, NonDominantTwoByTwo) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 2, 1;
  auto d = convergence_diagnostics(dense_system(a, {1, 1}));
  EXPECT_FALSE(d.diagonally_dominant);
  EXPECT_NEAR(d.rho_estimate, 2.0, 1e-8);
}

TEST(Diagnostics, SpectralRadiusMatchesDenseEigenvalues) {
  std::mt19937_64 rng(12);
  auto sys = testing::random_dominant_system(40, rng, 0.2);
  Eigen::MatrixXd a = testing::to_dense(sys.a);
  Eigen::VectorXd s = a.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd an = s.asDiagonal() * a * s.asDiagonal();
  Eigen::MatrixXd full = (Eigen::MatrixXd::Identity(40, 40) - an).cwiseAbs();
  Eigen::MatrixXd off = an.cwiseAbs();
  off.diagonal().setZero();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(full), e2(off);
  auto d = convergence_diagnostics(sys);
  EXPECT_NEAR(d.rho_estimate, e1.eigenvalues().cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(d.rho_offdiag, e2.eigenvalues().cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(d.rho_offdiag, 1.0);
}

}  // namespace
}  // namespace num
