#include "polydg/solve.hpp"
#include "polydg/assembly.hpp"
#include "polydg/voronoi.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace polydg;

namespace {

SparseMatrix diagonal(const std::vector<double>& d) {
  SparseMatrix A(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < d.size(); ++i) t.emplace_back(int(i), int(i), d[i]);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

DgSystem small_system(int p) {
  static const PolyMesh m = generate_voronoi(Rect{Point(0, 0), Point(1, 1)}, 16, 5, 13);
  const std::vector<int> deg(static_cast<std::size_t>(m.num_cells()), p);
  const Discretization d = make_discretization(m, deg, make_penalties(m, deg, {}), {});
  auto f = [](const Point& x) { return std::sin(3 * x.x()) + x.y(); };
  return assemble_system(d, f, [](const Point&) { return 0.0; }, [](const Point&, const Vec2&) { return 0.0; });
}

}  // namespace

TEST(Solve, ParseMethod) {
  EXPECT_EQ(parse_solve_method("cg"), SolveMethod::CG);
  EXPECT_EQ(parse_solve_method("cholesky"), SolveMethod::Cholesky);
  EXPECT_EQ(parse_solve_method("auto"), SolveMethod::Auto);
  EXPECT_THROW(parse_solve_method("lu"), std::invalid_argument);
}

TEST(Solve, DirectAndCgAgree) {
  const DgSystem s = small_system(3);
  SolveOptions direct;
  direct.method = SolveMethod::Cholesky;
  SolveOptions cg;
  cg.method = SolveMethod::CG;
  cg.tol = 1e-12;
  const SolveReport a = solve_spd(s, direct);
  const SolveReport b = solve_spd(s, cg);
  EXPECT_LE(a.residual, 1e-10);
  EXPECT_TRUE(b.residual <= 1e-12 || b.backward_error <= kBackwardErrorFloor);
  EXPECT_LT((a.x - b.x).norm(), 1e-6 * a.x.norm());
  EXPECT_FALSE(b.history.empty());
}

// Property: on success the residual contract or the round-off backward error bound holds.
TEST(Solve, ReportedResidualIsTrue) {
  for (int p : {2, 5}) {
    const DgSystem s = small_system(p);
    for (SolveMethod m : {SolveMethod::CG, SolveMethod::Cholesky}) {
      SolveOptions o;
      o.method = m;
      const SolveReport r = solve_spd(s, o);
      // Reference residual in long double; a plain double product is too noisy here.
      std::vector<long double> res(s.rhs.data(), s.rhs.data() + s.rhs.size());
      for (int k = 0; k < s.matrix.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(s.matrix, k); it; ++it)
          res[it.row()] -= static_cast<long double>(it.value()) * r.x[k];
      long double sq = 0;
      for (long double v : res) sq += v * v;
      const double rel = static_cast<double>(std::sqrt(sq)) / s.rhs.norm();
      if (m == SolveMethod::Cholesky)
        EXPECT_NEAR(r.residual, rel, 1e-2 * rel);
      else
        EXPECT_NEAR(r.residual, rel, 0.5 * rel) << "cg p=" << p;
      EXPECT_TRUE(r.residual <= o.tol || r.backward_error <= kBackwardErrorFloor) << "p=" << p;
    }
  }
}

TEST(Solve, CgFailureCarriesHistory) {
  const DgSystem s = small_system(3);
  SolveOptions cg;
  cg.method = SolveMethod::CG;
  cg.max_iter = 2;
  try {
    solve_spd(s, cg);
    FAIL() << "expected SolveError";
  } catch (const SolveError& e) {
    EXPECT_EQ(e.history().size(), 3u);
  }
}

TEST(Solve, ZeroRhsIsTrivial) {
  const SparseMatrix A = diagonal({1, 2, 3});
  const SolveReport r = solve_spd(A, Eigen::VectorXd::Zero(3), DofMap::from_sizes(std::vector<int>{3}));
  EXPECT_EQ(r.method, "trivial");
  EXPECT_EQ(r.x.norm(), 0.0);
}

TEST(Condition, IdentityHasConditionOne) {
  const SparseMatrix I = diagonal(std::vector<double>(40, 1.0));
  const ConditionEstimate c = estimate_condition(I);
  EXPECT_NEAR(c.cond, 1.0, 1e-8);
  EXPECT_TRUE(c.converged);
}

TEST(Condition, TwoByTwoDiagonal) {
  const ConditionEstimate c = estimate_condition(diagonal({1.0, 10.0}));
  EXPECT_NEAR(c.cond, 10.0, 1e-8);
  EXPECT_NEAR(c.lambda_min, 1.0, 1e-10);
  EXPECT_NEAR(c.lambda_max, 10.0, 1e-9);
}

// Oracle: dense self-adjoint eigensolver.
TEST(Condition, MatchesDenseEigenvalues) {
  const DgSystem s = small_system(2);
  const Eigen::MatrixXd D(s.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  const ConditionEstimate c = estimate_condition(s.matrix, nullptr, 1e-8);
  const double want = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  EXPECT_NEAR(c.cond, want, 1e-4 * want);
}

// Property: a symmetric permutation leaves the spectrum unchanged.
TEST(Condition, PermutationInvariant) {
  const DgSystem s = small_system(2);
  const int n = static_cast<int>(s.matrix.rows());
  Eigen::VectorXi idx = Eigen::VectorXi::LinSpaced(n, 0, n - 1);
  std::mt19937 rng(3);
  std::shuffle(idx.data(), idx.data() + n, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P(idx);
  SparseMatrix B;
  B = s.matrix.twistedBy(P);
  const ConditionEstimate a = estimate_condition(s.matrix, nullptr, 1e-8);
  const ConditionEstimate b = estimate_condition(B, nullptr, 1e-8);
  EXPECT_NEAR(a.cond, b.cond, 1e-5 * a.cond);
}

TEST(Generalized, DiagonalPencil) {
  const SparseMatrix A = diagonal({2, 6, 12});
  const SparseMatrix G = diagonal({1, 2, 3});
  const SpdFactor fa(A), fg(G);
  const GeneralizedExtremes g = generalized_extremes(A, G, fa, fg, 1e-10);
  EXPECT_NEAR(g.lambda_min, 2.0, 1e-9);
  EXPECT_NEAR(g.lambda_max, 4.0, 1e-9);
  EXPECT_TRUE(shifted_definite(A, G, 1.9));
  EXPECT_FALSE(shifted_definite(A, G, 2.1));
}

TEST(Generalized, MatchesDenseGeneralizedSolver) {
  const DgSystem s = small_system(2);
  const std::vector<int> deg(16, 2);
  const PolyMesh m = generate_voronoi(Rect{Point(0, 0), Point(1, 1)}, 16, 5, 13);
  const Discretization d = make_discretization(m, deg, make_penalties(m, deg, {}), {});
  const SparseMatrix G = assemble_dg_gram(d);
  const SpdFactor fa(s.matrix), fg(G);
  const GeneralizedExtremes g = generalized_extremes(s.matrix, G, fa, fg, 1e-10);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(s.matrix), Eigen::MatrixXd(G)};
  EXPECT_NEAR(g.lambda_min, es.eigenvalues().minCoeff(), 1e-6 * es.eigenvalues().minCoeff());
  EXPECT_NEAR(g.lambda_max, es.eigenvalues().maxCoeff(), 1e-6 * es.eigenvalues().maxCoeff());
}
