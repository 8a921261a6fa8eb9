#pragma once

#include "polydg/assembly.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace polydg {

enum class SolveMethod { CG, Cholesky, Auto };

inline SolveMethod parse_solve_method(const std::string& s) {
  if (s == "cg") return SolveMethod::CG;
  if (s == "cholesky") return SolveMethod::Cholesky;
  if (s == "auto") return SolveMethod::Auto;
  throw std::invalid_argument("unknown solve method '" + s + "' (expected cg, cholesky or auto)");
}

inline std::string to_string(SolveMethod m) {
  return m == SolveMethod::CG ? "cg" : (m == SolveMethod::Cholesky ? "cholesky" : "auto");
}

// A solve also counts as converged when its normwise backward error is at this
// level: the relative residual of the best double-precision solution grows like
// eps ||A|| ||x|| / ||b||, which exceeds 1e-10 on fine meshes at high degree.
inline constexpr double kBackwardErrorFloor = 1e-15;

// Systems smaller than this are factorised densely.
inline constexpr int kDenseLimit = 2000;

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 0;  // 0: 10 n
  SolveMethod method = SolveMethod::Auto;
  int refinement_steps = 3;
};

struct SolveReport {
  Eigen::VectorXd x;
  std::string method;
  int iterations = 0;            // CG iterations or refinement steps
  double residual = 0.0;         // ||A x - b|| / ||b|| (0 when b = 0)
  double backward_error = 0.0;   // ||A x - b|| / (||A||_F ||x|| + ||b||)
  std::vector<double> history;   // relative residuals
};

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

// Cholesky factorisation, dense below kDenseLimit and sparse (AMD ordering)
// above.
class SpdFactor {
 public:
  explicit SpdFactor(const SparseMatrix& A, bool force_sparse = false) : n_(static_cast<int>(A.rows())) {
    if (!force_sparse && n_ < kDenseLimit) {
      dense_ = std::make_unique<Eigen::LLT<Eigen::MatrixXd>>(Eigen::MatrixXd(A));
      ok_ = dense_->info() == Eigen::Success;
    } else {
      sparse_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>>();
      sparse_->compute(A);
      ok_ = sparse_->info() == Eigen::Success;
    }
  }
  bool ok() const { return ok_; }
  bool dense() const { return static_cast<bool>(dense_); }
  int size() const { return n_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (dense_) return dense_->solve(b);
    return sparse_->solve(b);
  }

 private:
  int n_ = 0;
  bool ok_ = false;
  std::unique_ptr<Eigen::LLT<Eigen::MatrixXd>> dense_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>> sparse_;
};

namespace detail {

inline double rel_residual(const SparseMatrix& A, const Eigen::VectorXd& x, const Eigen::VectorXd& b, double bnorm) {
  return (b - A * x).norm() / bnorm;
}

inline double backward_error(double rel, double anorm, const Eigen::VectorXd& x, double bnorm) {
  return rel * bnorm / (anorm * x.norm() + bnorm);
}

inline bool converged(const SolveReport& r, double tol) {
  return r.residual <= tol || r.backward_error <= kBackwardErrorFloor;
}

// b - A x with each row accumulated in double-double arithmetic (TwoSum and
// an fma-based TwoProduct), rounded once at the end.
inline Eigen::VectorXd accurate_residual(const SparseMatrix& A, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const Eigen::Index n = b.size();
  Eigen::VectorXd hi = b;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      const Eigen::Index i = it.row();
      const double prod = -it.value() * x[k];
      const double prod_err = std::fma(-it.value(), x[k], -prod);
      const double sum = hi[i] + prod;
      const double bb = sum - hi[i];
      const double sum_err = (hi[i] - (sum - bb)) + (prod - bb);
      hi[i] = sum;
      lo[i] += sum_err + prod_err;
    }
  return hi + lo;
}

// Cholesky solve followed by iterative refinement with accurately computed
// residuals. The refinement mostly improves the smooth error components;
// the residual of the rounded solution itself stays near eps ||A|| ||x||.
inline SolveReport solve_direct(const SparseMatrix& A, const Eigen::VectorXd& b, const SolveOptions& opt,
                                const SpdFactor& factor, const ResidualFn& residual_fn = {}) {
  SolveReport r;
  r.method = factor.dense() ? "cholesky-dense" : "cholesky-sparse";
  const double bnorm = b.norm();
  if (!factor.ok())
    throw SolveError("Cholesky factorisation failed: matrix is not numerically positive definite "
                     "(under-penalised or indefinite)",
                     {});
  const double anorm = A.norm();
  const auto residual = [&](const Eigen::VectorXd& x) {
    return residual_fn ? residual_fn(x) : accurate_residual(A, x, b);
  };
  r.x = factor.solve(b);
  Eigen::VectorXd res = residual(r.x);
  r.history.push_back(res.norm() / bnorm);
  for (int k = 0; k < opt.refinement_steps; ++k) {
    const Eigen::VectorXd dx = factor.solve(res);
    r.x += dx;
    res = residual(r.x);
    r.history.push_back(res.norm() / bnorm);
    r.iterations = k + 1;
    if (dx.norm() <= 4.0 * std::numeric_limits<double>::epsilon() * r.x.norm()) break;
  }
  r.residual = r.history.back();
  r.backward_error = backward_error(r.residual, anorm, r.x, bnorm);
  if (!converged(r, opt.tol))
    throw SolveError("direct solve residual " + std::to_string(r.residual) + " above tolerance (backward error " +
                         std::to_string(r.backward_error) + ")",
                     r.history);
  return r;
}

inline SolveReport solve_cg(const SparseMatrix& A, const Eigen::VectorXd& b, const DofMap& dofs,
                            const SolveOptions& opt) {
  const int n = static_cast<int>(A.rows());
  std::vector<Eigen::LLT<Eigen::MatrixXd>> blocks;
  blocks.reserve(dofs.size.size());
  for (int k = 0; k < dofs.num_blocks(); ++k) {
    const int o = dofs.offset[k], s = dofs.size[k];
    blocks.emplace_back(Eigen::MatrixXd(A.block(o, o, s, s)));
    if (blocks.back().info() != Eigen::Success)
      throw SolveError("block-Jacobi preconditioner: diagonal block " + std::to_string(k) + " is not positive definite",
                       {});
  }
  auto precondition = [&](const Eigen::VectorXd& r) {
    Eigen::VectorXd z(n);
    for (int k = 0; k < dofs.num_blocks(); ++k) {
      const int o = dofs.offset[k], s = dofs.size[k];
      z.segment(o, s) = blocks[k].solve(r.segment(o, s));
    }
    return z;
  };
  SolveReport rep;
  rep.method = "cg";
  const double bnorm = b.norm();
  const double anorm = A.norm();
  rep.x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = precondition(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 10 * n;
  rep.history.push_back(1.0);
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd Ap = A * p;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0))
      throw SolveError("CG breakdown: non-positive curvature (matrix indefinite?)", rep.history);
    const double alpha = rz / pAp;
    rep.x += alpha * p;
    r -= alpha * Ap;
    const double rel = r.norm() / bnorm;
    rep.history.push_back(rel);
    rep.iterations = it;
    if (rel <= opt.tol || backward_error(rel, anorm, rep.x, bnorm) <= kBackwardErrorFloor) {
      rep.residual = rel_residual(A, rep.x, b, bnorm);
      rep.backward_error = backward_error(rep.residual, anorm, rep.x, bnorm);
      if (converged(rep, opt.tol)) return rep;
      // The recurrence drifted: restart from the true residual.
      r = b - A * rep.x;
      z = precondition(r);
      p = z;
      rz = r.dot(z);
      continue;
    }
    z = precondition(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolveError("CG did not converge in " + std::to_string(max_iter) + " iterations", rep.history);
}

}  // namespace detail

// Solves A x = b for symmetric positive definite A. Auto picks dense Cholesky
// below kDenseLimit unknowns and sparse Cholesky above.
// residual, when given, replaces b - A x in the direct solver's refinement
// (see extended_residual).
inline SolveReport solve_spd(const SparseMatrix& A, const Eigen::VectorXd& b, const DofMap& dofs,
                             const SolveOptions& opt = {}, const SpdFactor* factor = nullptr,
                             const ResidualFn& residual = {}) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw std::invalid_argument("solve_spd: dimension mismatch");
  if (b.norm() == 0.0) {
    SolveReport r;
    r.x = Eigen::VectorXd::Zero(b.size());
    r.method = "trivial";
    return r;
  }
  if (opt.method == SolveMethod::CG) return detail::solve_cg(A, b, dofs, opt);
  const bool force_sparse = opt.method == SolveMethod::Cholesky && A.rows() >= kDenseLimit;
  if (factor) return detail::solve_direct(A, b, opt, *factor, residual);
  const SpdFactor own(A, force_sparse);
  return detail::solve_direct(A, b, opt, own, residual);
}

inline SolveReport solve_spd(const DgSystem& s, const SolveOptions& opt = {}) {
  return solve_spd(s.matrix, s.rhs, s.dofs, opt);
}

// Direct solves refine against the long-double operator of d.
inline SolveReport solve_spd(const DgSystem& s, const Discretization& d, const SolveOptions& opt = {}) {
  return solve_spd(s.matrix, s.rhs, s.dofs, opt, nullptr, extended_residual(d, s.rhs));
}

// ---------------------------------------------------------------------------
// Lanczos

struct LanczosResult {
  double min = 0.0;
  double max = 0.0;
  int steps = 0;
  int restarts = 0;
  bool converged = false;
};

using LinearOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Extremal eigenvalues of an operator self-adjoint in the inner product
// <x, y> = x . (M y), M given by `metric` (identity when empty). Full
// reorthogonalisation; a Ritz value counts as converged when its residual
// estimate is below tol |theta|. Breakdown restarts from a fresh random vector
// (at most three times) and the extremes are merged.
inline LanczosResult lanczos_extremes(int n, const LinearOp& op, const LinearOp& metric = {}, double tol = 1e-6,
                                      int max_steps = 150, std::uint64_t seed = 12345) {
  auto M = [&](const Eigen::VectorXd& x) { return metric ? metric(x) : x; };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  LanczosResult out;
  out.min = std::numeric_limits<double>::infinity();
  out.max = -std::numeric_limits<double>::infinity();
  const int steps_cap = std::min(max_steps, n);

  for (int attempt = 0; attempt <= 3; ++attempt) {
    std::vector<Eigen::VectorXd> Q, MQ;
    std::vector<double> alpha, beta;
    Eigen::VectorXd q(n);
    for (int i = 0; i < n; ++i) q[i] = normal(rng);
    Eigen::VectorXd Mq = M(q);
    double nrm = std::sqrt(q.dot(Mq));
    q /= nrm;
    Mq /= nrm;
    bool breakdown = false, converged = false;
    double lo = 0.0, hi = 0.0;
    for (int j = 0; j < steps_cap; ++j) {
      Q.push_back(q);
      MQ.push_back(Mq);
      Eigen::VectorXd w = op(q);
      const double a = w.dot(Mq);
      alpha.push_back(a);
      // Two passes of Gram-Schmidt against all previous vectors.
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < Q.size(); ++k) w -= w.dot(MQ[k]) * Q[k];
      Eigen::VectorXd Mw = M(w);
      const double b = std::sqrt(std::max(0.0, w.dot(Mw)));

      const int m = static_cast<int>(alpha.size());
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      lo = es.eigenvalues()(0);
      hi = es.eigenvalues()(m - 1);
      const double scale = std::max(std::abs(lo), std::abs(hi));
      const double r_lo = b * std::abs(es.eigenvectors()(m - 1, 0));
      const double r_hi = b * std::abs(es.eigenvectors()(m - 1, m - 1));
      out.steps += 1;
      if (b <= 1e-13 * std::max(scale, 1e-300)) {
        breakdown = true;
        converged = true;  // invariant subspace: Ritz values are exact eigenvalues
        break;
      }
      if (m >= 2 && r_lo <= tol * std::abs(lo) && r_hi <= tol * std::abs(hi)) {
        converged = true;
        break;
      }
      beta.push_back(b);
      q = w / b;
      Mq = Mw / b;
    }
    out.min = std::min(out.min, lo);
    out.max = std::max(out.max, hi);
    out.converged = converged;
    if (!breakdown || n == 1 || static_cast<int>(alpha.size()) >= n) break;
    out.restarts = attempt + 1;
  }
  return out;
}

struct ConditionEstimate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double cond = 0.0;
  bool converged = false;
};

// Spectral condition number of an SPD matrix: largest eigenvalue by Lanczos on
// A, smallest by Lanczos on A^{-1} through a Cholesky factor.
inline ConditionEstimate estimate_condition(const SparseMatrix& A, const SpdFactor* factor = nullptr,
                                            double tol = 1e-4) {
  const int n = static_cast<int>(A.rows());
  std::unique_ptr<SpdFactor> own;
  if (!factor) {
    own = std::make_unique<SpdFactor>(A);
    factor = own.get();
  }
  if (!factor->ok()) throw SolveError("estimate_condition: matrix is not positive definite", {});
  const auto top = lanczos_extremes(n, [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(A * x); }, {}, tol);
  const auto inv = lanczos_extremes(n, [&](const Eigen::VectorXd& x) { return factor->solve(x); }, {}, tol);
  ConditionEstimate c;
  c.lambda_max = top.max;
  c.lambda_min = 1.0 / inv.max;
  c.cond = c.lambda_max / c.lambda_min;
  c.converged = top.converged && inv.converged;
  return c;
}

struct GeneralizedExtremes {
  double lambda_min = 0.0;  // coercivity witness
  double lambda_max = 0.0;  // continuity witness
  bool converged = false;
};

// Extremal eigenvalues of A x = lambda G x for SPD A, G. The smallest comes from
// Lanczos on A^{-1} G, the largest from Lanczos on G^{-1} A, both self-adjoint
// in the G inner product.
inline GeneralizedExtremes generalized_extremes(const SparseMatrix& A, const SparseMatrix& G,
                                                const SpdFactor& A_factor, const SpdFactor& G_factor,
                                                double tol = 1e-6) {
  const int n = static_cast<int>(A.rows());
  LinearOp metric = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(G * x); };
  const auto low = lanczos_extremes(
      n, [&](const Eigen::VectorXd& x) { return A_factor.solve(G * x); }, metric, tol);
  const auto high = lanczos_extremes(
      n, [&](const Eigen::VectorXd& x) { return G_factor.solve(A * x); }, metric, tol);
  GeneralizedExtremes g;
  g.lambda_min = 1.0 / low.max;
  g.lambda_max = high.max;
  g.converged = low.converged && high.converged;
  return g;
}

// True when A - shift G admits an LDL^T factorisation with positive pivots,
// i.e. every generalised eigenvalue of (A, G) exceeds `shift`.
inline bool shifted_definite(const SparseMatrix& A, const SparseMatrix& G, double shift) {
  const SparseMatrix S = A - shift * G;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(S);
  if (ldlt.info() != Eigen::Success) return false;
  return ldlt.vectorD().minCoeff() > 0.0;
}

}  // namespace polydg
