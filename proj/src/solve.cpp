#include <Eigen/IterativeLinearSolvers>

#include "poro/fem.hpp"

namespace poro {

namespace {

template <typename Solver>
Eigen::VectorXd run_cg(Solver& cg, const SparseSystem& system, double rel_tol,
                       const Eigen::VectorXd* guess, LinearSolveStats* stats,
                       const char* method) {
  cg.setTolerance(rel_tol);
  cg.setMaxIterations(std::max<Eigen::Index>(20000, 4 * system.K.rows()));
  cg.compute(system.K);
  if (cg.info() != Eigen::Success)
    throw IndefiniteMatrix("preconditioner setup failed; matrix is not SPD");

  Eigen::VectorXd u;
  if (guess && guess->size() == system.F.size()) {
    u = cg.solveWithGuess(system.F, *guess);
  } else {
    u = cg.solve(system.F);
  }
  if (!u.allFinite())
    throw IndefiniteMatrix("conjugate gradient broke down (non-finite iterate)");

  // K stores the full symmetric matrix, so a plain product is the residual.
  const double fn = system.F.norm();
  const double res = fn > 0 ? (system.K * u - system.F).norm() / fn : 0.0;
  if (stats) {
    stats->iterations = static_cast<int>(cg.iterations());
    stats->residual = res;
    stats->method = method;
  }
  if (res > rel_tol * (1.0 + 1e-12)) {
    throw NotConverged("linear solve stalled at relative residual " + std::to_string(res) +
                       " (target " + std::to_string(rel_tol) + ") after " +
                       std::to_string(cg.iterations()) + " iterations");
  }
  return u;
}

}  // namespace

Eigen::VectorXd solve_spd(const SparseSystem& system, double rel_tol,
                          const Eigen::VectorXd* guess, LinearSolveStats* stats) {
  if (system.K.rows() == 0) return Eigen::VectorXd();
  if (system.F.norm() == 0.0) {
    if (stats) *stats = {0, 0.0, "trivial"};
    return Eigen::VectorXd::Zero(system.F.size());
  }

  // Incomplete-Cholesky-preconditioned CG; Jacobi fallback when the IC
  // factorization does not succeed.
  {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double, Eigen::Lower,
                                                       Eigen::AMDOrdering<int>>>
        cg;
    try {
      return run_cg(cg, system, rel_tol, guess, stats, "pcg-ic");
    } catch (const IndefiniteMatrix&) {
      // fall through to the diagonal preconditioner before concluding
    }
  }
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  return run_cg(cg, system, rel_tol, guess, stats, "pcg-jacobi");
}

}  // namespace poro
