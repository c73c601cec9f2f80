#include "poro/picard.hpp"

#include "poro/log.hpp"

namespace poro {

FieldState initial_guess_linear(const Mesh& mesh, const DofMap& dofs,
                                const MaterialParams& params, const Loads& loads,
                                double linear_rel_tol) {
  if (dofs.n_free == dofs.n_dofs())
    throw BadSpec("initial_guess_linear requires a nonempty Dirichlet set");
  // A zero previous state makes the density factor identically 1, which is
  // exactly the beta = 0 assembly regardless of params.beta.
  const SparseSystem sys = assemble(mesh, dofs, params, zero_state(mesh), loads);
  LinearSolveStats stats;
  const Eigen::VectorXd u_free = solve_spd(sys, linear_rel_tol, nullptr, &stats);
  PORO_LOG_DEBUG("initial linear solve: " << stats.method << ", " << stats.iterations
                                          << " iterations, residual " << stats.residual);
  return make_state(mesh, expand_solution(dofs, u_free), 0);
}

std::pair<FieldState, PicardReport> picard_solve(const Mesh& mesh, const DofMap& dofs,
                                                 const MaterialParams& params,
                                                 const Loads& loads,
                                                 const PicardOptions& options,
                                                 const FieldState& u0) {
  if (options.tol <= 0) throw BadSpec("picard tolerance must be positive");
  if (options.max_iter < 1) throw BadSpec("picard max_iter must be >= 1");
  if (u0.u.size() != dofs.n_dofs())
    throw InconsistentState("initial guess does not match dof count");

  PicardReport report;
  FieldState state = u0;
  Eigen::VectorXd prev_free = restrict_free(dofs, state.u);

  for (int n = 1; n <= options.max_iter; ++n) {
    SparseSystem sys;
    try {
      sys = assemble(mesh, dofs, params, state, loads);
    } catch (const DegenerateStiffness& e) {
      throw DegenerateStiffness(std::string(e.what()) + " [picard iteration " +
                                std::to_string(n) + "]");
    }

    LinearSolveStats stats;
    const Eigen::VectorXd u_free = solve_spd(sys, options.linear_rel_tol, &prev_free, &stats);
    report.linear_residuals.push_back(stats.residual);
    report.linear_iterations.push_back(stats.iterations);

    const double norm_new = u_free.norm();
    const double diff = (u_free - prev_free).norm();
    double rel;
    if (norm_new < 1e-14) {
      rel = diff;  // relative criterion undefined for the trivial solution
      report.used_absolute_norm = true;
    } else {
      rel = diff / norm_new;
    }
    report.rel_change.push_back(rel);
    report.iterations = n;
    PORO_LOG_DEBUG("picard " << n << ": rel change " << rel << ", inner " << stats.iterations
                             << " its (" << stats.method << ")");

    state = make_state(mesh, expand_solution(dofs, u_free), n);
    prev_free = u_free;

    if (rel < options.tol) {
      report.converged = true;
      return {std::move(state), std::move(report)};
    }
  }

  // Hitting max_iter is reported, not thrown: the caller gets the last
  // iterate and decides.
  return {std::move(state), std::move(report)};
}

}  // namespace poro
