#pragma once

#include "poro/fem.hpp"

namespace poro {

struct PicardOptions {
  double tol = 1e-3;             // relative-change stopping tolerance
  int max_iter = 1000;
  double linear_rel_tol = 1e-10; // inner solve tolerance
};

struct PicardReport {
  std::vector<double> rel_change;        // one entry per iteration
  std::vector<double> linear_residuals;  // achieved inner residuals
  std::vector<int> linear_iterations;
  bool converged = false;
  int iterations = 0;
  bool used_absolute_norm = false;  // zero-solution fallback engaged
};

/// Classical linear elasticity solution (the beta = 0 problem), used as the
/// Picard starting iterate.
FieldState initial_guess_linear(const Mesh& mesh, const DofMap& dofs,
                                const MaterialParams& params, const Loads& loads,
                                double linear_rel_tol = 1e-10);

/// Outer fixed-point iteration: solve with the density factor frozen at the
/// previous iterate until ||u^{n+1} - u^n|| / ||u^{n+1}|| < tol over free
/// dofs (absolute fallback when the new iterate is numerically zero).
std::pair<FieldState, PicardReport> picard_solve(const Mesh& mesh, const DofMap& dofs,
                                                 const MaterialParams& params,
                                                 const Loads& loads,
                                                 const PicardOptions& options,
                                                 const FieldState& u0);

}  // namespace poro
