#pragma once

#include <json.hpp>

#include "poro/picard.hpp"

namespace poro {

/// Smooth manufactured displacement with its analytic gradient.
struct ExactField {
  std::function<Vec3(const Vec3&)> u;
  std::function<Eigen::Matrix3d(const Vec3&)> grad_u;  // (grad u)_ij = du_i/dx_j
};

/// Componentwise trigonometric field A*sin(pi x)sin(pi y)sin(pi z) used by
/// the convergence batteries; vanishes on the unit-cube boundary.
ExactField trig_field(double amplitude);

/// Analytic body force -div T for trig_field at beta = 0.
Vec3 trig_body_force(double amplitude, const LamePair& lame, const Vec3& x);

struct PatchCase {
  double beta = 0;
  double max_error = 0;   // max nodal displacement error
  Vec3 worst_point = Vec3::Zero();
  bool pass = false;
};

struct PatchReport {
  std::vector<PatchCase> cases;
  double tolerance = 0;  // 1e-9 * ||A||
  bool pass = false;
};

/// Affine-exactness battery on an 8-element cube: u = A x prescribed on the
/// whole boundary, f = 0; the discrete solution must reproduce the affine
/// field to 1e-9 * ||A|| for every admissible beta.
PatchReport patch_test(double E, double nu, const std::vector<double>& betas);

struct ConvergenceReport {
  std::vector<int> divisions;
  std::vector<double> h;
  std::vector<double> error_l2;
  double fitted_rate = 0;   // least-squares slope of log(e) vs log(h)
  double required_rate = 0;
  bool errors_decrease = false;
  bool pass = false;
};

/// L2 convergence of the beta = 0 problem under the analytic trig body
/// force across uniformly refined unit cubes.
ConvergenceReport mms_linear_convergence(const std::vector<int>& divisions, double E, double nu,
                                         double required_rate = 1.9);

/// Central-difference divergence of the analytic stress field: the
/// independent body-force oracle for nonlinear manufactured runs.
/// Step: fd_step_rel * domain size.
Vec3 mms_nonlinear_body_force(const ExactField& exact, const MaterialParams& params,
                              const Vec3& x, double domain_size = 1.0,
                              double fd_step_rel = 1e-6);

/// Nonlinear (beta != 0) manufactured convergence with the FD body force.
ConvergenceReport mms_nonlinear_convergence(const std::vector<int>& divisions,
                                            const MaterialParams& params,
                                            double required_rate = 1.8);

struct MaterialOracleReport {
  int trials = 0;
  double max_roundtrip_rel = 0;
  double max_residual_rel = 0;
  bool pass = false;
};

/// Randomized strain<->stress round trips (1e-12) and implicit-residual
/// checks (1e-10) over admissible states.
MaterialOracleReport material_oracles(int trials = 10000, unsigned seed = 20240811u);

struct VerifySummary {
  PatchReport patch;
  ConvergenceReport linear;
  ConvergenceReport nonlinear;
  MaterialOracleReport material;
  bool pass = false;
};

/// The full battery with the default configuration; runnable from the CLI.
VerifySummary run_verification(double E, double nu);

nlohmann::json to_json(const VerifySummary& s);

}  // namespace poro
