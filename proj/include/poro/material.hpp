#pragma once

#include "poro/errors.hpp"
#include "poro/tensor.hpp"

namespace poro {

/// Positivity floor for the density factor 1 + beta*tr(eps). Operations
/// error out below this instead of clamping, so a loss of ellipticity is
/// surfaced rather than masked.
inline constexpr double kStiffnessFloor = 1e-6;

struct LamePair {
  double lambda = 0.0;  // Pa
  double mu = 0.0;      // Pa
};

/// Coefficients of the strain-from-stress map: eps = phi1*T + phi2*tr(T)*I.
/// At tr(eps) = 0 or beta = 0 they reduce to the classical compliances C1, C2.
struct ComplianceCoeffs {
  double phi1 = 0.0;  // 1/Pa
  double phi2 = 0.0;  // 1/Pa
};

/// Parameters of the density-dependent constitutive family. C1, C2 are the
/// compliance constants; delta1..3 parameterize the general implicit residual.
/// The invertible subclass used by the solver is delta3 = 0, delta1 = delta2 = beta.
struct MaterialParams {
  double E = 0.0;     // Young's modulus (Pa)
  double nu = 0.0;    // Poisson ratio
  double beta = 0.0;  // density coupling
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double C1 = 0.0;  // 1/Pa
  double C2 = 0.0;  // 1/Pa

  /// Builds params from (E, nu, beta) with C1 = (1+nu)/E, C2 = -nu/E and
  /// deltas set to the invertible subclass (delta1 = delta2 = beta, delta3 = 0).
  static MaterialParams isotropic(double E, double nu, double beta = 0.0);
};

/// Classical Lame pair from (E, nu). Throws InvalidPoisson outside -1 < nu < 0.5.
LamePair classical_lame(const MaterialParams& params);

/// Both coefficients of `base` divided by (1 + beta*tr_eps).
/// Throws DegenerateStiffness when the factor falls at or below the floor.
LamePair effective_lame(const LamePair& base, double beta, double tr_eps);

/// phi1 = C1*(1 + delta1*tr_eps), phi2 = C2*(1 + delta2*tr_eps).
ComplianceCoeffs compliance_coeffs(const MaterialParams& params, double tr_eps);

/// T = (2*mu0*eps + lambda0*tr(eps)*I) / (1 + beta*tr(eps)).
SymTensor3 stress_from_strain(const SymTensor3& eps, const MaterialParams& params);

/// eps = (1+nu)(1+beta*tr_eps)/E * T - nu*(1+beta*tr_eps)/E * tr(T) * I,
/// with tr_eps the known dilatation of the state that produced T.
SymTensor3 strain_from_stress(const SymTensor3& T, double tr_eps, const MaterialParams& params);

/// Residual of the general implicit relation:
/// (1 + delta3*tr T)*eps - C1*(1 + delta1*tr eps)*T - C2*(1 + delta2*tr eps)*(tr T)*I.
SymTensor3 implicit_residual(const SymTensor3& T, const SymTensor3& eps,
                             const MaterialParams& params);

/// rho0/rho = 1 + tr_eps. Throws NonphysicalDensity at or below zero.
double density_ratio(double tr_eps);

/// W = (T : eps) / 2.
double strain_energy_density(const SymTensor3& T, const SymTensor3& eps);

}  // namespace poro
