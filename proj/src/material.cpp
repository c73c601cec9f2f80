#include "poro/material.hpp"

#include <sstream>

namespace poro {

namespace {

void check_poisson(double E, double nu) {
  if (E <= 0.0) throw InvalidPoisson("Young's modulus must be positive, got E=" + std::to_string(E));
  if (nu <= -1.0 || nu >= 0.5) {
    std::ostringstream os;
    os << "Poisson ratio must satisfy -1 < nu < 0.5 (nu = 0.5 is the incompressible limit), got nu=" << nu;
    throw InvalidPoisson(os.str());
  }
}

double density_factor(double beta, double tr_eps) {
  double f = 1.0 + beta * tr_eps;
  if (f <= kStiffnessFloor) {
    std::ostringstream os;
    os << "degenerate stiffness: 1 + beta*tr(eps) = " << f << " <= floor " << kStiffnessFloor
       << " (beta=" << beta << ", tr_eps=" << tr_eps << ")";
    throw DegenerateStiffness(os.str());
  }
  return f;
}

}  // namespace

MaterialParams MaterialParams::isotropic(double E, double nu, double beta) {
  check_poisson(E, nu);
  MaterialParams p;
  p.E = E;
  p.nu = nu;
  p.beta = beta;
  p.delta1 = beta;
  p.delta2 = beta;
  p.delta3 = 0.0;
  p.C1 = (1.0 + nu) / E;
  p.C2 = -nu / E;
  return p;
}

LamePair classical_lame(const MaterialParams& params) {
  check_poisson(params.E, params.nu);
  LamePair lame;
  lame.lambda = params.E * params.nu / ((1.0 + params.nu) * (1.0 - 2.0 * params.nu));
  lame.mu = params.E / (2.0 * (1.0 + params.nu));
  return lame;
}

LamePair effective_lame(const LamePair& base, double beta, double tr_eps) {
  double f = density_factor(beta, tr_eps);
  return {base.lambda / f, base.mu / f};
}

ComplianceCoeffs compliance_coeffs(const MaterialParams& params, double tr_eps) {
  return {params.C1 * (1.0 + params.delta1 * tr_eps),
          params.C2 * (1.0 + params.delta2 * tr_eps)};
}

SymTensor3 stress_from_strain(const SymTensor3& eps, const MaterialParams& params) {
  LamePair lame = classical_lame(params);
  double tr = eps.trace();
  double f = density_factor(params.beta, tr);
  SymTensor3 t = 2.0 * lame.mu * eps + lame.lambda * tr * SymTensor3::identity();
  return t * (1.0 / f);
}

SymTensor3 strain_from_stress(const SymTensor3& T, double tr_eps, const MaterialParams& params) {
  double f = 1.0 + params.beta * tr_eps;
  double a = (1.0 + params.nu) * f / params.E;
  double b = params.nu * f / params.E;
  return a * T - b * T.trace() * SymTensor3::identity();
}

SymTensor3 implicit_residual(const SymTensor3& T, const SymTensor3& eps,
                             const MaterialParams& params) {
  double tr_t = T.trace();
  double tr_e = eps.trace();
  SymTensor3 r = (1.0 + params.delta3 * tr_t) * eps;
  r += (-params.C1 * (1.0 + params.delta1 * tr_e)) * T;
  r += (-params.C2 * (1.0 + params.delta2 * tr_e) * tr_t) * SymTensor3::identity();
  return r;
}

double density_ratio(double tr_eps) {
  double r = 1.0 + tr_eps;
  if (r <= 0.0) {
    throw NonphysicalDensity("density ratio 1 + tr(eps) = " + std::to_string(r) +
                             " is nonpositive");
  }
  return r;
}

double strain_energy_density(const SymTensor3& T, const SymTensor3& eps) {
  return 0.5 * T.ddot(eps);
}

}  // namespace poro
