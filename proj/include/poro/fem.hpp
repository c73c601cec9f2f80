#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "poro/material.hpp"
#include "poro/mesh.hpp"

namespace poro {

// ---------------------------------------------------------------- elements

struct ShapeEval {
  std::array<double, 8> N{};   // nodal basis values
  std::array<Vec3, 8> dN{};    // reference-space gradients
  int n = 0;
};

/// Nodal basis on the reference cell: Q1 on [-1,1]^3 for hex8, P1 on the
/// unit tetrahedron for tet4.
ShapeEval shape_eval(ElementKind kind, const Vec3& local);

struct QuadratureRule {
  std::vector<Vec3> points;
  std::vector<double> weights;
};

/// hex8: 2x2x2 Gauss (exact to tri-degree 3); tet4: 4-point degree-2 rule.
QuadratureRule quadrature(ElementKind kind);

/// Tensor-product Gauss rule with n points per direction on [-1,1]^3,
/// for error integration beyond the assembly rule.
QuadratureRule gauss_hex(int n);

// ---------------------------------------------------------------- dof map

struct DirichletSpec {
  std::string tag;
  std::array<bool, 3> components{true, true, true};
  std::function<Vec3(const Vec3&)> value;  // evaluated at node coordinates
};

/// Node -> global dof map (3 dofs per node) with the constrained set and
/// prescribed values. Free dofs get a compact index for the reduced system.
struct DofMap {
  int n_nodes = 0;
  std::vector<uint8_t> is_constrained;  // per dof
  std::vector<double> prescribed;       // per dof, 0 where free
  std::vector<int> free_index;          // per dof, -1 where constrained
  int n_free = 0;

  int n_dofs() const { return 3 * n_nodes; }
};

DofMap build_dofmap(const Mesh& mesh, const std::vector<DirichletSpec>& dirichlet);

// ---------------------------------------------------------------- loads

struct Loads {
  std::function<Vec3(const Vec3&)> body_force;  // may be null (zero)
  std::map<std::string, Vec3> tractions;        // face tag -> constant traction
};

// ---------------------------------------------------------------- state

/// Nodal displacement iterate plus the per-quadrature-point dilatation cache
/// the Picard-frozen assembly consumes.
struct FieldState {
  Eigen::VectorXd u;              // full dof vector (3 * n_nodes)
  int iteration = 0;
  std::vector<double> tr_eps_qp;  // element-major, quadrature-point-minor
};

/// Builds a state from a full dof vector, computing the dilatation cache.
FieldState make_state(const Mesh& mesh, Eigen::VectorXd u, int iteration);

/// Zero state on the mesh.
FieldState zero_state(const Mesh& mesh);

/// Max difference between the cached and recomputed dilatations (debug check).
double state_cache_error(const Mesh& mesh, const FieldState& state);

// ---------------------------------------------------------------- system

/// Reduced symmetric system over free dofs.
struct SparseSystem {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd F;
  int n_free() const { return static_cast<int>(K.rows()); }
};

/// Assembles the Picard-frozen bilinear and linear forms: the stiffness
/// integrand is E0[eps(u)] : eps(v) / (1 + beta*tr eps(u_prev)) with E0 the
/// constant classical tensor; F collects body force and Neumann tractions.
/// Dirichlet values are eliminated symmetrically into F. Crack faces carry
/// no traction and contribute nothing.
SparseSystem assemble(const Mesh& mesh, const DofMap& dofs, const MaterialParams& params,
                      const FieldState& state_prev, const Loads& loads);

/// Unreduced stiffness over all dofs, no constraints applied. Used by the
/// verification battery (rigid-body modes, symmetry checks).
Eigen::SparseMatrix<double> assemble_unconstrained(const Mesh& mesh,
                                                   const MaterialParams& params,
                                                   const FieldState& state_prev);

struct LinearSolveStats {
  int iterations = 0;
  double residual = 0.0;       // ||K u - F|| / ||F||
  std::string method;
};

/// Solves the SPD reduced system to ||K u - F||/||F|| <= rel_tol.
/// Deterministic for fixed inputs. Optional warm start.
Eigen::VectorXd solve_spd(const SparseSystem& system, double rel_tol,
                          const Eigen::VectorXd* guess = nullptr,
                          LinearSolveStats* stats = nullptr);

/// Expands a free-dof vector to a full dof vector with prescribed values.
Eigen::VectorXd expand_solution(const DofMap& dofs, const Eigen::VectorXd& free_values);

/// Restricts a full dof vector to free dofs.
Eigen::VectorXd restrict_free(const DofMap& dofs, const Eigen::VectorXd& full);

}  // namespace poro
