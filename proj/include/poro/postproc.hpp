#pragma once

#include <string>
#include <vector>

#include "poro/fem.hpp"

namespace poro {

/// Nodal stress/strain/energy recovered from a converged displacement.
/// The strain is the volume-weighted average of adjacent quadrature-point
/// strains; stress and energy derive from it through the constitutive map,
/// which keeps the (T, eps) pair exactly consistent at every node.
/// Slit-duplicated nodes average only over their own side.
struct RecoveredFields {
  std::vector<SymTensor3> stress;
  std::vector<SymTensor3> strain;
  std::vector<double> energy;
  std::string method = "volume-weighted-qp-average";
};

RecoveredFields recover_fields(const Mesh& mesh, const FieldState& state,
                               const MaterialParams& params);

struct ProbeSample {
  double r = 0;      // distance from the ray origin (m)
  double t22 = 0;    // stress component 22 (Pa)
  double eps22 = 0;  // strain component 22
  double w = 0;      // strain energy density (Pa)
};

struct ProbeResult {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::Zero();  // unit
  std::vector<ProbeSample> samples;
  bool clipped = false;  // ray left the mesh before `length`

  /// First sample = the near-tip value (r_1 = length / n_samples).
  const ProbeSample& near_tip() const;
};

/// Samples the recovered fields at r_k = k*length/n_samples, k = 1..n,
/// interpolating nodal values through the element shape functions. Samples
/// beyond the mesh boundary are dropped with a warning.
ProbeResult probe_ray(const RecoveredFields& fields, const Mesh& mesh, const Vec3& origin,
                      const Vec3& direction, double length, int n_samples);

/// One probe per angle, all from `tip`. Angles are degrees measured
/// counterclockwise in the x-y plane from the tip's outward axis.
std::vector<ProbeResult> ray_fan(const RecoveredFields& fields, const Mesh& mesh,
                                 const Vec3& tip, const Vec3& outward_axis,
                                 const std::vector<double>& angles_deg, double length,
                                 int n_samples);

struct SweepEntry {
  double beta = 0;
  double t22 = 0;
  double eps22 = 0;
  double w = 0;
};

/// Near-tip values per beta plus percent changes against the beta = 0
/// baseline, in the order the entries were supplied.
struct SweepTable {
  std::vector<double> betas;
  std::vector<double> t22, eps22, w;
  std::vector<double> t22_pct, eps22_pct, w_pct;
};

SweepTable build_sweep_table(const std::vector<SweepEntry>& entries);

/// Near-tip energy per direction (rows) and beta (columns).
struct FanTable {
  std::vector<std::string> directions;  // "r", "r1", ...
  std::vector<double> betas;
  std::vector<std::vector<double>> energy;  // [direction][beta]
};

// ------------------------------------------------------------------ output

/// VTK legacy ASCII v3.0 unstructured grid with displacement vectors and the
/// recovered tensors flattened to six scalar arrays each, plus W.
void export_vtk(const Mesh& mesh, const RecoveredFields& fields,
                const Eigen::VectorXd* displacement, const std::string& path);

void export_csv(const ProbeResult& probe, const std::string& path);
void export_csv(const SweepTable& table, const std::string& path);
void export_csv(const FanTable& table, const std::string& path);

/// Formats a double with 9 significant digits, '.' decimal separator.
std::string csv_number(double v);

/// RFC-4180 quoting for text fields.
std::string csv_field(const std::string& s);

}  // namespace poro
