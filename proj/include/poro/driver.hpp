#pragma once

#include <map>

#include "poro/config.hpp"
#include "poro/picard.hpp"
#include "poro/postproc.hpp"

namespace poro {

/// Mesh from the config geometry (generator or Gmsh import).
Mesh build_mesh(const RunConfig& cfg);

/// Full-vector Dirichlet data on y_min / y_max (or y-component only when
/// constrain_only_y is set).
std::vector<DirichletSpec> dirichlet_from_config(const RunConfig& cfg);

MaterialParams material_from_config(const RunConfig& cfg, double beta);

/// Outward in-plane axis of a named tip (A: +x, B: -x, C: +y, D: -y).
Vec3 tip_outward_axis(const std::string& name);

/// One solve at `beta` from the shared initial guess, with post-processing.
struct BetaRun {
  double beta = 0;
  PicardReport report;
  FieldState state;
  SweepEntry entry;                         // near-tip trio at the probe tip
  std::map<std::string, double> tip_energy; // near-tip W per tip
  std::vector<double> fan_energy;           // near-tip W per fan direction
  ProbeResult axis_probe;
};

BetaRun solve_beta(const RunConfig& cfg, const Mesh& mesh, const DofMap& dofs, double beta,
                   const FieldState& u0, bool with_probes);

struct SweepComputation {
  std::vector<BetaRun> runs;  // beta_list order
  SweepTable table;
  FanTable fan;
  std::vector<double> fan_angles;
};

/// The sweep: one shared beta = 0 linear solution as the initial guess for
/// every entry, entries independent (and safely concurrent).
SweepComputation sweep_compute(const RunConfig& cfg, const Mesh& mesh, int threads);

/// Effective fan angles for a config (explicit list or the boundary fan).
std::vector<double> fan_angles_for(const RunConfig& cfg);

// ----------------------------------------------------------------- commands

int cmd_mesh(const RunConfig& cfg);
int cmd_solve(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg, int threads);
int cmd_probe(const RunConfig& cfg, const std::string& state_path);
int cmd_verify(const RunConfig* cfg, const std::string& out_dir);

/// Nodal displacement CSV ("node,ux,uy,uz", 17 significant digits).
void write_state_csv(const Eigen::VectorXd& u, const std::string& path);
Eigen::VectorXd read_state_csv(const std::string& path, int expected_dofs);

nlohmann::json picard_report_json(const PicardReport& report);

/// Default 11-value beta sweep (ascending), used when the config gives none.
std::vector<double> default_beta_list();

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace poro
