#include "poro/driver.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "poro/gmsh_io.hpp"
#include "poro/log.hpp"

namespace fs = std::filesystem;

namespace poro {

namespace {

/// Writes through a temp file and renames, so concurrent sweep entries and
/// interrupted runs never leave partial outputs behind.
void atomic_write(const std::string& path, const std::function<void(const std::string&)>& writer) {
  const std::string tmp = path + ".tmp";
  writer(tmp);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

void write_json(const nlohmann::json& j, const std::string& path) {
  atomic_write(path, [&](const std::string& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot open '" + p + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + p + "'");
  });
}

void write_manifest(const RunConfig& cfg, const Mesh* mesh, const std::string& command,
                    int threads, const std::string& dir) {
  nlohmann::json j;
  j["tool"] = "porofem";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config_hash"] = fnv1a_hex(cfg.raw.dump());
  if (mesh) j["mesh_hash"] = mesh_hash(*mesh);
  j["threads"] = threads;
  write_json(j, dir + "/manifest.json");
}

std::string ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
  return cfg.out_dir;
}

bool wants(const RunConfig& cfg, const std::string& format) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

std::string beta_label(double beta) {
  std::string s = csv_number(beta);
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

}  // namespace

Mesh build_mesh(const RunConfig& cfg) {
  if (cfg.mesh_path) {
    GmshImportOptions opt;
    opt.require_crack = cfg.require_crack;
    return import_gmsh(*cfg.mesh_path, opt);
  }
  return generate_cross_crack_plate(*cfg.plate);
}

std::vector<DirichletSpec> dirichlet_from_config(const RunConfig& cfg) {
  std::array<bool, 3> comps{true, true, true};
  if (cfg.constrain_only_y) comps = {false, true, false};
  const Vec3 lo = cfg.bc_y_min, hi = cfg.bc_y_max;
  return {
      {"y_min", comps, [lo](const Vec3&) { return lo; }},
      {"y_max", comps, [hi](const Vec3&) { return hi; }},
  };
}

MaterialParams material_from_config(const RunConfig& cfg, double beta) {
  MaterialParams p = MaterialParams::isotropic(cfg.E, cfg.nu, beta);
  // deltas follow the invertible subclass unless explicitly overridden
  if (cfg.delta1 != 0 || cfg.delta2 != 0 || cfg.delta3 != 0) {
    p.delta1 = cfg.delta1;
    p.delta2 = cfg.delta2;
    p.delta3 = cfg.delta3;
  }
  return p;
}

Vec3 tip_outward_axis(const std::string& name) {
  if (name == "A") return Vec3(1, 0, 0);
  if (name == "B") return Vec3(-1, 0, 0);
  if (name == "C") return Vec3(0, 1, 0);
  if (name == "D") return Vec3(0, -1, 0);
  throw NotFound("unknown tip name '" + name + "' (expected A, B, C or D)");
}

std::vector<double> fan_angles_for(const RunConfig& cfg) {
  if (!cfg.angles_deg.empty()) return cfg.angles_deg;
  const double side = cfg.plate ? cfg.plate->side_length : 0.1;
  const double arm = cfg.plate ? cfg.plate->arm_half_length : 0.02;
  return default_fan_angles(side, arm);
}

std::vector<double> default_beta_list() {
  return {-8, -4, -2, -1, -0.5, 0, 0.5, 1, 2, 4, 8};
}

BetaRun solve_beta(const RunConfig& cfg, const Mesh& mesh, const DofMap& dofs, double beta,
                   const FieldState& u0, bool with_probes) {
  BetaRun run;
  run.beta = beta;
  const MaterialParams params = material_from_config(cfg, beta);
  PicardOptions opt;
  opt.tol = cfg.tol;
  opt.max_iter = cfg.max_iter;
  opt.linear_rel_tol = cfg.linear_rel_tol;

  auto [state, report] = picard_solve(mesh, dofs, params, {}, opt, u0);
  run.report = std::move(report);
  run.state = std::move(state);
  if (!run.report.converged)
    throw NotConverged("beta = " + csv_number(beta) + " did not converge within " +
                       std::to_string(cfg.max_iter) + " iterations (last relative change " +
                       csv_number(run.report.rel_change.back()) + ")");

  if (!with_probes) return run;

  const RecoveredFields fields = recover_fields(mesh, run.state, params);
  const Vec3 tip = mesh.tip(cfg.probe_tip).point;
  const Vec3 axis = tip_outward_axis(cfg.probe_tip);

  run.axis_probe = probe_ray(fields, mesh, tip, axis, cfg.probe_length, cfg.probe_samples);
  const auto& near = run.axis_probe.near_tip();
  run.entry = {beta, near.t22, near.eps22, near.w};

  for (const auto& t : mesh.crack_tips) {
    const auto probe = probe_ray(fields, mesh, t.point, tip_outward_axis(t.name),
                                 cfg.probe_length, cfg.probe_samples);
    run.tip_energy[t.name] = probe.near_tip().w;
  }

  const auto angles = fan_angles_for(cfg);
  const auto fan = ray_fan(fields, mesh, tip, axis, angles, cfg.probe_length, cfg.fan_samples);
  for (const auto& probe : fan) run.fan_energy.push_back(probe.near_tip().w);
  return run;
}

SweepComputation sweep_compute(const RunConfig& cfg, const Mesh& mesh, int threads) {
  const std::vector<double> betas = cfg.beta_list.empty() ? default_beta_list() : cfg.beta_list;
  const DofMap dofs = build_dofmap(mesh, dirichlet_from_config(cfg));

  // The shared initial guess: the classical (beta = 0) solution.
  const MaterialParams p0 = material_from_config(cfg, 0.0);
  const FieldState u0 = initial_guess_linear(mesh, dofs, p0, {}, cfg.linear_rel_tol);

  SweepComputation out;
  out.fan_angles = fan_angles_for(cfg);
  out.runs.resize(betas.size());

  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= betas.size()) return;
      try {
        out.runs[i] = solve_beta(cfg, mesh, dofs, betas[i], u0, true);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int n_workers = std::clamp(threads, 1, static_cast<int>(betas.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<SweepEntry> entries;
  for (const auto& run : out.runs) entries.push_back(run.entry);
  out.table = build_sweep_table(entries);

  out.fan.betas = betas;
  for (size_t d = 0; d < out.fan_angles.size(); ++d) {
    out.fan.directions.push_back(d == 0 ? "r" : "r" + std::to_string(d));
    std::vector<double> row;
    for (const auto& run : out.runs) row.push_back(run.fan_energy[d]);
    out.fan.energy.push_back(std::move(row));
  }
  return out;
}

// ----------------------------------------------------------------- commands

int cmd_mesh(const RunConfig& cfg) {
  const std::string dir = ensure_out_dir(cfg);
  const Mesh mesh = build_mesh(cfg);

  atomic_write(dir + "/mesh.msh", [&](const std::string& p) { export_mesh(mesh, p); });

  nlohmann::json stats;
  stats["nodes"] = mesh.n_nodes();
  stats["elements"] = mesh.n_elements();
  stats["kind"] = mesh.kind == ElementKind::hex8 ? "hex8" : "tet4";
  for (const auto& [tag, faces] : mesh.face_tags) stats["face_tags"][tag] = faces.size();
  for (const auto& t : mesh.crack_tips)
    stats["crack_tips"][t.name] = {t.point.x(), t.point.y(), t.point.z()};
  const auto [lo, hi] = mesh.bounding_box();
  stats["bounding_box"] = {{"lo", {lo.x(), lo.y(), lo.z()}}, {"hi", {hi.x(), hi.y(), hi.z()}}};
  write_json(stats, dir + "/mesh_stats.json");
  write_manifest(cfg, &mesh, "mesh", 1, dir);
  PORO_LOG_INFO("mesh: " << mesh.n_nodes() << " nodes, " << mesh.n_elements() << " elements -> "
                         << dir);
  return 0;
}

int cmd_solve(const RunConfig& cfg) {
  if (!cfg.beta) throw ConfigError("config error at /material/beta: required for solve");
  const std::string dir = ensure_out_dir(cfg);
  const Mesh mesh = build_mesh(cfg);
  const DofMap dofs = build_dofmap(mesh, dirichlet_from_config(cfg));

  const MaterialParams p0 = material_from_config(cfg, 0.0);
  const FieldState u0 = initial_guess_linear(mesh, dofs, p0, {}, cfg.linear_rel_tol);
  const bool probes = !mesh.crack_tips.empty();
  BetaRun run = solve_beta(cfg, mesh, dofs, *cfg.beta, u0, probes);

  atomic_write(dir + "/u.csv", [&](const std::string& p) { write_state_csv(run.state.u, p); });
  if (wants(cfg, "vtk")) {
    const MaterialParams params = material_from_config(cfg, *cfg.beta);
    const RecoveredFields fields = recover_fields(mesh, run.state, params);
    atomic_write(dir + "/fields.vtk",
                 [&](const std::string& p) { export_vtk(mesh, fields, &run.state.u, p); });
  }
  if (probes && wants(cfg, "csv")) {
    atomic_write(dir + "/probe.csv",
                 [&](const std::string& p) { export_csv(run.axis_probe, p); });
    FanTable fan;
    fan.betas = {*cfg.beta};
    const auto angles = fan_angles_for(cfg);
    for (size_t d = 0; d < angles.size(); ++d) {
      fan.directions.push_back(d == 0 ? "r" : "r" + std::to_string(d));
      fan.energy.push_back({run.fan_energy[d]});
    }
    atomic_write(dir + "/fan.csv", [&](const std::string& p) { export_csv(fan, p); });
  }
  write_json(picard_report_json(run.report), dir + "/picard_report.json");
  write_manifest(cfg, &mesh, "solve", 1, dir);
  PORO_LOG_INFO("solve beta=" << *cfg.beta << ": " << run.report.iterations
                              << " picard iterations -> " << dir);
  return 0;
}

int cmd_sweep(const RunConfig& cfg, int threads) {
  const std::string dir = ensure_out_dir(cfg);
  const Mesh mesh = build_mesh(cfg);
  const SweepComputation sweep = sweep_compute(cfg, mesh, threads);

  atomic_write(dir + "/sweep_table.csv",
               [&](const std::string& p) { export_csv(sweep.table, p); });
  atomic_write(dir + "/fan_table.csv", [&](const std::string& p) { export_csv(sweep.fan, p); });

  // near-tip W at each tip, one row per tip, one column per beta
  atomic_write(dir + "/tip_energy.csv", [&](const std::string& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot open '" + p + "' for writing");
    out << "tip";
    for (const auto& run : sweep.runs) out << ",beta=" << csv_number(run.beta);
    out << '\n';
    for (const auto& t : mesh.crack_tips) {
      out << t.name;
      for (const auto& run : sweep.runs) out << ',' << csv_number(run.tip_energy.at(t.name));
      out << '\n';
    }
  });

  nlohmann::json log;
  for (const auto& run : sweep.runs) {
    nlohmann::json r = picard_report_json(run.report);
    r["beta"] = run.beta;
    log["runs"].push_back(r);
  }
  write_json(log, dir + "/run_log.json");

  if (wants(cfg, "vtk")) {
    for (const auto& run : sweep.runs) {
      const MaterialParams params = material_from_config(cfg, run.beta);
      const RecoveredFields fields = recover_fields(mesh, run.state, params);
      atomic_write(dir + "/fields_beta_" + beta_label(run.beta) + ".vtk",
                   [&](const std::string& p) { export_vtk(mesh, fields, &run.state.u, p); });
    }
  }
  write_manifest(cfg, &mesh, "sweep", threads, dir);
  PORO_LOG_INFO("sweep over " << sweep.runs.size() << " beta values -> " << dir);
  return 0;
}

int cmd_probe(const RunConfig& cfg, const std::string& state_path) {
  if (!cfg.beta) throw ConfigError("config error at /material/beta: required for probe");
  const std::string dir = ensure_out_dir(cfg);
  const Mesh mesh = build_mesh(cfg);
  const Eigen::VectorXd u = read_state_csv(state_path, 3 * mesh.n_nodes());
  const FieldState state = make_state(mesh, u, 0);
  const MaterialParams params = material_from_config(cfg, *cfg.beta);
  const RecoveredFields fields = recover_fields(mesh, state, params);

  const Vec3 tip = mesh.tip(cfg.probe_tip).point;
  const Vec3 axis = tip_outward_axis(cfg.probe_tip);
  const auto probe = probe_ray(fields, mesh, tip, axis, cfg.probe_length, cfg.probe_samples);
  atomic_write(dir + "/probe.csv", [&](const std::string& p) { export_csv(probe, p); });

  const auto angles = fan_angles_for(cfg);
  const auto fan_probes =
      ray_fan(fields, mesh, tip, axis, angles, cfg.probe_length, cfg.fan_samples);
  FanTable fan;
  fan.betas = {*cfg.beta};
  for (size_t d = 0; d < fan_probes.size(); ++d) {
    fan.directions.push_back(d == 0 ? "r" : "r" + std::to_string(d));
    fan.energy.push_back({fan_probes[d].near_tip().w});
  }
  atomic_write(dir + "/fan.csv", [&](const std::string& p) { export_csv(fan, p); });
  write_manifest(cfg, &mesh, "probe", 1, dir);
  return 0;
}

int cmd_verify(const RunConfig* cfg, const std::string& out_dir) {
  const double E = cfg ? cfg->E : 1.0e5;
  const double nu = cfg ? cfg->nu : 0.3;
  const VerifySummary summary = run_verification(E, nu);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  write_json(to_json(summary), out_dir + "/verification_report.json");

  const auto& lin = summary.linear;
  const auto& non = summary.nonlinear;
  PORO_LOG_INFO("verify: patch " << (summary.patch.pass ? "pass" : "FAIL") << ", linear rate "
                                 << lin.fitted_rate << " (" << (lin.pass ? "pass" : "FAIL")
                                 << "), nonlinear rate " << non.fitted_rate << " ("
                                 << (non.pass ? "pass" : "FAIL") << "), material "
                                 << (summary.material.pass ? "pass" : "FAIL"));
  if (!summary.pass) {
    PORO_LOG_WARN("verification FAILED; see " << out_dir << "/verification_report.json");
    return static_cast<int>(ErrorCode::verify_failed);
  }
  return 0;
}

void write_state_csv(const Eigen::VectorXd& u, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "node,ux,uy,uz\n";
  char buf[120];
  for (Eigen::Index n = 0; 3 * n < u.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(n),
                  u[3 * n], u[3 * n + 1], u[3 * n + 2]);
    out << buf;
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Eigen::VectorXd read_state_csv(const std::string& path, int expected_dofs) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open state file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("node,", 0) != 0)
    throw ParseError("state file '" + path + "' lacks the node,ux,uy,uz header");
  Eigen::VectorXd u(expected_dofs);
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long node = 0;
    double x = 0, y = 0, z = 0;
    if (std::sscanf(line.c_str(), "%ld,%lg,%lg,%lg", &node, &x, &y, &z) != 4)
      throw ParseError("malformed state line: '" + line + "'");
    if (3 * node + 2 >= expected_dofs)
      throw InconsistentState("state file node id " + std::to_string(node) +
                              " exceeds the mesh size");
    u[3 * node] = x;
    u[3 * node + 1] = y;
    u[3 * node + 2] = z;
    ++count;
  }
  if (3 * count != expected_dofs)
    throw InconsistentState("state file has " + std::to_string(count) + " nodes, mesh needs " +
                            std::to_string(expected_dofs / 3));
  return u;
}

nlohmann::json picard_report_json(const PicardReport& report) {
  return {{"converged", report.converged},
          {"iterations", report.iterations},
          {"rel_change", report.rel_change},
          {"linear_residuals", report.linear_residuals},
          {"linear_iterations", report.linear_iterations},
          {"used_absolute_norm", report.used_absolute_norm}};
}

}  // namespace poro
