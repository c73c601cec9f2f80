#include <CLI11.hpp>
#include <iostream>

#include "poro/driver.hpp"
#include "poro/log.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> overrides;
  int threads = 1;
  std::string state_path;
};

poro::RunConfig load(const CommonOpts& opts, bool config_required) {
  nlohmann::json j = nlohmann::json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw poro::IoError("cannot open config file '" + opts.config_path + "'");
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw poro::ConfigError("config file '" + opts.config_path +
                              "' is not valid JSON: " + e.what());
    }
  } else if (config_required) {
    throw poro::ConfigError("--config is required for this command");
  } else {
    j["material"] = {{"E", 1.0e5}, {"nu", 0.3}};
  }
  for (const auto& kv : opts.overrides) poro::apply_override(j, kv);
  poro::RunConfig cfg = poro::parse_config(j);
  if (!opts.output_dir.empty()) cfg.out_dir = opts.output_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"porofem: finite elements for porous elastic solids with "
               "density-dependent moduli and star cracks"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&opts](CLI::App* cmd, bool with_threads = false) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration");
    cmd->add_option("--output", opts.output_dir, "output directory (overrides config)");
    cmd->add_option("--override", opts.overrides,
                    "config override, section.key=value (repeatable)");
    if (with_threads)
      cmd->add_option("--threads", opts.threads, "worker threads for sweep entries")
          ->check(CLI::PositiveNumber);
  };

  auto* mesh_cmd = app.add_subcommand("mesh", "generate or import the mesh and emit stats");
  add_common(mesh_cmd);
  auto* solve_cmd = app.add_subcommand("solve", "run one beta end to end");
  add_common(solve_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "run the beta list against the beta=0 baseline");
  add_common(sweep_cmd, true);
  auto* probe_cmd = app.add_subcommand("probe", "ray/fan probes on a stored solution");
  add_common(probe_cmd);
  probe_cmd->add_option("--state", opts.state_path, "u.csv from a previous solve")->required();
  auto* verify_cmd = app.add_subcommand("verify", "run the verification batteries");
  add_common(verify_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (mesh_cmd->parsed()) return poro::cmd_mesh(load(opts, true));
    if (solve_cmd->parsed()) return poro::cmd_solve(load(opts, true));
    if (sweep_cmd->parsed()) return poro::cmd_sweep(load(opts, true), opts.threads);
    if (probe_cmd->parsed()) return poro::cmd_probe(load(opts, true), opts.state_path);
    if (verify_cmd->parsed()) {
      if (!opts.config_path.empty()) {
        const poro::RunConfig cfg = load(opts, false);
        return poro::cmd_verify(&cfg, cfg.out_dir);
      }
      const poro::RunConfig cfg = load(opts, false);
      return poro::cmd_verify(nullptr, cfg.out_dir);
    }
  } catch (const poro::Error& e) {
    std::cerr << "porofem error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "porofem internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
