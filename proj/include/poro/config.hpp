#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "poro/mesh.hpp"

namespace poro {

/// Parsed and validated run configuration. Lengths are meters; JSON values
/// may be numbers (meters) or strings with a unit suffix ("10 cm", "1mm").
struct RunConfig {
  // material
  double E = 0;
  double nu = 0;
  std::optional<double> beta;
  std::vector<double> beta_list;
  double delta1 = 0, delta2 = 0, delta3 = 0;

  // geometry: exactly one of plate / mesh_path
  std::optional<PlateSpec> plate;
  std::optional<std::string> mesh_path;
  bool require_crack = true;

  // boundary conditions
  Vec3 bc_y_min = Vec3(0, -1e-3, 0);
  Vec3 bc_y_max = Vec3(0, +1e-3, 0);
  bool constrain_only_y = false;

  // solver
  double tol = 1e-3;
  int max_iter = 1000;
  double linear_rel_tol = 1e-10;

  // probes
  std::string probe_tip = "A";
  std::vector<double> angles_deg;  // empty: boundary-equispaced default fan
  double probe_length = 0.02;
  int probe_samples = 80;
  int fan_samples = 16;

  // outputs
  std::string out_dir = "out";
  std::vector<std::string> formats = {"csv"};

  nlohmann::json raw;  // canonical form, for hashing and the manifest
};

/// Parses a config object, rejecting unknown keys with a JSON-pointer path.
RunConfig parse_config(const nlohmann::json& j);

/// Loads and parses a JSON config file.
RunConfig load_config(const std::string& path);

/// Applies a dotted-path override ("material.beta=2") to a raw config.
/// The value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& key_value);

/// Parses a length that is either a number (meters) or a string with an
/// m/cm/mm suffix.
double parse_length(const nlohmann::json& v, const std::string& pointer);

/// The default fan: directions from tip A to points equally spaced along
/// the upper half boundary of the plate, expressed as angles (degrees)
/// from the outward axis. 12 directions including the r-axis itself.
std::vector<double> default_fan_angles(double side_length, double arm_half_length,
                                       int n_directions = 12);

/// FNV-1a hash of a byte string, hex-encoded; used for run manifests.
std::string fnv1a_hex(const std::string& bytes);

/// Content hash of a mesh (coordinates, connectivity, tags).
std::string mesh_hash(const Mesh& mesh);

}  // namespace poro
