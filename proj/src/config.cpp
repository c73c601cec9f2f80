#include "poro/config.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace poro {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
  throw ConfigError("config error at " + pointer + ": " + what);
}

void require_keys(const json& obj, const std::string& pointer,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(pointer, "expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) fail(pointer + "/" + key, "unknown key");
}

double number_at(const json& obj, const std::string& pointer, const std::string& key,
                 double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(pointer + "/" + key, "expected a number");
  return v.get<double>();
}

int int_at(const json& obj, const std::string& pointer, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(pointer + "/" + key, "expected an integer");
  return v.get<int>();
}

Vec3 length_vec3(const json& v, const std::string& pointer) {
  if (!v.is_array() || v.size() != 3) fail(pointer, "expected an array of 3 lengths");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    out[i] = parse_length(v.at(static_cast<size_t>(i)), pointer + "/" + std::to_string(i));
    if (!std::isfinite(out[i])) fail(pointer, "length must be finite");
  }
  return out;
}

}  // namespace

double parse_length(const nlohmann::json& v, const std::string& pointer) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) fail(pointer, "expected a number (meters) or a string with a unit suffix");
  const std::string s = v.get<std::string>();
  size_t consumed = 0;
  double value = 0;
  try {
    value = std::stod(s, &consumed);
  } catch (const std::exception&) {
    fail(pointer, "cannot parse length '" + s + "'");
  }
  std::string unit = s.substr(consumed);
  unit.erase(std::remove(unit.begin(), unit.end(), ' '), unit.end());
  if (unit.empty() || unit == "m") return value;
  if (unit == "cm") return value * 1e-2;
  if (unit == "mm") return value * 1e-3;
  fail(pointer, "unknown length unit '" + unit + "' (supported: m, cm, mm)");
}

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.raw = j;

  require_keys(j, "", {"schema_version", "material", "geometry", "bcs", "solver", "probes",
                       "outputs"});
  if (j.contains("schema_version")) {
    const auto& v = j.at("schema_version");
    if (!v.is_number_integer() || v.get<int>() != 1)
      fail("/schema_version", "unsupported schema version (supported: 1)");
  }

  // material -----------------------------------------------------------
  if (!j.contains("material")) fail("/material", "missing required section");
  const auto& mat = j.at("material");
  require_keys(mat, "/material",
               {"E", "nu", "beta", "beta_list", "delta1", "delta2", "delta3"});
  if (!mat.contains("E")) fail("/material/E", "missing required key");
  if (!mat.contains("nu")) fail("/material/nu", "missing required key");
  cfg.E = number_at(mat, "/material", "E", 0.0);
  cfg.nu = number_at(mat, "/material", "nu", 0.0);
  if (mat.contains("beta")) cfg.beta = number_at(mat, "/material", "beta", 0.0);
  if (mat.contains("beta_list")) {
    const auto& bl = mat.at("beta_list");
    if (!bl.is_array() || bl.empty()) fail("/material/beta_list", "expected a nonempty array");
    for (size_t i = 0; i < bl.size(); ++i) {
      if (!bl.at(i).is_number())
        fail("/material/beta_list/" + std::to_string(i), "expected a number");
      cfg.beta_list.push_back(bl.at(i).get<double>());
    }
  }
  cfg.delta1 = number_at(mat, "/material", "delta1", 0.0);
  cfg.delta2 = number_at(mat, "/material", "delta2", 0.0);
  cfg.delta3 = number_at(mat, "/material", "delta3", 0.0);

  // geometry ------------------------------------------------------------
  if (j.contains("geometry")) {
    const auto& geo = j.at("geometry");
    require_keys(geo, "/geometry", {"plate", "mesh_path", "require_crack"});
    if (geo.contains("plate") && geo.contains("mesh_path"))
      fail("/geometry", "give exactly one of 'plate' or 'mesh_path'");
    if (geo.contains("mesh_path")) {
      if (!geo.at("mesh_path").is_string()) fail("/geometry/mesh_path", "expected a string");
      cfg.mesh_path = geo.at("mesh_path").get<std::string>();
    }
    if (geo.contains("require_crack")) {
      if (!geo.at("require_crack").is_boolean())
        fail("/geometry/require_crack", "expected a boolean");
      cfg.require_crack = geo.at("require_crack").get<bool>();
    }
    if (geo.contains("plate")) {
      const auto& pl = geo.at("plate");
      require_keys(pl, "/geometry/plate",
                   {"side_length", "thickness", "arm_half_length", "nx", "ny", "nz",
                    "refinement_levels"});
      PlateSpec spec;
      if (pl.contains("side_length"))
        spec.side_length = parse_length(pl.at("side_length"), "/geometry/plate/side_length");
      if (pl.contains("thickness"))
        spec.thickness = parse_length(pl.at("thickness"), "/geometry/plate/thickness");
      if (pl.contains("arm_half_length"))
        spec.arm_half_length =
            parse_length(pl.at("arm_half_length"), "/geometry/plate/arm_half_length");
      spec.nx = int_at(pl, "/geometry/plate", "nx", spec.nx);
      spec.ny = int_at(pl, "/geometry/plate", "ny", spec.ny);
      spec.nz = int_at(pl, "/geometry/plate", "nz", spec.nz);
      spec.refinement_levels = int_at(pl, "/geometry/plate", "refinement_levels",
                                      spec.refinement_levels);
      cfg.plate = spec;
    }
  }
  if (!cfg.plate && !cfg.mesh_path) {
    PlateSpec spec;  // the desk-scale defaults
    spec.refinement_levels = 1;
    cfg.plate = spec;
  }

  // bcs -----------------------------------------------------------------
  if (j.contains("bcs")) {
    const auto& bcs = j.at("bcs");
    require_keys(bcs, "/bcs", {"y_min", "y_max", "constrain_only_y"});
    if (bcs.contains("y_min")) cfg.bc_y_min = length_vec3(bcs.at("y_min"), "/bcs/y_min");
    if (bcs.contains("y_max")) cfg.bc_y_max = length_vec3(bcs.at("y_max"), "/bcs/y_max");
    if (bcs.contains("constrain_only_y")) {
      if (!bcs.at("constrain_only_y").is_boolean())
        fail("/bcs/constrain_only_y", "expected a boolean");
      cfg.constrain_only_y = bcs.at("constrain_only_y").get<bool>();
    }
  }

  // solver ----------------------------------------------------------------
  if (j.contains("solver")) {
    const auto& sol = j.at("solver");
    require_keys(sol, "/solver", {"tol", "max_iter", "linear_rel_tol"});
    cfg.tol = number_at(sol, "/solver", "tol", cfg.tol);
    cfg.max_iter = int_at(sol, "/solver", "max_iter", cfg.max_iter);
    cfg.linear_rel_tol = number_at(sol, "/solver", "linear_rel_tol", cfg.linear_rel_tol);
    if (cfg.tol <= 0) fail("/solver/tol", "must be positive");
    if (cfg.max_iter < 1) fail("/solver/max_iter", "must be >= 1");
    if (cfg.linear_rel_tol <= 0) fail("/solver/linear_rel_tol", "must be positive");
  }

  // probes ----------------------------------------------------------------
  if (j.contains("probes")) {
    const auto& pr = j.at("probes");
    require_keys(pr, "/probes", {"tip", "angles_deg", "length", "samples", "fan_samples"});
    if (pr.contains("tip")) {
      if (!pr.at("tip").is_string()) fail("/probes/tip", "expected a string");
      cfg.probe_tip = pr.at("tip").get<std::string>();
    }
    if (pr.contains("angles_deg")) {
      const auto& an = pr.at("angles_deg");
      if (!an.is_array() || an.empty()) fail("/probes/angles_deg", "expected a nonempty array");
      for (size_t i = 0; i < an.size(); ++i) {
        if (!an.at(i).is_number())
          fail("/probes/angles_deg/" + std::to_string(i), "expected a number");
        cfg.angles_deg.push_back(an.at(i).get<double>());
      }
    }
    if (pr.contains("length"))
      cfg.probe_length = parse_length(pr.at("length"), "/probes/length");
    cfg.probe_samples = int_at(pr, "/probes", "samples", cfg.probe_samples);
    cfg.fan_samples = int_at(pr, "/probes", "fan_samples", cfg.fan_samples);
    if (cfg.probe_samples < 2) fail("/probes/samples", "must be >= 2");
    if (cfg.fan_samples < 2) fail("/probes/fan_samples", "must be >= 2");
    if (cfg.probe_length <= 0) fail("/probes/length", "must be positive");
  }

  // outputs -----------------------------------------------------------------
  if (j.contains("outputs")) {
    const auto& out = j.at("outputs");
    require_keys(out, "/outputs", {"directory", "formats"});
    if (out.contains("directory")) {
      if (!out.at("directory").is_string()) fail("/outputs/directory", "expected a string");
      cfg.out_dir = out.at("directory").get<std::string>();
    }
    if (out.contains("formats")) {
      const auto& fm = out.at("formats");
      if (!fm.is_array()) fail("/outputs/formats", "expected an array");
      cfg.formats.clear();
      for (size_t i = 0; i < fm.size(); ++i) {
        if (!fm.at(i).is_string())
          fail("/outputs/formats/" + std::to_string(i), "expected a string");
        const std::string f = fm.at(i).get<std::string>();
        if (f != "csv" && f != "vtk")
          fail("/outputs/formats/" + std::to_string(i), "unknown format '" + f + "'");
        cfg.formats.push_back(f);
      }
    }
  }

  if (!cfg.bc_y_min.allFinite() || !cfg.bc_y_max.allFinite())
    fail("/bcs", "displacement vectors must be finite");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void apply_override(nlohmann::json& j, const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like section.key=value, got '" + key_value + "'");
  const std::string path = key_value.substr(0, eq);
  const std::string value = key_value.substr(eq + 1);

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;  // plain string
  }

  nlohmann::json* node = &j;
  std::istringstream keys(path);
  std::string key, next;
  std::getline(keys, key, '.');
  while (std::getline(keys, next, '.')) {
    node = &(*node)[key];
    key = next;
  }
  (*node)[key] = parsed;
}

std::vector<double> default_fan_angles(double side_length, double arm_half_length,
                                       int n_directions) {
  if (n_directions < 2) throw BadSpec("fan needs at least 2 directions");
  const double half = side_length / 2;
  const double total = 2.0 * side_length;  // right edge + top edge + left edge
  std::vector<double> angles;
  for (int i = 0; i < n_directions; ++i) {
    const double s = total * static_cast<double>(i) / (n_directions - 1);
    double bx, by;
    if (s <= half) {
      bx = half;
      by = s;
    } else if (s <= half + side_length) {
      bx = half - (s - half);
      by = half;
    } else {
      bx = -half;
      by = half - (s - half - side_length);
    }
    angles.push_back(std::atan2(by, bx - arm_half_length) * 180.0 / std::numbers::pi);
  }
  angles.front() = 0.0;
  angles.back() = 180.0;
  return angles;
}

std::string fnv1a_hex(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string mesh_hash(const Mesh& mesh) {
  std::string bytes;
  bytes.reserve(static_cast<size_t>(mesh.n_nodes()) * 24 + static_cast<size_t>(mesh.n_elements()) * 32);
  auto put = [&bytes](const void* p, size_t n) {
    bytes.append(static_cast<const char*>(p), n);
  };
  for (const auto& p : mesh.nodes) {
    const double c[3] = {p.x(), p.y(), p.z()};
    put(c, sizeof c);
  }
  const int npe = nodes_per_element(mesh.kind);
  for (const auto& conn : mesh.elements) put(conn.data(), sizeof(int) * static_cast<size_t>(npe));
  for (const auto& [tag, faces] : mesh.face_tags) {
    bytes += tag;
    for (const auto& f : faces) put(f.n.data(), sizeof(int) * static_cast<size_t>(f.nverts));
  }
  return fnv1a_hex(bytes);
}

}  // namespace poro
