#include <cstdio>
#include <fstream>

#include "poro/postproc.hpp"

namespace poro {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.imbue(std::locale::classic());
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

void export_vtk(const Mesh& mesh, const RecoveredFields& fields,
                const Eigen::VectorXd* displacement, const std::string& path) {
  if (static_cast<int>(fields.stress.size()) != mesh.n_nodes())
    throw InconsistentState("recovered fields do not match mesh node count");
  auto out = open_out(path);

  out << "# vtk DataFile Version 3.0\n";
  out << "porofem recovered fields\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";

  out << "POINTS " << mesh.n_nodes() << " double\n";
  for (const auto& p : mesh.nodes)
    out << csv_number(p.x()) << ' ' << csv_number(p.y()) << ' ' << csv_number(p.z()) << '\n';

  const int npe = nodes_per_element(mesh.kind);
  out << "CELLS " << mesh.n_elements() << ' ' << mesh.n_elements() * (npe + 1) << '\n';
  for (const auto& conn : mesh.elements) {
    out << npe;
    for (int i = 0; i < npe; ++i) out << ' ' << conn[static_cast<size_t>(i)];
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.n_elements() << '\n';
  const int cell_type = mesh.kind == ElementKind::hex8 ? 12 : 10;
  for (int e = 0; e < mesh.n_elements(); ++e) out << cell_type << '\n';

  out << "POINT_DATA " << mesh.n_nodes() << '\n';
  if (displacement) {
    out << "VECTORS displacement double\n";
    for (int n = 0; n < mesh.n_nodes(); ++n)
      out << csv_number((*displacement)[3 * n]) << ' ' << csv_number((*displacement)[3 * n + 1])
          << ' ' << csv_number((*displacement)[3 * n + 2]) << '\n';
  }

  static const char* comp[6] = {"11", "22", "33", "23", "13", "12"};
  auto scalar_array = [&](const std::string& name, auto&& get) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int n = 0; n < mesh.n_nodes(); ++n) out << csv_number(get(n)) << '\n';
  };
  for (int c = 0; c < 6; ++c)
    scalar_array(std::string("T_") + comp[c],
                 [&](int n) { return fields.stress[static_cast<size_t>(n)][c]; });
  for (int c = 0; c < 6; ++c)
    scalar_array(std::string("eps_") + comp[c],
                 [&](int n) { return fields.strain[static_cast<size_t>(n)][c]; });
  scalar_array("W", [&](int n) { return fields.energy[static_cast<size_t>(n)]; });

  finish(out, path);
}

void export_csv(const ProbeResult& probe, const std::string& path) {
  auto out = open_out(path);
  out << "r,T22,eps22,W\n";
  for (const auto& s : probe.samples)
    out << csv_number(s.r) << ',' << csv_number(s.t22) << ',' << csv_number(s.eps22) << ','
        << csv_number(s.w) << '\n';
  finish(out, path);
}

void export_csv(const SweepTable& table, const std::string& path) {
  auto out = open_out(path);
  auto row = [&](const std::string& name, const std::vector<double>& vals) {
    out << csv_field(name);
    for (double v : vals) out << ',' << csv_number(v);
    out << '\n';
  };
  row("beta", table.betas);
  row("T22", table.t22);
  row("T22_pct_change", table.t22_pct);
  row("eps22", table.eps22);
  row("eps22_pct_change", table.eps22_pct);
  row("W", table.w);
  row("W_pct_change", table.w_pct);
  finish(out, path);
}

void export_csv(const FanTable& table, const std::string& path) {
  auto out = open_out(path);
  out << "direction";
  for (double b : table.betas) out << ',' << "beta=" << csv_number(b);
  out << '\n';
  for (size_t d = 0; d < table.directions.size(); ++d) {
    out << csv_field(table.directions[d]);
    for (double v : table.energy[d]) out << ',' << csv_number(v);
    out << '\n';
  }
  finish(out, path);
}

}  // namespace poro
