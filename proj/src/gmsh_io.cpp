#include "poro/gmsh_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace poro {

namespace {

std::string next_content_line(std::istream& in, const std::string& source) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return line;
  }
  throw ParseError(source + ": unexpected end of file");
}

void expect_section_end(std::istream& in, const std::string& source, const std::string& name) {
  const std::string line = next_content_line(in, source);
  if (line != name)
    throw ParseError(source + ": expected " + name + ", got '" + line + "'");
}

}  // namespace

Mesh import_gmsh(const std::string& path, const GmshImportOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file '" + path + "'");
  return import_gmsh(in, path, options);
}

Mesh import_gmsh(std::istream& in, const std::string& source, const GmshImportOptions& options) {
  std::map<int, std::string> physical_names;  // id -> name (surface groups)
  std::map<long, int> node_ids;               // file id -> index
  Mesh mesh;
  bool have_nodes = false;
  int volume_type = 0;  // 4 = tet4, 5 = hex8

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    if (line == "$MeshFormat") {
      std::istringstream ls(next_content_line(in, source));
      std::string version;
      int file_type = -1, data_size = 0;
      ls >> version >> file_type >> data_size;
      if (version != "2.2")
        throw ParseError(source + ": unsupported MSH version '" + version +
                         "' (supported: 2.2 ASCII)");
      if (file_type != 0)
        throw ParseError(source + ": binary MSH files are not supported (supported: 2.2 ASCII)");
      expect_section_end(in, source, "$EndMeshFormat");
    } else if (line == "$PhysicalNames") {
      const int n = std::stoi(next_content_line(in, source));
      for (int i = 0; i < n; ++i) {
        std::istringstream ls(next_content_line(in, source));
        int dim = 0, id = 0;
        std::string name;
        ls >> dim >> id;
        std::getline(ls, name);
        const auto first = name.find('"');
        const auto last = name.rfind('"');
        if (first == std::string::npos || last <= first)
          throw ParseError(source + ": malformed physical name entry");
        physical_names[id] = name.substr(first + 1, last - first - 1);
      }
      expect_section_end(in, source, "$EndPhysicalNames");
    } else if (line == "$Nodes") {
      const int n = std::stoi(next_content_line(in, source));
      mesh.nodes.reserve(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        std::istringstream ls(next_content_line(in, source));
        long id = 0;
        double x = 0, y = 0, z = 0;
        if (!(ls >> id >> x >> y >> z))
          throw ParseError(source + ": malformed node line");
        node_ids[id] = mesh.n_nodes();
        mesh.nodes.emplace_back(x, y, z);
      }
      have_nodes = true;
      expect_section_end(in, source, "$EndNodes");
    } else if (line == "$Elements") {
      if (!have_nodes) throw ParseError(source + ": $Elements section before $Nodes");
      const int n = std::stoi(next_content_line(in, source));
      for (int i = 0; i < n; ++i) {
        std::istringstream ls(next_content_line(in, source));
        long id = 0;
        int type = 0, ntags = 0;
        if (!(ls >> id >> type >> ntags))
          throw ParseError(source + ": malformed element line");
        std::vector<int> tags(static_cast<size_t>(ntags));
        for (int& t : tags)
          if (!(ls >> t)) throw ParseError(source + ": malformed element tags");

        int nverts = 0;
        switch (type) {
          case 1:  // line segment: edge scaffolding, skipped
          case 15: // point
          {
            // consume the remainder silently
            continue;
          }
          case 2: nverts = 3; break;   // tri3 boundary face
          case 3: nverts = 4; break;   // quad4 boundary face
          case 4: nverts = 4; break;   // tet4
          case 5: nverts = 8; break;   // hex8
          default:
            throw UnsupportedElement(source + ": unsupported element type " +
                                     std::to_string(type) +
                                     " (supported: 2, 3 faces; 4, 5 volumes)");
        }
        std::array<int, 8> conn{};
        conn.fill(-1);
        for (int v = 0; v < nverts; ++v) {
          long nid = 0;
          if (!(ls >> nid)) throw ParseError(source + ": element has too few nodes");
          auto it = node_ids.find(nid);
          if (it == node_ids.end())
            throw ParseError(source + ": element references unknown node " + std::to_string(nid));
          conn[static_cast<size_t>(v)] = it->second;
        }

        if (type == 4 || type == 5) {
          if (volume_type == 0) {
            volume_type = type;
            mesh.kind = type == 4 ? ElementKind::tet4 : ElementKind::hex8;
          } else if (volume_type != type) {
            throw UnsupportedElement(source + ": mixed volume element types are not supported");
          }
          mesh.elements.push_back(conn);
        } else {
          if (tags.empty()) continue;  // untagged geometry face
          auto name_it = physical_names.find(tags[0]);
          if (name_it == physical_names.end()) continue;
          Face f;
          f.nverts = nverts;
          for (int v = 0; v < nverts; ++v) f.n[static_cast<size_t>(v)] = conn[static_cast<size_t>(v)];
          mesh.face_tags[name_it->second].push_back(f);
        }
      }
      expect_section_end(in, source, "$EndElements");
    } else if (line[0] == '$') {
      // skip unknown sections
      const std::string end = "$End" + line.substr(1);
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == end) break;
      }
    } else {
      throw ParseError(source + ": unexpected content '" + line + "'");
    }
  }

  if (mesh.elements.empty()) throw ParseError(source + ": no volume elements found");

  std::vector<std::string> required = {"y_min", "y_max"};
  if (options.require_crack) required.push_back("crack");
  for (const auto& tag : required)
    if (!mesh.face_tags.count(tag))
      throw MissingTag(source + ": required physical group '" + tag + "' is missing");

  validate_mesh(mesh);
  mesh.finalize();
  return mesh;
}

void export_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  export_mesh(mesh, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

void export_mesh(const Mesh& mesh, std::ostream& out) {
  out.imbue(std::locale::classic());
  char buf[160];

  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";

  // face tags in sorted name order, then the volume group
  std::vector<std::string> tag_names;
  for (const auto& [tag, faces] : mesh.face_tags) tag_names.push_back(tag);
  std::sort(tag_names.begin(), tag_names.end());

  out << "$PhysicalNames\n" << tag_names.size() + 1 << "\n";
  std::map<std::string, int> tag_id;
  int next_id = 1;
  for (const auto& tag : tag_names) {
    tag_id[tag] = next_id;
    out << "2 " << next_id << " \"" << tag << "\"\n";
    ++next_id;
  }
  const int volume_id = next_id;
  out << "3 " << volume_id << " \"domain\"\n$EndPhysicalNames\n";

  out << "$Nodes\n" << mesh.n_nodes() << "\n";
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const Vec3& p = mesh.nodes[static_cast<size_t>(i)];
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g\n", i + 1, p.x(), p.y(), p.z());
    out << buf;
  }
  out << "$EndNodes\n";

  size_t n_faces = 0;
  for (const auto& tag : tag_names) n_faces += mesh.face_tags.at(tag).size();
  out << "$Elements\n" << n_faces + mesh.elements.size() << "\n";
  int eid = 1;
  for (const auto& tag : tag_names) {
    for (const auto& f : mesh.face_tags.at(tag)) {
      out << eid++ << ' ' << (f.nverts == 3 ? 2 : 3) << " 2 " << tag_id[tag] << ' '
          << tag_id[tag];
      for (int v = 0; v < f.nverts; ++v) out << ' ' << f.n[static_cast<size_t>(v)] + 1;
      out << '\n';
    }
  }
  const int vol_type = mesh.kind == ElementKind::tet4 ? 4 : 5;
  const int npe = nodes_per_element(mesh.kind);
  for (const auto& conn : mesh.elements) {
    out << eid++ << ' ' << vol_type << " 2 " << volume_id << ' ' << volume_id;
    for (int v = 0; v < npe; ++v) out << ' ' << conn[static_cast<size_t>(v)] + 1;
    out << '\n';
  }
  out << "$EndElements\n";
}

}  // namespace poro
