#pragma once

#include <iosfwd>
#include <string>

#include "poro/mesh.hpp"

namespace poro {

struct GmshImportOptions {
  bool require_crack = true;  // --no-crack imports plain plates
};

/// Reads a Gmsh MSH 2.2 ASCII file with physical surface groups naming
/// y_min, y_max and crack (unless disabled) and volume elements of one kind
/// (tet4 or hex8). Supported sections: $MeshFormat, $PhysicalNames, $Nodes,
/// $Elements.
Mesh import_gmsh(const std::string& path, const GmshImportOptions& options = {});
Mesh import_gmsh(std::istream& in, const std::string& source,
                 const GmshImportOptions& options = {});

/// Writes the mesh in the importer's MSH 2.2 subset. Node order, element
/// order and tags round-trip exactly; crack tip markers are not represented.
void export_mesh(const Mesh& mesh, const std::string& path);
void export_mesh(const Mesh& mesh, std::ostream& out);

}  // namespace poro
