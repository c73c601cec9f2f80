#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "poro/errors.hpp"
#include "poro/tensor.hpp"

namespace poro {

enum class ElementKind { hex8, tet4 };

inline int nodes_per_element(ElementKind k) { return k == ElementKind::hex8 ? 8 : 4; }

/// Boundary face: 3 or 4 node ids (quad faces on hexes, triangles on tets).
struct Face {
  std::array<int, 4> n{-1, -1, -1, -1};
  int nverts = 0;
};

struct CrackTip {
  std::string name;
  Vec3 point;
};

/// Provenance of generator-built meshes: the tensor lattice and slit data
/// needed to rebuild under refinement.
struct LatticeInfo {
  std::vector<double> xs, ys, zs;
  double arm_half_length = 0.0;  // 0 means plain box (no slit)
  int refine_levels_applied = 0;
};

struct Mesh {
  ElementKind kind = ElementKind::hex8;
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 8>> elements;  // tet4 uses the first 4 slots
  std::map<std::string, std::vector<Face>> face_tags;
  std::vector<CrackTip> crack_tips;
  std::optional<LatticeInfo> lattice;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }

  const CrackTip& tip(const std::string& name) const;

  /// Axis-aligned bounding box.
  std::pair<Vec3, Vec3> bounding_box() const;

  /// Builds the spatial search index; called by the generators/importer.
  /// Mesh must not be mutated afterwards.
  void finalize();

  // Spatial index over element bounding boxes (built by finalize()).
  struct SpatialIndex;
  std::shared_ptr<const SpatialIndex> index;
};

/// Square plate of side L and thickness t with an embedded cross slit of
/// arm half-length a along the x and y axes.
struct PlateSpec {
  double side_length = 0.1;      // m
  double thickness = 0.01;       // m
  double arm_half_length = 0.02; // m
  int nx = 40, ny = 40, nz = 4;
  int refinement_levels = 0;
};

/// Structured hex8 grid over [-L/2, L/2]^2 x [0, t] with a zero-opening
/// cross-shaped slit realized by node duplication. Slit faces are tagged
/// `crack`; the y = -L/2 / y = +L/2 faces are tagged `y_min` / `y_max`.
/// Tips A=(a,0), B=(-a,0), C=(0,a), D=(0,-a) are recorded at mid-thickness.
Mesh generate_cross_crack_plate(const PlateSpec& spec);

/// Plain structured box (no slit); all six faces tagged x_min..z_max.
/// Used by the verification batteries and tests.
Mesh generate_box(const Vec3& lo, const Vec3& hi, int nx, int ny, int nz);

struct LocateResult {
  int element = -1;
  Vec3 local = Vec3::Zero();
};

/// Finds an element containing x and the reference-cell coordinates that
/// reproduce x through the element map. Ties on shared faces go to the
/// lowest element id. Throws NotFound outside the mesh (1e-9 tolerance).
LocateResult locate_point(const Mesh& mesh, const Vec3& x);

/// Non-throwing variant; returns false when x is outside the mesh.
bool try_locate_point(const Mesh& mesh, const Vec3& x, LocateResult& out);

/// Graded lattice refinement near the crack tips: at accumulated level l the
/// grid intervals within a/2^l of a tip coordinate are split in half, whole
/// grid lines at a time (no hanging nodes). Generator meshes only.
Mesh refine_near_tips(const Mesh& mesh, int levels);

/// Geometry of one element: maps reference coordinates to physical ones.
Vec3 element_map(const Mesh& mesh, int elem, const Vec3& local);

/// Validity checks used by the generator and importer: positive Jacobians /
/// volumes, tags on actual element faces, pairwise-disjoint tag sets.
/// Throws DegenerateElement or BadSpec with a description.
void validate_mesh(const Mesh& mesh);

}  // namespace poro
