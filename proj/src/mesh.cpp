#include "poro/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "poro/fem.hpp"

namespace poro {

namespace {

// Lattice corner offsets in hex8 node order; reference corners are the
// same pattern over [-1,1]^3.
constexpr int kHexCorner[8][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

// Local faces of the hex in +/- x, y, z directions.
constexpr int kFaceXMin[4] = {0, 3, 7, 4};
constexpr int kFaceXMax[4] = {1, 2, 6, 5};
constexpr int kFaceYMin[4] = {0, 1, 5, 4};
constexpr int kFaceYMax[4] = {3, 2, 6, 7};
constexpr int kFaceZMin[4] = {0, 1, 2, 3};
constexpr int kFaceZMax[4] = {4, 5, 6, 7};

Face make_face(const std::array<int, 8>& elem, const int idx[4]) {
  Face f;
  f.nverts = 4;
  for (int i = 0; i < 4; ++i) f.n[static_cast<size_t>(i)] = elem[static_cast<size_t>(idx[i])];
  return f;
}

int key_code(int sy, int sx) { return (sy + 1) * 3 + (sx + 1); }

int find_coordinate(const std::vector<double>& v, double value, double tol) {
  for (size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i] - value) <= tol) return static_cast<int>(i);
  return -1;
}

/// Builds a structured hex mesh from coordinate arrays. When arm > 0 the
/// cross slit {|x| < arm, y=0} u {|y| < arm, x=0} is cut by node duplication
/// and the plate tags (y_min, y_max, crack) are applied; otherwise all six
/// box faces are tagged.
Mesh build_lattice_mesh(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs,
                        double arm) {
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  const int nz = static_cast<int>(zs.size()) - 1;
  const double span = std::max({xs.back() - xs.front(), ys.back() - ys.front(),
                                zs.back() - zs.front()});
  const double tol = 1e-9 * span;

  Mesh m;
  m.kind = ElementKind::hex8;

  const int nlat = (nx + 1) * (ny + 1) * (nz + 1);
  auto lidx = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  std::vector<std::array<int, 9>> ids(static_cast<size_t>(nlat));
  for (auto& a : ids) a.fill(-1);
  std::vector<uint8_t> cls(static_cast<size_t>(nlat), 0);  // bit0: x-slit, bit1: y-slit

  for (int k = 0; k <= nz; ++k) {
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        const double x = xs[static_cast<size_t>(i)];
        const double y = ys[static_cast<size_t>(j)];
        bool on_x_slit = arm > 0 && std::abs(y) <= tol && x > -arm + tol && x < arm - tol;
        bool on_y_slit = arm > 0 && std::abs(x) <= tol && y > -arm + tol && y < arm - tol;
        const int li = lidx(i, j, k);
        cls[static_cast<size_t>(li)] =
            static_cast<uint8_t>((on_x_slit ? 1 : 0) | (on_y_slit ? 2 : 0));

        std::vector<std::pair<int, int>> variants;
        if (on_x_slit && on_y_slit) {
          variants = {{+1, +1}, {+1, -1}, {-1, +1}, {-1, -1}};
        } else if (on_x_slit) {
          variants = {{+1, 0}, {-1, 0}};
        } else if (on_y_slit) {
          variants = {{0, +1}, {0, -1}};
        } else {
          variants = {{0, 0}};
        }
        for (auto [sy, sx] : variants) {
          ids[static_cast<size_t>(li)][static_cast<size_t>(key_code(sy, sx))] =
              m.n_nodes();
          m.nodes.emplace_back(x, y, zs[static_cast<size_t>(k)]);
        }
      }
    }
  }

  const int j_mid = arm > 0 ? find_coordinate(ys, 0.0, tol) : -1;
  const int i_mid = arm > 0 ? find_coordinate(xs, 0.0, tol) : -1;

  auto& crack = m.face_tags["crack"];
  for (int ck = 0; ck < nz; ++ck) {
    for (int cj = 0; cj < ny; ++cj) {
      for (int ci = 0; ci < nx; ++ci) {
        const int sy_cell = (ys[static_cast<size_t>(cj)] + ys[static_cast<size_t>(cj + 1)]) > 0 ? +1 : -1;
        const int sx_cell = (xs[static_cast<size_t>(ci)] + xs[static_cast<size_t>(ci + 1)]) > 0 ? +1 : -1;

        std::array<int, 8> elem{};
        for (int c = 0; c < 8; ++c) {
          const int i = ci + kHexCorner[c][0];
          const int j = cj + kHexCorner[c][1];
          const int k = ck + kHexCorner[c][2];
          const int li = lidx(i, j, k);
          const uint8_t cl = cls[static_cast<size_t>(li)];
          const int sy = (cl & 1) ? sy_cell : 0;
          const int sx = (cl & 2) ? sx_cell : 0;
          elem[static_cast<size_t>(c)] =
              ids[static_cast<size_t>(li)][static_cast<size_t>(key_code(sy, sx))];
        }
        m.elements.push_back(elem);

        if (arm > 0) {
          if (cj == 0) m.face_tags["y_min"].push_back(make_face(elem, kFaceYMin));
          if (cj == ny - 1) m.face_tags["y_max"].push_back(make_face(elem, kFaceYMax));
          // x-arm slit faces: cells whose x-extent lies inside [-arm, arm]
          const bool in_x_arm = xs[static_cast<size_t>(ci)] >= -arm - tol &&
                                xs[static_cast<size_t>(ci + 1)] <= arm + tol;
          if (in_x_arm && cj == j_mid) crack.push_back(make_face(elem, kFaceYMin));
          if (in_x_arm && cj == j_mid - 1) crack.push_back(make_face(elem, kFaceYMax));
          const bool in_y_arm = ys[static_cast<size_t>(cj)] >= -arm - tol &&
                                ys[static_cast<size_t>(cj + 1)] <= arm + tol;
          if (in_y_arm && ci == i_mid) crack.push_back(make_face(elem, kFaceXMin));
          if (in_y_arm && ci == i_mid - 1) crack.push_back(make_face(elem, kFaceXMax));
        } else {
          if (ci == 0) m.face_tags["x_min"].push_back(make_face(elem, kFaceXMin));
          if (ci == nx - 1) m.face_tags["x_max"].push_back(make_face(elem, kFaceXMax));
          if (cj == 0) m.face_tags["y_min"].push_back(make_face(elem, kFaceYMin));
          if (cj == ny - 1) m.face_tags["y_max"].push_back(make_face(elem, kFaceYMax));
          if (ck == 0) m.face_tags["z_min"].push_back(make_face(elem, kFaceZMin));
          if (ck == nz - 1) m.face_tags["z_max"].push_back(make_face(elem, kFaceZMax));
        }
      }
    }
  }
  if (arm <= 0) m.face_tags.erase("crack");

  LatticeInfo info;
  info.xs = std::move(xs);
  info.ys = std::move(ys);
  info.zs = std::move(zs);
  info.arm_half_length = arm;
  m.lattice = std::move(info);
  return m;
}

std::vector<double> linspace(double a, double b, int n_intervals) {
  std::vector<double> v(static_cast<size_t>(n_intervals) + 1);
  for (int i = 0; i <= n_intervals; ++i)
    v[static_cast<size_t>(i)] = a + (b - a) * static_cast<double>(i) / n_intervals;
  v.front() = a;
  v.back() = b;
  return v;
}

void record_tips(Mesh& m) {
  const auto& lat = *m.lattice;
  const double a = lat.arm_half_length;
  const double z_mid = 0.5 * (lat.zs.front() + lat.zs.back());
  m.crack_tips = {{"A", Vec3(a, 0, z_mid)},
                  {"B", Vec3(-a, 0, z_mid)},
                  {"C", Vec3(0, a, z_mid)},
                  {"D", Vec3(0, -a, z_mid)}};
}

/// Splits every interval of `coords` that overlaps (center - r, center + r)
/// for any center in `centers`.
void split_intervals(std::vector<double>& coords, const std::vector<double>& centers,
                     double r, double tol) {
  std::vector<double> out;
  out.reserve(coords.size() * 2);
  for (size_t i = 0; i + 1 < coords.size(); ++i) {
    out.push_back(coords[i]);
    const double x0 = coords[i], x1 = coords[i + 1];
    bool hit = false;
    for (double c : centers)
      if (x1 > c - r + tol && x0 < c + r - tol) hit = true;
    if (hit) out.push_back(0.5 * (x0 + x1));
  }
  out.push_back(coords.back());
  coords = std::move(out);
}

}  // namespace

const CrackTip& Mesh::tip(const std::string& name) const {
  for (const auto& t : crack_tips)
    if (t.name == name) return t;
  throw NotFound("no crack tip named '" + name + "'");
}

std::pair<Vec3, Vec3> Mesh::bounding_box() const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = -lo;
  for (const auto& p : nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

Mesh generate_cross_crack_plate(const PlateSpec& spec) {
  const double L = spec.side_length, t = spec.thickness, a = spec.arm_half_length;
  if (L <= 0 || t <= 0) throw BadSpec("plate dimensions must be positive");
  if (!(a > 0 && a < L / 2)) throw BadSpec("arm half-length must satisfy 0 < a < L/2");
  if (spec.nx < 2 || spec.ny < 2 || spec.nx % 2 != 0 || spec.ny % 2 != 0)
    throw BadSpec("nx and ny must be even and >= 2 so the slit lies on mesh lines");
  if (spec.nz < 1) throw BadSpec("nz must be >= 1");
  if (spec.refinement_levels < 0) throw BadSpec("refinement_levels must be >= 0");

  auto xs = linspace(-L / 2, L / 2, spec.nx);
  auto ys = linspace(-L / 2, L / 2, spec.ny);
  auto zs = linspace(0.0, t, spec.nz);

  // Snap the arm to the nearest lattice line; tips are recorded at the
  // snapped coordinate.
  const double dx = L / spec.nx;
  const int ia = static_cast<int>(std::lround((a + L / 2) / dx));
  const double a_eff = xs[static_cast<size_t>(std::clamp(ia, 0, spec.nx))];
  if (!(a_eff > 0 && a_eff < L / 2 - 1e-12 * L))
    throw BadSpec("arm half-length does not resolve to an interior grid line");
  if (find_coordinate(ys, a_eff, 1e-9 * L) < 0 || find_coordinate(ys, -a_eff, 1e-9 * L) < 0)
    throw BadSpec("arm tips must lie on grid lines of both in-plane axes");

  Mesh m = build_lattice_mesh(std::move(xs), std::move(ys), std::move(zs), a_eff);
  record_tips(m);
  m.finalize();
  validate_mesh(m);
  if (spec.refinement_levels > 0) m = refine_near_tips(m, spec.refinement_levels);
  return m;
}

Mesh generate_box(const Vec3& lo, const Vec3& hi, int nx, int ny, int nz) {
  if (nx < 1 || ny < 1 || nz < 1) throw BadSpec("box divisions must be >= 1");
  if (!((hi - lo).minCoeff() > 0)) throw BadSpec("box extents must be positive");
  Mesh m = build_lattice_mesh(linspace(lo.x(), hi.x(), nx), linspace(lo.y(), hi.y(), ny),
                              linspace(lo.z(), hi.z(), nz), 0.0);
  m.finalize();
  validate_mesh(m);
  return m;
}

Mesh refine_near_tips(const Mesh& mesh, int levels) {
  if (levels < 0) throw BadSpec("refinement levels must be >= 0");
  if (!mesh.lattice || mesh.lattice->arm_half_length <= 0 || mesh.kind != ElementKind::hex8)
    throw BadSpec("refine_near_tips supports generated cross-crack lattice meshes only");
  if (levels == 0) return mesh;

  LatticeInfo lat = *mesh.lattice;
  const double a = lat.arm_half_length;
  const double span = lat.xs.back() - lat.xs.front();
  const double tol = 1e-9 * span;
  const std::vector<double> centers = {-a, 0.0, a};

  for (int l = 1; l <= levels; ++l) {
    const int global_level = lat.refine_levels_applied + l;
    const double r = a / std::pow(2.0, global_level);
    split_intervals(lat.xs, centers, r, tol);
    split_intervals(lat.ys, centers, r, tol);
  }

  Mesh out = build_lattice_mesh(lat.xs, lat.ys, lat.zs, a);
  out.lattice->refine_levels_applied = lat.refine_levels_applied + levels;
  record_tips(out);
  out.finalize();
  validate_mesh(out);
  return out;
}

Vec3 element_map(const Mesh& mesh, int elem, const Vec3& local) {
  const auto se = shape_eval(mesh.kind, local);
  Vec3 x = Vec3::Zero();
  const auto& conn = mesh.elements[static_cast<size_t>(elem)];
  for (int i = 0; i < se.n; ++i)
    x += se.N[static_cast<size_t>(i)] * mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(i)])];
  return x;
}

void validate_mesh(const Mesh& mesh) {
  const int npe = nodes_per_element(mesh.kind);
  for (size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& conn = mesh.elements[e];
    for (int c = 0; c < npe; ++c) {
      const int id = conn[static_cast<size_t>(c)];
      if (id < 0 || id >= mesh.n_nodes())
        throw BadSpec("element " + std::to_string(e) + " references node out of range");
    }
    if (mesh.kind == ElementKind::tet4) {
      const Vec3& p0 = mesh.nodes[static_cast<size_t>(conn[0])];
      Eigen::Matrix3d d;
      for (int c = 0; c < 3; ++c)
        d.col(c) = mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(c + 1)])] - p0;
      if (d.determinant() <= 0)
        throw DegenerateElement("tet " + std::to_string(e) + " has non-positive volume");
    } else {
      for (int c = 0; c < 8; ++c) {
        const Vec3 corner(kHexCorner[c][0] * 2.0 - 1.0, kHexCorner[c][1] * 2.0 - 1.0,
                          kHexCorner[c][2] * 2.0 - 1.0);
        const auto se = shape_eval(ElementKind::hex8, corner);
        Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
        for (int i = 0; i < 8; ++i)
          jac += mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(i)])] *
                 se.dN[static_cast<size_t>(i)].transpose();
        if (jac.determinant() <= 0)
          throw DegenerateElement("hex " + std::to_string(e) +
                                  " has non-positive corner Jacobian");
      }
    }
  }

  // Every tagged face must be a face of exactly one element; tag sets must
  // be pairwise disjoint.
  std::map<std::vector<int>, int> face_count;
  auto face_key = [](const Face& f) {
    std::vector<int> k(f.n.begin(), f.n.begin() + f.nverts);
    std::sort(k.begin(), k.end());
    return k;
  };
  auto add_elem_faces = [&](const std::array<int, 8>& conn) {
    if (npe == 8) {
      const int* faces[6] = {kFaceXMin, kFaceXMax, kFaceYMin, kFaceYMax, kFaceZMin, kFaceZMax};
      for (const int* fl : faces) {
        Face f = make_face(conn, fl);
        ++face_count[face_key(f)];
      }
    } else {
      const int tf[4][3] = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
      for (auto& fl : tf) {
        Face f;
        f.nverts = 3;
        for (int i = 0; i < 3; ++i) f.n[static_cast<size_t>(i)] = conn[static_cast<size_t>(fl[i])];
        ++face_count[face_key(f)];
      }
    }
  };
  for (const auto& conn : mesh.elements) add_elem_faces(conn);

  std::map<std::vector<int>, std::string> seen;
  for (const auto& [tag, faces] : mesh.face_tags) {
    for (const auto& f : faces) {
      auto key = face_key(f);
      auto it = face_count.find(key);
      if (it == face_count.end() || it->second != 1)
        throw BadSpec("tag '" + tag + "' contains a face that is not a boundary/slit face");
      auto [sit, fresh] = seen.emplace(key, tag);
      if (!fresh && sit->second != tag)
        throw BadSpec("tags '" + sit->second + "' and '" + tag + "' share a face");
    }
  }
}

}  // namespace poro
