#include <algorithm>
#include <cmath>

#include "poro/fem.hpp"
#include "poro/mesh.hpp"

namespace poro {

struct Mesh::SpatialIndex {
  Vec3 lo, hi;
  int nb[3] = {1, 1, 1};
  double scale = 1.0;
  std::vector<std::vector<int>> bins;  // element ids in ascending order

  int bin_of(int bx, int by, int bz) const { return (bz * nb[1] + by) * nb[0] + bx; }

  int clampi(double f, int n) const {
    return std::clamp(static_cast<int>(std::floor(f)), 0, n - 1);
  }
};

void Mesh::finalize() {
  auto idx = std::make_shared<SpatialIndex>();
  auto [lo, hi] = bounding_box();
  idx->lo = lo;
  idx->hi = hi;
  idx->scale = std::max((hi - lo).maxCoeff(), 1e-300);
  const int target = std::max(1, static_cast<int>(std::cbrt(static_cast<double>(n_elements()))));
  for (int d = 0; d < 3; ++d) {
    const double extent = hi[d] - lo[d];
    idx->nb[d] = extent > 1e-12 * idx->scale ? std::clamp(target, 1, 64) : 1;
  }
  idx->bins.assign(static_cast<size_t>(idx->nb[0]) * idx->nb[1] * idx->nb[2], {});

  const double pad = 1e-9 * idx->scale;
  const int npe = nodes_per_element(kind);
  for (int e = 0; e < n_elements(); ++e) {
    Vec3 elo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 ehi = -elo;
    for (int c = 0; c < npe; ++c) {
      const Vec3& p = nodes[static_cast<size_t>(elements[static_cast<size_t>(e)][static_cast<size_t>(c)])];
      elo = elo.cwiseMin(p);
      ehi = ehi.cwiseMax(p);
    }
    int b0[3], b1[3];
    for (int d = 0; d < 3; ++d) {
      const double w = (hi[d] - lo[d]) / idx->nb[d];
      const double denom = w > 0 ? w : 1.0;
      b0[d] = idx->clampi((elo[d] - pad - lo[d]) / denom, idx->nb[d]);
      b1[d] = idx->clampi((ehi[d] + pad - lo[d]) / denom, idx->nb[d]);
    }
    for (int bz = b0[2]; bz <= b1[2]; ++bz)
      for (int by = b0[1]; by <= b1[1]; ++by)
        for (int bx = b0[0]; bx <= b1[0]; ++bx)
          idx->bins[static_cast<size_t>(idx->bin_of(bx, by, bz))].push_back(e);
  }
  index = std::move(idx);
}

namespace {

constexpr double kRefTol = 1e-8;  // containment slack in reference coords

bool invert_map(const Mesh& mesh, int elem, const Vec3& x, Vec3& local) {
  const auto& conn = mesh.elements[static_cast<size_t>(elem)];
  if (mesh.kind == ElementKind::tet4) {
    const Vec3& p0 = mesh.nodes[static_cast<size_t>(conn[0])];
    Eigen::Matrix3d d;
    for (int c = 0; c < 3; ++c)
      d.col(c) = mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(c + 1)])] - p0;
    const Vec3 xi = d.partialPivLu().solve(x - p0);
    if (xi.minCoeff() < -kRefTol || xi.sum() > 1.0 + kRefTol) return false;
    local = xi;
    return true;
  }

  // Trilinear hex: Newton from the cell center.
  Vec3 xi = Vec3::Zero();
  for (int it = 0; it < 50; ++it) {
    const auto se = shape_eval(ElementKind::hex8, xi);
    Vec3 pos = Vec3::Zero();
    Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 8; ++i) {
      const Vec3& p = mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(i)])];
      pos += se.N[static_cast<size_t>(i)] * p;
      jac += p * se.dN[static_cast<size_t>(i)].transpose();
    }
    const Vec3 r = pos - x;
    const Vec3 dxi = jac.partialPivLu().solve(r);
    xi -= dxi;
    if (dxi.norm() < 1e-14) break;
    if (xi.cwiseAbs().maxCoeff() > 4.0) return false;  // diverging: point far away
  }
  if (xi.cwiseAbs().maxCoeff() > 1.0 + kRefTol) return false;
  local = xi;
  return true;
}

}  // namespace

bool try_locate_point(const Mesh& mesh, const Vec3& x, LocateResult& out) {
  if (!mesh.index) throw std::logic_error("mesh not finalized before locate_point");
  const auto& idx = *mesh.index;
  const double slack = 1e-9 * idx.scale;
  for (int d = 0; d < 3; ++d)
    if (x[d] < idx.lo[d] - slack || x[d] > idx.hi[d] + slack) return false;

  int b[3];
  for (int d = 0; d < 3; ++d) {
    const double w = (idx.hi[d] - idx.lo[d]) / idx.nb[d];
    const double denom = w > 0 ? w : 1.0;
    b[d] = idx.clampi((x[d] - idx.lo[d]) / denom, idx.nb[d]);
  }
  const auto& cands = idx.bins[static_cast<size_t>(idx.bin_of(b[0], b[1], b[2]))];
  for (int e : cands) {
    Vec3 local;
    if (invert_map(mesh, e, x, local)) {
      out.element = e;
      out.local = local;
      return true;
    }
  }
  return false;
}

LocateResult locate_point(const Mesh& mesh, const Vec3& x) {
  LocateResult r;
  if (!try_locate_point(mesh, x, r)) {
    std::ostringstream os;
    os << "point (" << x.x() << ", " << x.y() << ", " << x.z() << ") is outside the mesh";
    throw NotFound(os.str());
  }
  return r;
}

}  // namespace poro
