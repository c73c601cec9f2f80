#include "poro/fem.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace poro {

namespace {

constexpr double kHexSign[8][3] = {
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
    {-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1}};

}  // namespace

ShapeEval shape_eval(ElementKind kind, const Vec3& local) {
  ShapeEval se;
  if (kind == ElementKind::hex8) {
    se.n = 8;
    const double xi = local.x(), eta = local.y(), zeta = local.z();
    for (int i = 0; i < 8; ++i) {
      const double sx = kHexSign[i][0], sy = kHexSign[i][1], sz = kHexSign[i][2];
      const double fx = 1.0 + sx * xi, fy = 1.0 + sy * eta, fz = 1.0 + sz * zeta;
      se.N[static_cast<size_t>(i)] = 0.125 * fx * fy * fz;
      se.dN[static_cast<size_t>(i)] = Vec3(0.125 * sx * fy * fz,
                                           0.125 * fx * sy * fz,
                                           0.125 * fx * fy * sz);
    }
  } else {
    se.n = 4;
    const double xi = local.x(), eta = local.y(), zeta = local.z();
    se.N = {1.0 - xi - eta - zeta, xi, eta, zeta, 0, 0, 0, 0};
    se.dN[0] = Vec3(-1, -1, -1);
    se.dN[1] = Vec3(1, 0, 0);
    se.dN[2] = Vec3(0, 1, 0);
    se.dN[3] = Vec3(0, 0, 1);
  }
  return se;
}

QuadratureRule quadrature(ElementKind kind) {
  if (kind == ElementKind::hex8) return gauss_hex(2);
  // 4-point degree-2 rule on the unit tetrahedron.
  QuadratureRule q;
  const double a = 0.5854101966249685;
  const double b = 0.1381966011250105;
  q.points = {{b, b, b}, {a, b, b}, {b, a, b}, {b, b, a}};
  q.weights = {1.0 / 24.0, 1.0 / 24.0, 1.0 / 24.0, 1.0 / 24.0};
  return q;
}

QuadratureRule gauss_hex(int n) {
  std::vector<double> pts, wts;
  switch (n) {
    case 1:
      pts = {0.0};
      wts = {2.0};
      break;
    case 2: {
      const double g = 1.0 / std::sqrt(3.0);
      pts = {-g, g};
      wts = {1.0, 1.0};
      break;
    }
    case 3: {
      const double g = std::sqrt(3.0 / 5.0);
      pts = {-g, 0.0, g};
      wts = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      pts = {-b, -a, a, b};
      wts = {wb, wa, wa, wb};
      break;
    }
    default:
      throw BadSpec("gauss_hex supports 1..4 points per direction");
  }
  QuadratureRule q;
  for (double z : pts)
    for (double y : pts)
      for (double x : pts) q.points.emplace_back(x, y, z);
  for (double wz : wts)
    for (double wy : wts)
      for (double wx : wts) q.weights.push_back(wx * wy * wz);
  return q;
}

DofMap build_dofmap(const Mesh& mesh, const std::vector<DirichletSpec>& dirichlet) {
  DofMap d;
  d.n_nodes = mesh.n_nodes();
  d.is_constrained.assign(static_cast<size_t>(d.n_dofs()), 0);
  d.prescribed.assign(static_cast<size_t>(d.n_dofs()), 0.0);
  d.free_index.assign(static_cast<size_t>(d.n_dofs()), -1);

  for (const auto& spec : dirichlet) {
    auto it = mesh.face_tags.find(spec.tag);
    if (it == mesh.face_tags.end())
      throw MissingTag("Dirichlet tag '" + spec.tag + "' not present in mesh");
    for (const auto& face : it->second) {
      for (int v = 0; v < face.nverts; ++v) {
        const int node = face.n[static_cast<size_t>(v)];
        const Vec3 val = spec.value ? spec.value(mesh.nodes[static_cast<size_t>(node)])
                                    : Vec3::Zero();
        for (int c = 0; c < 3; ++c) {
          if (!spec.components[static_cast<size_t>(c)]) continue;
          const int dof = 3 * node + c;
          d.is_constrained[static_cast<size_t>(dof)] = 1;
          d.prescribed[static_cast<size_t>(dof)] = val[c];
        }
      }
    }
  }
  int next = 0;
  for (int dof = 0; dof < d.n_dofs(); ++dof)
    if (!d.is_constrained[static_cast<size_t>(dof)]) d.free_index[static_cast<size_t>(dof)] = next++;
  d.n_free = next;
  return d;
}

namespace {

struct QpGeom {
  Vec3 grad[8];     // spatial shape gradients
  double jxw = 0.0; // weight * |J|
};

/// Precomputed reference-shape data at the assembly quadrature points.
struct RefData {
  QuadratureRule rule;
  std::vector<ShapeEval> shapes;
  int npe = 0;
};

RefData ref_data(ElementKind kind) {
  RefData r;
  r.rule = quadrature(kind);
  r.npe = nodes_per_element(kind);
  for (const auto& p : r.rule.points) r.shapes.push_back(shape_eval(kind, p));
  return r;
}

void element_qp_geometry(const Mesh& mesh, const RefData& ref, int elem,
                         std::vector<QpGeom>& out) {
  const auto& conn = mesh.elements[static_cast<size_t>(elem)];
  out.resize(ref.rule.points.size());
  for (size_t q = 0; q < ref.rule.points.size(); ++q) {
    const ShapeEval& se = ref.shapes[q];
    Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
    for (int i = 0; i < ref.npe; ++i)
      jac += mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(i)])] *
             se.dN[static_cast<size_t>(i)].transpose();
    const double det = jac.determinant();
    if (det <= 0)
      throw DegenerateElement("non-positive Jacobian in element " + std::to_string(elem));
    const Eigen::Matrix3d jinv_t = jac.inverse().transpose();
    for (int i = 0; i < ref.npe; ++i)
      out[q].grad[static_cast<size_t>(i)] = jinv_t * se.dN[static_cast<size_t>(i)];
    out[q].jxw = ref.rule.weights[q] * det;
  }
}

Eigen::Matrix<double, 6, 6> voigt_stiffness(const LamePair& lame) {
  Eigen::Matrix<double, 6, 6> d = Eigen::Matrix<double, 6, 6>::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d(i, j) = lame.lambda;
  for (int i = 0; i < 3; ++i) d(i, i) += 2.0 * lame.mu;
  for (int i = 3; i < 6; ++i) d(i, i) = lame.mu;
  return d;
}

/// Element stiffness via B^T D B at the given quadrature geometry, with a
/// per-point scalar multiplier.
void element_stiffness(const std::vector<QpGeom>& geom, int npe,
                       const Eigen::Matrix<double, 6, 6>& d0,
                       const double* qp_scale, Eigen::MatrixXd& ke) {
  const int ndof = 3 * npe;
  ke.setZero(ndof, ndof);
  Eigen::MatrixXd b(6, ndof);
  for (const auto& g : geom) {
    b.setZero();
    for (int i = 0; i < npe; ++i) {
      const Vec3& gr = g.grad[static_cast<size_t>(i)];
      const int c = 3 * i;
      b(0, c + 0) = gr.x();
      b(1, c + 1) = gr.y();
      b(2, c + 2) = gr.z();
      b(3, c + 1) = gr.z();
      b(3, c + 2) = gr.y();
      b(4, c + 0) = gr.z();
      b(4, c + 2) = gr.x();
      b(5, c + 0) = gr.y();
      b(5, c + 1) = gr.x();
    }
    const double s = g.jxw * (qp_scale ? *qp_scale++ : 1.0);
    ke.noalias() += s * b.transpose() * d0 * b;
  }
  // enforce bitwise symmetry of the element matrix
  for (int i = 0; i < ndof; ++i)
    for (int j = i + 1; j < ndof; ++j) {
      const double v = 0.5 * (ke(i, j) + ke(j, i));
      ke(i, j) = v;
      ke(j, i) = v;
    }
}

std::vector<double> frozen_scales(const Mesh& mesh, const MaterialParams& params,
                                  const FieldState& state, const RefData& ref) {
  const size_t nqp = ref.rule.points.size();
  const size_t expect = nqp * static_cast<size_t>(mesh.n_elements());
  if (!state.tr_eps_qp.empty() && state.tr_eps_qp.size() != expect)
    throw InconsistentState("state_prev dilatation cache size " +
                            std::to_string(state.tr_eps_qp.size()) + " does not match mesh (" +
                            std::to_string(expect) + ")");
  std::vector<double> scale(expect, 1.0);
  if (state.tr_eps_qp.empty()) return scale;  // zero state: factor is 1
  for (size_t k = 0; k < expect; ++k) {
    const double f = 1.0 + params.beta * state.tr_eps_qp[k];
    if (f <= kStiffnessFloor) {
      const size_t e = k / nqp, q = k % nqp;
      std::ostringstream os;
      os << "degenerate stiffness during assembly: 1 + beta*tr(eps) = " << f << " at element "
         << e << ", quadrature point " << q << " (beta = " << params.beta << ")";
      throw DegenerateStiffness(os.str());
    }
    scale[k] = 1.0 / f;
  }
  return scale;
}

/// Quadrature for one tagged boundary face (quad: 2x2 Gauss, tri: midedge).
void integrate_face_traction(const Mesh& mesh, const Face& face, const Vec3& traction,
                             std::vector<Eigen::Triplet<double>>*,
                             Eigen::VectorXd& f_full) {
  if (face.nverts == 4) {
    const double g = 1.0 / std::sqrt(3.0);
    const double qp[4][2] = {{-g, -g}, {g, -g}, {g, g}, {-g, g}};
    for (const auto& p : qp) {
      const double xi = p[0], eta = p[1];
      const double n[4] = {0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
                           0.25 * (1 + xi) * (1 + eta), 0.25 * (1 - xi) * (1 + eta)};
      const double dxi[4] = {-0.25 * (1 - eta), 0.25 * (1 - eta), 0.25 * (1 + eta),
                             -0.25 * (1 + eta)};
      const double deta[4] = {-0.25 * (1 - xi), -0.25 * (1 + xi), 0.25 * (1 + xi),
                              0.25 * (1 - xi)};
      Vec3 tu = Vec3::Zero(), tv = Vec3::Zero();
      for (int i = 0; i < 4; ++i) {
        const Vec3& pt = mesh.nodes[static_cast<size_t>(face.n[static_cast<size_t>(i)])];
        tu += dxi[i] * pt;
        tv += deta[i] * pt;
      }
      const double da = tu.cross(tv).norm();
      for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 3; ++c)
          f_full[3 * face.n[static_cast<size_t>(i)] + c] += n[i] * traction[c] * da;
    }
  } else {
    // 3-point midedge rule, degree 2 on the reference triangle.
    const double qp[3][2] = {{0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}};
    const Vec3& p0 = mesh.nodes[static_cast<size_t>(face.n[0])];
    const Vec3& p1 = mesh.nodes[static_cast<size_t>(face.n[1])];
    const Vec3& p2 = mesh.nodes[static_cast<size_t>(face.n[2])];
    const double area2 = (p1 - p0).cross(p2 - p0).norm();  // twice the area
    for (const auto& p : qp) {
      const double n[3] = {1.0 - p[0] - p[1], p[0], p[1]};
      for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c)
          f_full[3 * face.n[static_cast<size_t>(i)] + c] +=
              n[i] * traction[c] * area2 * (1.0 / 6.0);
    }
  }
}

}  // namespace

FieldState make_state(const Mesh& mesh, Eigen::VectorXd u, int iteration) {
  if (u.size() != 3 * mesh.n_nodes())
    throw InconsistentState("displacement vector length " + std::to_string(u.size()) +
                            " does not match mesh dof count " +
                            std::to_string(3 * mesh.n_nodes()));
  FieldState s;
  s.iteration = iteration;
  const RefData ref = ref_data(mesh.kind);
  s.tr_eps_qp.assign(ref.rule.points.size() * static_cast<size_t>(mesh.n_elements()), 0.0);
  std::vector<QpGeom> geom;
  size_t k = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    element_qp_geometry(mesh, ref, e, geom);
    const auto& conn = mesh.elements[static_cast<size_t>(e)];
    for (const auto& g : geom) {
      double div = 0;
      for (int i = 0; i < ref.npe; ++i) {
        const int node = conn[static_cast<size_t>(i)];
        div += g.grad[static_cast<size_t>(i)].dot(
            Vec3(u[3 * node], u[3 * node + 1], u[3 * node + 2]));
      }
      s.tr_eps_qp[k++] = div;
    }
  }
  s.u = std::move(u);
  return s;
}

FieldState zero_state(const Mesh& mesh) {
  FieldState s;
  s.u = Eigen::VectorXd::Zero(3 * mesh.n_nodes());
  s.iteration = 0;
  const size_t nqp = quadrature(mesh.kind).points.size();
  s.tr_eps_qp.assign(nqp * static_cast<size_t>(mesh.n_elements()), 0.0);
  return s;
}

double state_cache_error(const Mesh& mesh, const FieldState& state) {
  FieldState fresh = make_state(mesh, state.u, state.iteration);
  double m = 0;
  for (size_t i = 0; i < fresh.tr_eps_qp.size(); ++i)
    m = std::max(m, std::abs(fresh.tr_eps_qp[i] - state.tr_eps_qp[i]));
  return m;
}

SparseSystem assemble(const Mesh& mesh, const DofMap& dofs, const MaterialParams& params,
                      const FieldState& state_prev, const Loads& loads) {
  if (dofs.n_nodes != mesh.n_nodes())
    throw InconsistentState("dof map does not match mesh node count");
  const RefData ref = ref_data(mesh.kind);
  const LamePair lame = classical_lame(params);
  const auto d0 = voigt_stiffness(lame);
  const std::vector<double> scale = frozen_scales(mesh, params, state_prev, ref);
  const size_t nqp = ref.rule.points.size();

  Eigen::VectorXd f_full = Eigen::VectorXd::Zero(dofs.n_dofs());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(mesh.n_elements()) * 9 *
                static_cast<size_t>(ref.npe) * static_cast<size_t>(ref.npe) / 2);

  Eigen::VectorXd f_red = Eigen::VectorXd::Zero(dofs.n_free);
  std::vector<QpGeom> geom;
  Eigen::MatrixXd ke;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    element_qp_geometry(mesh, ref, e, geom);
    element_stiffness(geom, ref.npe, d0, &scale[static_cast<size_t>(e) * nqp], ke);
    const auto& conn = mesh.elements[static_cast<size_t>(e)];

    for (int i = 0; i < ref.npe; ++i) {
      for (int ci = 0; ci < 3; ++ci) {
        const int gi = 3 * conn[static_cast<size_t>(i)] + ci;
        const int fi = dofs.free_index[static_cast<size_t>(gi)];
        if (fi < 0) continue;
        for (int j = 0; j < ref.npe; ++j) {
          for (int cj = 0; cj < 3; ++cj) {
            const int gj = 3 * conn[static_cast<size_t>(j)] + cj;
            const int fj = dofs.free_index[static_cast<size_t>(gj)];
            const double v = ke(3 * i + ci, 3 * j + cj);
            if (fj >= 0) {
              trips.emplace_back(fi, fj, v);
            } else {
              f_red[fi] -= v * dofs.prescribed[static_cast<size_t>(gj)];
            }
          }
        }
      }
    }

    if (loads.body_force) {
      for (size_t q = 0; q < nqp; ++q) {
        Vec3 xq = Vec3::Zero();
        for (int i = 0; i < ref.npe; ++i)
          xq += ref.shapes[q].N[static_cast<size_t>(i)] *
                mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(i)])];
        const Vec3 fq = loads.body_force(xq);
        for (int i = 0; i < ref.npe; ++i) {
          const double w = ref.shapes[q].N[static_cast<size_t>(i)] * geom[q].jxw;
          for (int c = 0; c < 3; ++c)
            f_full[3 * conn[static_cast<size_t>(i)] + c] += w * fq[c];
        }
      }
    }
  }

  for (const auto& [tag, traction] : loads.tractions) {
    auto it = mesh.face_tags.find(tag);
    if (it == mesh.face_tags.end())
      throw MissingTag("traction tag '" + tag + "' not present in mesh");
    for (const auto& face : it->second)
      integrate_face_traction(mesh, face, traction, nullptr, f_full);
  }

  for (int dof = 0; dof < dofs.n_dofs(); ++dof) {
    const int fi = dofs.free_index[static_cast<size_t>(dof)];
    if (fi >= 0) f_red[fi] += f_full[dof];
  }

  SparseSystem sys;
  sys.K.resize(dofs.n_free, dofs.n_free);
  sys.K.setFromTriplets(trips.begin(), trips.end());
  sys.K.makeCompressed();
  sys.F = std::move(f_red);
  return sys;
}

Eigen::SparseMatrix<double> assemble_unconstrained(const Mesh& mesh,
                                                   const MaterialParams& params,
                                                   const FieldState& state_prev) {
  const RefData ref = ref_data(mesh.kind);
  const LamePair lame = classical_lame(params);
  const auto d0 = voigt_stiffness(lame);
  const std::vector<double> scale = frozen_scales(mesh, params, state_prev, ref);
  const size_t nqp = ref.rule.points.size();

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<QpGeom> geom;
  Eigen::MatrixXd ke;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    element_qp_geometry(mesh, ref, e, geom);
    element_stiffness(geom, ref.npe, d0, &scale[static_cast<size_t>(e) * nqp], ke);
    const auto& conn = mesh.elements[static_cast<size_t>(e)];
    for (int i = 0; i < ref.npe; ++i)
      for (int ci = 0; ci < 3; ++ci)
        for (int j = 0; j < ref.npe; ++j)
          for (int cj = 0; cj < 3; ++cj)
            trips.emplace_back(3 * conn[static_cast<size_t>(i)] + ci,
                               3 * conn[static_cast<size_t>(j)] + cj, ke(3 * i + ci, 3 * j + cj));
  }
  Eigen::SparseMatrix<double> k(3 * mesh.n_nodes(), 3 * mesh.n_nodes());
  k.setFromTriplets(trips.begin(), trips.end());
  k.makeCompressed();
  return k;
}

Eigen::VectorXd expand_solution(const DofMap& dofs, const Eigen::VectorXd& free_values) {
  Eigen::VectorXd u(dofs.n_dofs());
  for (int dof = 0; dof < dofs.n_dofs(); ++dof) {
    const int fi = dofs.free_index[static_cast<size_t>(dof)];
    u[dof] = fi >= 0 ? free_values[fi] : dofs.prescribed[static_cast<size_t>(dof)];
  }
  return u;
}

Eigen::VectorXd restrict_free(const DofMap& dofs, const Eigen::VectorXd& full) {
  Eigen::VectorXd r(dofs.n_free);
  for (int dof = 0; dof < dofs.n_dofs(); ++dof) {
    const int fi = dofs.free_index[static_cast<size_t>(dof)];
    if (fi >= 0) r[fi] = full[dof];
  }
  return r;
}

}  // namespace poro
