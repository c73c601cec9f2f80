#include "poro/postproc.hpp"

#include <cmath>
#include <numbers>

#include "poro/log.hpp"

namespace poro {

const ProbeSample& ProbeResult::near_tip() const {
  if (samples.empty()) throw NotFound("probe has no samples inside the mesh");
  return samples.front();
}

RecoveredFields recover_fields(const Mesh& mesh, const FieldState& state,
                               const MaterialParams& params) {
  if (state.u.size() != 3 * mesh.n_nodes())
    throw InconsistentState("state does not match mesh dof count");

  const auto rule = quadrature(mesh.kind);
  const int npe = nodes_per_element(mesh.kind);
  std::vector<ShapeEval> shapes;
  for (const auto& p : rule.points) shapes.push_back(shape_eval(mesh.kind, p));

  std::vector<SymTensor3> eps_sum(static_cast<size_t>(mesh.n_nodes()));
  std::vector<double> vol_sum(static_cast<size_t>(mesh.n_nodes()), 0.0);

  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& conn = mesh.elements[static_cast<size_t>(e)];
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const ShapeEval& se = shapes[q];
      Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
      for (int i = 0; i < npe; ++i)
        jac += mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(i)])] *
               se.dN[static_cast<size_t>(i)].transpose();
      const double det = jac.determinant();
      const Eigen::Matrix3d jinv_t = jac.inverse().transpose();

      Eigen::Matrix3d grad_u = Eigen::Matrix3d::Zero();
      for (int i = 0; i < npe; ++i) {
        const int node = conn[static_cast<size_t>(i)];
        const Vec3 gi = jinv_t * se.dN[static_cast<size_t>(i)];
        const Vec3 ui(state.u[3 * node], state.u[3 * node + 1], state.u[3 * node + 2]);
        grad_u += ui * gi.transpose();
      }
      const SymTensor3 eps_q = SymTensor3::from_matrix(0.5 * (grad_u + grad_u.transpose()));
      const double wv = rule.weights[q] * det;
      for (int i = 0; i < npe; ++i) {
        const int node = conn[static_cast<size_t>(i)];
        eps_sum[static_cast<size_t>(node)] += wv * eps_q;
        vol_sum[static_cast<size_t>(node)] += wv;
      }
    }
  }

  RecoveredFields out;
  out.strain.resize(static_cast<size_t>(mesh.n_nodes()));
  out.stress.resize(static_cast<size_t>(mesh.n_nodes()));
  out.energy.resize(static_cast<size_t>(mesh.n_nodes()));
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    if (vol_sum[static_cast<size_t>(n)] <= 0)
      throw InconsistentState("node " + std::to_string(n) + " has no adjacent elements");
    const SymTensor3 eps =
        eps_sum[static_cast<size_t>(n)] * (1.0 / vol_sum[static_cast<size_t>(n)]);
    const SymTensor3 t = stress_from_strain(eps, params);  // throws on degenerate states
    out.strain[static_cast<size_t>(n)] = eps;
    out.stress[static_cast<size_t>(n)] = t;
    out.energy[static_cast<size_t>(n)] = strain_energy_density(t, eps);
  }
  return out;
}

ProbeResult probe_ray(const RecoveredFields& fields, const Mesh& mesh, const Vec3& origin,
                      const Vec3& direction, double length, int n_samples) {
  if (n_samples < 2) throw BadSpec("probe needs n_samples >= 2");
  if (length <= 0) throw BadSpec("probe length must be positive");
  const Vec3 dir = direction.normalized();

  LocateResult at_origin;
  if (!try_locate_point(mesh, origin, at_origin))
    throw NotFound("probe origin is outside the mesh");

  ProbeResult res;
  res.origin = origin;
  res.direction = dir;
  for (int k = 1; k <= n_samples; ++k) {
    const double r = length * static_cast<double>(k) / n_samples;
    const Vec3 x = origin + r * dir;
    LocateResult loc;
    if (!try_locate_point(mesh, x, loc)) {
      res.clipped = true;
      PORO_LOG_WARN("probe ray clipped at r = " << r << " (sample " << k << " of " << n_samples
                                                << " left the mesh)");
      break;
    }
    const auto se = shape_eval(mesh.kind, loc.local);
    const auto& conn = mesh.elements[static_cast<size_t>(loc.element)];
    ProbeSample s;
    s.r = r;
    for (int i = 0; i < se.n; ++i) {
      const int node = conn[static_cast<size_t>(i)];
      const double ni = se.N[static_cast<size_t>(i)];
      s.t22 += ni * fields.stress[static_cast<size_t>(node)][1];
      s.eps22 += ni * fields.strain[static_cast<size_t>(node)][1];
      s.w += ni * fields.energy[static_cast<size_t>(node)];
    }
    res.samples.push_back(s);
  }
  return res;
}

std::vector<ProbeResult> ray_fan(const RecoveredFields& fields, const Mesh& mesh,
                                 const Vec3& tip, const Vec3& outward_axis,
                                 const std::vector<double>& angles_deg, double length,
                                 int n_samples) {
  if (angles_deg.empty()) throw BadSpec("ray fan needs at least one angle");
  Vec3 axis = outward_axis;
  axis.z() = 0;
  if (axis.norm() == 0) throw BadSpec("outward axis must have an in-plane component");
  axis.normalize();

  std::vector<ProbeResult> out;
  out.reserve(angles_deg.size());
  for (double deg : angles_deg) {
    const double th = deg * std::numbers::pi / 180.0;
    const Vec3 d(axis.x() * std::cos(th) - axis.y() * std::sin(th),
                 axis.x() * std::sin(th) + axis.y() * std::cos(th), 0.0);
    out.push_back(probe_ray(fields, mesh, tip, d, length, n_samples));
  }
  return out;
}

SweepTable build_sweep_table(const std::vector<SweepEntry>& entries) {
  const SweepEntry* baseline = nullptr;
  for (const auto& e : entries)
    if (e.beta == 0.0) baseline = &e;
  if (!baseline) throw MissingBaseline("sweep table requires a beta = 0 baseline entry");

  SweepTable t;
  auto pct = [](double v, double v0) { return (v - v0) / v0 * 100.0; };
  for (const auto& e : entries) {
    t.betas.push_back(e.beta);
    t.t22.push_back(e.t22);
    t.eps22.push_back(e.eps22);
    t.w.push_back(e.w);
    t.t22_pct.push_back(pct(e.t22, baseline->t22));
    t.eps22_pct.push_back(pct(e.eps22, baseline->eps22));
    t.w_pct.push_back(pct(e.w, baseline->w));
  }
  return t;
}

}  // namespace poro
