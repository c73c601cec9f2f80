#include "poro/verify.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace poro {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<DirichletSpec> all_faces_dirichlet(const std::function<Vec3(const Vec3&)>& value) {
  std::vector<DirichletSpec> bcs;
  for (const char* tag : {"x_min", "x_max", "y_min", "y_max", "z_min", "z_max"})
    bcs.push_back({tag, {true, true, true}, value});
  return bcs;
}

/// L2 norm of (u_h - u_exact) over the mesh with a 3x3x3 Gauss rule.
double l2_error(const Mesh& mesh, const FieldState& state, const ExactField& exact) {
  const auto rule = gauss_hex(3);
  std::vector<ShapeEval> shapes;
  for (const auto& p : rule.points) shapes.push_back(shape_eval(mesh.kind, p));

  double acc = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& conn = mesh.elements[static_cast<size_t>(e)];
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const ShapeEval& se = shapes[q];
      Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
      Vec3 xq = Vec3::Zero();
      Vec3 uh = Vec3::Zero();
      for (int i = 0; i < se.n; ++i) {
        const int node = conn[static_cast<size_t>(i)];
        const Vec3& p = mesh.nodes[static_cast<size_t>(node)];
        jac += p * se.dN[static_cast<size_t>(i)].transpose();
        xq += se.N[static_cast<size_t>(i)] * p;
        uh += se.N[static_cast<size_t>(i)] *
              Vec3(state.u[3 * node], state.u[3 * node + 1], state.u[3 * node + 2]);
      }
      acc += rule.weights[q] * jac.determinant() * (uh - exact.u(xq)).squaredNorm();
    }
  }
  return std::sqrt(acc);
}

ConvergenceReport converge(const std::vector<int>& divisions, double required_rate,
                           const std::function<double(int)>& error_of) {
  if (divisions.size() < 3) throw BadSpec("convergence study needs at least 3 refinements");
  ConvergenceReport rep;
  rep.divisions = divisions;
  rep.required_rate = required_rate;
  for (int n : divisions) {
    rep.h.push_back(1.0 / n);
    rep.error_l2.push_back(error_of(n));
  }
  rep.errors_decrease = true;
  for (size_t i = 1; i < rep.error_l2.size(); ++i)
    if (!(rep.error_l2[i] < rep.error_l2[i - 1])) rep.errors_decrease = false;

  // least-squares slope of log(e) against log(h)
  const size_t m = rep.h.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < m; ++i) {
    const double x = std::log(rep.h[i]);
    const double y = std::log(rep.error_l2[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  rep.fitted_rate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  rep.pass = rep.errors_decrease && rep.fitted_rate >= required_rate;
  return rep;
}

}  // namespace

ExactField trig_field(double amplitude) {
  ExactField f;
  f.u = [amplitude](const Vec3& x) {
    const double s = amplitude * std::sin(kPi * x.x()) * std::sin(kPi * x.y()) *
                     std::sin(kPi * x.z());
    return Vec3(s, s, s);
  };
  f.grad_u = [amplitude](const Vec3& x) {
    const double sx = std::sin(kPi * x.x()), cx = std::cos(kPi * x.x());
    const double sy = std::sin(kPi * x.y()), cy = std::cos(kPi * x.y());
    const double sz = std::sin(kPi * x.z()), cz = std::cos(kPi * x.z());
    const double gx = amplitude * kPi * cx * sy * sz;
    const double gy = amplitude * kPi * sx * cy * sz;
    const double gz = amplitude * kPi * sx * sy * cz;
    Eigen::Matrix3d g;
    g << gx, gy, gz,
         gx, gy, gz,
         gx, gy, gz;
    return g;
  };
  return f;
}

Vec3 trig_body_force(double amplitude, const LamePair& lame, const Vec3& x) {
  const double sx = std::sin(kPi * x.x()), cx = std::cos(kPi * x.x());
  const double sy = std::sin(kPi * x.y()), cy = std::cos(kPi * x.y());
  const double sz = std::sin(kPi * x.z()), cz = std::cos(kPi * x.z());
  const double s = sx * sy * sz;
  const double mx = sx * cy * cz;
  const double my = cx * sy * cz;
  const double mz = cx * cy * sz;
  const double f = amplitude * kPi * kPi;
  const double lm = lame.lambda + lame.mu;
  return Vec3(f * (3.0 * lame.mu * s + lm * (s - my - mz)),
              f * (3.0 * lame.mu * s + lm * (s - mx - mz)),
              f * (3.0 * lame.mu * s + lm * (s - mx - my)));
}

PatchReport patch_test(double E, double nu, const std::vector<double>& betas) {
  Eigen::Matrix3d a;
  a << 0.010, 0.004, -0.002,
       0.003, -0.006, 0.005,
       -0.001, 0.002, 0.008;
  const double tr = a.trace();

  Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 2, 2, 2);
  auto affine = [a](const Vec3& x) { return Vec3(a * x); };
  const DofMap dofs = build_dofmap(mesh, all_faces_dirichlet(affine));

  PatchReport rep;
  rep.tolerance = 1e-9 * a.norm();
  rep.pass = true;
  for (double beta : betas) {
    if (1.0 + beta * tr <= kStiffnessFloor)
      throw BadSpec("patch test beta makes the constant dilatation inadmissible");
    auto params = MaterialParams::isotropic(E, nu, beta);
    PicardOptions opt;
    opt.tol = 1e-12;
    opt.linear_rel_tol = 1e-13;
    const auto u0 = initial_guess_linear(mesh, dofs, params, {}, opt.linear_rel_tol);
    auto [state, report] = picard_solve(mesh, dofs, params, {}, opt, u0);

    PatchCase pc;
    pc.beta = beta;
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      const Vec3 exact = affine(mesh.nodes[static_cast<size_t>(n)]);
      for (int c = 0; c < 3; ++c) {
        const double err = std::abs(state.u[3 * n + c] - exact[c]);
        if (err > pc.max_error) {
          pc.max_error = err;
          pc.worst_point = mesh.nodes[static_cast<size_t>(n)];
        }
      }
    }
    pc.pass = report.converged && pc.max_error <= rep.tolerance;
    rep.pass = rep.pass && pc.pass;
    rep.cases.push_back(pc);
  }
  return rep;
}

ConvergenceReport mms_linear_convergence(const std::vector<int>& divisions, double E, double nu,
                                         double required_rate) {
  const double amplitude = 0.01;
  const ExactField exact = trig_field(amplitude);
  const LamePair lame = classical_lame(MaterialParams::isotropic(E, nu, 0.0));

  return converge(divisions, required_rate, [&](int n) {
    Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), n, n, n);
    const DofMap dofs = build_dofmap(mesh, all_faces_dirichlet(exact.u));
    Loads loads;
    loads.body_force = [&](const Vec3& x) { return trig_body_force(amplitude, lame, x); };
    auto params = MaterialParams::isotropic(E, nu, 0.0);
    const auto sys = assemble(mesh, dofs, params, zero_state(mesh), loads);
    const auto u_free = solve_spd(sys, 1e-11);
    return l2_error(mesh, make_state(mesh, expand_solution(dofs, u_free), 1), exact);
  });
}

Vec3 mms_nonlinear_body_force(const ExactField& exact, const MaterialParams& params,
                              const Vec3& x, double domain_size, double fd_step_rel) {
  const double h = fd_step_rel * domain_size;
  auto stress_at = [&](const Vec3& p) {
    const Eigen::Matrix3d g = exact.grad_u(p);
    return stress_from_strain(SymTensor3::from_matrix(0.5 * (g + g.transpose())), params);
  };
  Vec3 f = Vec3::Zero();
  for (int j = 0; j < 3; ++j) {
    Vec3 dp = Vec3::Zero();
    dp[j] = h;
    const SymTensor3 tp = stress_at(x + dp);
    const SymTensor3 tm = stress_at(x - dp);
    const Eigen::Matrix3d dT = (tp.matrix() - tm.matrix()) / (2.0 * h);
    f -= dT.col(j);
  }
  return f;
}

ConvergenceReport mms_nonlinear_convergence(const std::vector<int>& divisions,
                                            const MaterialParams& params,
                                            double required_rate) {
  const double amplitude = 0.01;
  const ExactField exact = trig_field(amplitude);

  return converge(divisions, required_rate, [&](int n) {
    Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), n, n, n);
    const DofMap dofs = build_dofmap(mesh, all_faces_dirichlet(exact.u));
    Loads loads;
    loads.body_force = [&](const Vec3& x) {
      return mms_nonlinear_body_force(exact, params, x);
    };
    PicardOptions opt;
    opt.tol = 1e-10;
    opt.linear_rel_tol = 1e-11;
    const auto u0 = initial_guess_linear(mesh, dofs, params, loads, opt.linear_rel_tol);
    auto [state, report] = picard_solve(mesh, dofs, params, loads, opt, u0);
    if (!report.converged)
      throw NotConverged("nonlinear MMS picard loop did not converge on n=" + std::to_string(n));
    return l2_error(mesh, state, exact);
  });
}

MaterialOracleReport material_oracles(int trials, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> betas(-8.0, 8.0);
  std::uniform_real_distribution<double> comp(-0.2, 0.2);

  MaterialOracleReport rep;
  while (rep.trials < trials) {
    const double beta = betas(rng);
    SymTensor3 eps;
    for (int i = 0; i < 6; ++i) eps[i] = comp(rng);
    if (1.0 + beta * eps.trace() <= 0.05) continue;
    ++rep.trials;
    auto params = MaterialParams::isotropic(1.3e5, 0.29, beta);
    const auto t = stress_from_strain(eps, params);
    const auto back = strain_from_stress(t, eps.trace(), params);
    rep.max_roundtrip_rel =
        std::max(rep.max_roundtrip_rel, (back - eps).norm() / std::max(eps.norm(), 1e-30));
    const auto res = implicit_residual(t, eps, params);
    rep.max_residual_rel =
        std::max(rep.max_residual_rel, res.norm() / std::max(t.norm(), 1e-30));
  }
  rep.pass = rep.max_roundtrip_rel <= 1e-12 && rep.max_residual_rel <= 1e-10;
  return rep;
}

VerifySummary run_verification(double E, double nu) {
  VerifySummary s;
  s.patch = patch_test(E, nu, {-2.0, 0.0, 2.0});
  s.linear = mms_linear_convergence({6, 12, 24}, E, nu);
  s.nonlinear = mms_nonlinear_convergence({6, 12, 24}, MaterialParams::isotropic(E, nu, 1.0));
  s.material = material_oracles();
  s.pass = s.patch.pass && s.linear.pass && s.nonlinear.pass && s.material.pass;
  return s;
}

nlohmann::json to_json(const VerifySummary& s) {
  nlohmann::json j;
  j["pass"] = s.pass;

  nlohmann::json patch;
  patch["pass"] = s.patch.pass;
  patch["tolerance"] = s.patch.tolerance;
  for (const auto& c : s.patch.cases) {
    patch["cases"].push_back({{"beta", c.beta},
                              {"max_error", c.max_error},
                              {"worst_point", {c.worst_point.x(), c.worst_point.y(), c.worst_point.z()}},
                              {"pass", c.pass}});
  }
  j["patch_test"] = patch;

  auto conv = [](const ConvergenceReport& r) {
    return nlohmann::json{{"divisions", r.divisions},
                          {"h", r.h},
                          {"l2_error", r.error_l2},
                          {"fitted_rate", r.fitted_rate},
                          {"required_rate", r.required_rate},
                          {"errors_decrease", r.errors_decrease},
                          {"pass", r.pass}};
  };
  j["mms_linear"] = conv(s.linear);
  j["mms_nonlinear"] = conv(s.nonlinear);
  j["material_oracles"] = {{"trials", s.material.trials},
                           {"max_roundtrip_rel", s.material.max_roundtrip_rel},
                           {"max_residual_rel", s.material.max_residual_rel},
                           {"pass", s.material.pass}};
  return j;
}

}  // namespace poro
