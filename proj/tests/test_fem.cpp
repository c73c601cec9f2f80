#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "poro/fem.hpp"
#include "poro/mesh.hpp"

using namespace poro;

namespace {

// ---- independent oracles ------------------------------------------------

// Trilinear basis on the unit cube written from the 1D-hat product, in the
// local node order of the given element's corner coordinates.
double oracle_shape(const Vec3& corner, const Vec3& x) {
  double v = 1.0;
  for (int d = 0; d < 3; ++d) v *= corner[d] > 0.5 ? x[d] : (1.0 - x[d]);
  return v;
}

Vec3 oracle_shape_grad(const Vec3& corner, const Vec3& x) {
  Vec3 g;
  for (int d = 0; d < 3; ++d) {
    double v = corner[d] > 0.5 ? 1.0 : -1.0;
    for (int e = 0; e < 3; ++e) {
      if (e == d) continue;
      v *= corner[e] > 0.5 ? x[e] : (1.0 - x[e]);
    }
    g[d] = v;
  }
  return g;
}

// C_{ipjq} = lambda d_ip d_jq + mu (d_ij d_pq + d_iq d_jp)
double elasticity_tensor(const LamePair& lame, int i, int p, int j, int q) {
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  return lame.lambda * d(i, p) * d(j, q) + lame.mu * (d(i, j) * d(p, q) + d(i, q) * d(p, j));
}

// Dense 24x24 unit-cube element stiffness by brute-force 4x4x4 quadrature
// over the physical cube, scattered into global dof order.
Eigen::MatrixXd oracle_unit_cube_stiffness(const Mesh& mesh, const LamePair& lame) {
  REQUIRE(mesh.n_elements() == 1);
  const auto& conn = mesh.elements[0];
  std::array<Vec3, 8> corners;
  for (int c = 0; c < 8; ++c) corners[static_cast<size_t>(c)] = mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(c)])];

  const QuadratureRule q = gauss_hex(4);
  Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(24, 24);
  for (size_t k = 0; k < q.points.size(); ++k) {
    const Vec3 x = 0.5 * (q.points[k] + Vec3::Ones());  // map [-1,1]^3 -> [0,1]^3
    const double w = q.weights[k] / 8.0;
    std::array<Vec3, 8> g;
    for (int a = 0; a < 8; ++a) g[static_cast<size_t>(a)] = oracle_shape_grad(corners[static_cast<size_t>(a)], x);
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i)
        for (int b = 0; b < 8; ++b)
          for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int p = 0; p < 3; ++p)
              for (int qq = 0; qq < 3; ++qq)
                s += elasticity_tensor(lame, i, p, j, qq) * g[static_cast<size_t>(a)][p] *
                     g[static_cast<size_t>(b)][qq];
            ke(3 * conn[static_cast<size_t>(a)] + i, 3 * conn[static_cast<size_t>(b)] + j) += w * s;
          }
  }
  return ke;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

Mesh unit_cube() { return generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 1, 1, 1); }

// Dense solve by hand-rolled Gaussian elimination with partial pivoting.
Eigen::VectorXd oracle_dense_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const int n = static_cast<int>(a.rows());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    a.row(col).swap(a.row(piv));
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      a.row(r) -= f * a.row(col);
      b[r] -= f * b[col];
    }
  }
  Eigen::VectorXd x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a(r, c) * x[c];
    x[r] = s / a(r, r);
  }
  return x;
}

}  // namespace

TEST_SUITE("fem") {

TEST_CASE("shape functions: partition of unity and zero gradient sum") {
  std::mt19937 rng(11u);
  std::uniform_real_distribution<double> hex(-1.0, 1.0);
  std::uniform_real_distribution<double> tet(0.0, 0.3);
  for (int t = 0; t < 200; ++t) {
    {
      const auto se = shape_eval(ElementKind::hex8, Vec3(hex(rng), hex(rng), hex(rng)));
      double sum = 0;
      Vec3 gsum = Vec3::Zero();
      for (int i = 0; i < se.n; ++i) {
        sum += se.N[static_cast<size_t>(i)];
        gsum += se.dN[static_cast<size_t>(i)];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(gsum.norm() < 1e-14);
    }
    {
      const auto se = shape_eval(ElementKind::tet4, Vec3(tet(rng), tet(rng), tet(rng)));
      double sum = 0;
      Vec3 gsum = Vec3::Zero();
      for (int i = 0; i < se.n; ++i) {
        sum += se.N[static_cast<size_t>(i)];
        gsum += se.dN[static_cast<size_t>(i)];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(gsum.norm() < 1e-14);
    }
  }

  const auto center = shape_eval(ElementKind::hex8, Vec3::Zero());
  for (int i = 0; i < 8; ++i) CHECK(center.N[static_cast<size_t>(i)] == doctest::Approx(0.125));
}

TEST_CASE("hex quadrature: weights sum to 8 and tri-degree-3 exactness") {
  const auto q = quadrature(ElementKind::hex8);
  double wsum = 0;
  for (double w : q.weights) wsum += w;
  CHECK(wsum == doctest::Approx(8.0).epsilon(1e-14));

  // symbolic oracle: int_{-1}^{1} x^a dx = 2/(a+1) for even a, 0 for odd
  auto line_integral = [](int a) { return a % 2 == 1 ? 0.0 : 2.0 / (a + 1); };
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b)
      for (int c = 0; c <= 3; ++c) {
        double by_rule = 0;
        for (size_t k = 0; k < q.points.size(); ++k)
          by_rule += q.weights[k] * std::pow(q.points[k].x(), a) * std::pow(q.points[k].y(), b) *
                     std::pow(q.points[k].z(), c);
        const double exact = line_integral(a) * line_integral(b) * line_integral(c);
        CHECK(by_rule == doctest::Approx(exact).epsilon(1e-13));
      }
}

TEST_CASE("tet quadrature: weights sum to 1/6 and degree-2 exactness") {
  const auto q = quadrature(ElementKind::tet4);
  double wsum = 0;
  for (double w : q.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

  // symbolic oracle on the unit tet: int x^p y^q z^r = p! q! r! / (p+q+r+3)!
  for (int p = 0; p <= 2; ++p)
    for (int qq = 0; qq + p <= 2; ++qq)
      for (int r = 0; r + qq + p <= 2; ++r) {
        double by_rule = 0;
        for (size_t k = 0; k < q.points.size(); ++k)
          by_rule += q.weights[k] * std::pow(q.points[k].x(), p) * std::pow(q.points[k].y(), qq) *
                     std::pow(q.points[k].z(), r);
        const double exact =
            factorial(p) * factorial(qq) * factorial(r) / factorial(p + qq + r + 3);
        CHECK(by_rule == doctest::Approx(exact).epsilon(1e-13));
      }
}

TEST_CASE("single-cube element stiffness matches the dense quadrature oracle") {
  Mesh mesh = unit_cube();
  auto params = MaterialParams::isotropic(1.0, 0.25, 0.0);
  const auto k_sparse = assemble_unconstrained(mesh, params, zero_state(mesh));
  const Eigen::MatrixXd k = Eigen::MatrixXd(k_sparse);
  const Eigen::MatrixXd k_oracle = oracle_unit_cube_stiffness(mesh, classical_lame(params));

  const double scale = k_oracle.cwiseAbs().maxCoeff();
  CHECK((k - k_oracle).cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

TEST_CASE("zero previous state gives the beta=0 system for any beta") {
  PlateSpec s;
  s.side_length = 2.0;
  s.thickness = 1.0;
  s.arm_half_length = 0.5;
  s.nx = s.ny = 4;
  s.nz = 1;
  Mesh mesh = generate_cross_crack_plate(s);
  auto p0 = MaterialParams::isotropic(3.0, 0.2, 0.0);
  auto p7 = MaterialParams::isotropic(3.0, 0.2, 7.0);
  const auto k0 = assemble_unconstrained(mesh, p0, zero_state(mesh));
  const auto k7 = assemble_unconstrained(mesh, p7, zero_state(mesh));
  CHECK((Eigen::MatrixXd(k0) - Eigen::MatrixXd(k7)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rigid-body modes are in the near-null space of the unconstrained stiffness") {
  Mesh mesh = unit_cube();
  auto params = MaterialParams::isotropic(2.0, 0.3, 0.0);
  const auto k = assemble_unconstrained(mesh, params, zero_state(mesh));
  const double kmax = Eigen::MatrixXd(k).cwiseAbs().maxCoeff();

  std::vector<Eigen::VectorXd> modes;
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(k.rows());
    for (int n = 0; n < mesh.n_nodes(); ++n) t[3 * n + c] = 1.0;
    modes.push_back(t);
  }
  for (int axis = 0; axis < 3; ++axis) {
    Vec3 omega = Vec3::Zero();
    omega[axis] = 1.0;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(k.rows());
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      const Vec3 u = omega.cross(mesh.nodes[static_cast<size_t>(n)]);
      for (int c = 0; c < 3; ++c) r[3 * n + c] = u[c];
    }
    modes.push_back(r);
  }
  for (const auto& m : modes)
    CHECK((k * m).cwiseAbs().maxCoeff() <= 1e-9 * kmax * m.cwiseAbs().maxCoeff());
}

TEST_CASE("assembled stiffness is symmetric to 1e-12 relative") {
  PlateSpec s;
  s.side_length = 2.0;
  s.thickness = 0.5;
  s.arm_half_length = 0.5;
  s.nx = s.ny = 6;
  s.nz = 2;
  Mesh mesh = generate_cross_crack_plate(s);

  std::mt19937 rng(5u);
  std::normal_distribution<double> n(0.0, 0.01);
  Eigen::VectorXd u(3 * mesh.n_nodes());
  for (int i = 0; i < u.size(); ++i) u[i] = n(rng);
  auto params = MaterialParams::isotropic(1.0e5, 0.3, 1.2);
  const auto state = make_state(mesh, u, 1);
  const auto k = assemble_unconstrained(mesh, params, state);
  const Eigen::MatrixXd kd = Eigen::MatrixXd(k);
  CHECK((kd - kd.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * kd.cwiseAbs().maxCoeff());
}

TEST_CASE("frozen-coefficient assembly equals per-point effective-moduli assembly") {
  // Two code paths: the production assembly scales the constant classical
  // tensor by 1/(1+beta tr eps) per quadrature point; the check rebuilds
  // each element matrix from effective_lame at every point.
  PlateSpec s;
  s.side_length = 1.0;
  s.thickness = 0.25;
  s.arm_half_length = 0.25;
  s.nx = s.ny = 4;
  s.nz = 1;
  Mesh mesh = generate_cross_crack_plate(s);

  std::mt19937 rng(17u);
  std::normal_distribution<double> nd(0.0, 0.005);
  Eigen::VectorXd u(3 * mesh.n_nodes());
  for (int i = 0; i < u.size(); ++i) u[i] = nd(rng);
  auto params = MaterialParams::isotropic(2.0, 0.28, 2.0);
  const auto state = make_state(mesh, u, 1);
  const auto base = classical_lame(params);

  const Eigen::MatrixXd k_prod = Eigen::MatrixXd(assemble_unconstrained(mesh, params, state));

  const auto rule = quadrature(mesh.kind);
  Eigen::MatrixXd k_alt = Eigen::MatrixXd::Zero(3 * mesh.n_nodes(), 3 * mesh.n_nodes());
  size_t qp_index = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& conn = mesh.elements[static_cast<size_t>(e)];
    for (size_t q = 0; q < rule.points.size(); ++q, ++qp_index) {
      const auto se = shape_eval(mesh.kind, rule.points[q]);
      Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
      for (int i = 0; i < 8; ++i)
        jac += mesh.nodes[static_cast<size_t>(conn[static_cast<size_t>(i)])] *
               se.dN[static_cast<size_t>(i)].transpose();
      const Eigen::Matrix3d jinv_t = jac.inverse().transpose();
      const double jxw = rule.weights[q] * jac.determinant();

      const LamePair eff = effective_lame(base, params.beta, state.tr_eps_qp[qp_index]);
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 24);
      for (int i = 0; i < 8; ++i) {
        const Vec3 g = jinv_t * se.dN[static_cast<size_t>(i)];
        b(0, 3 * i) = g.x();
        b(1, 3 * i + 1) = g.y();
        b(2, 3 * i + 2) = g.z();
        b(3, 3 * i + 1) = g.z();
        b(3, 3 * i + 2) = g.y();
        b(4, 3 * i) = g.z();
        b(4, 3 * i + 2) = g.x();
        b(5, 3 * i) = g.y();
        b(5, 3 * i + 1) = g.x();
      }
      Eigen::Matrix<double, 6, 6> d = Eigen::Matrix<double, 6, 6>::Zero();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d(i, j) = eff.lambda;
      for (int i = 0; i < 3; ++i) d(i, i) += 2.0 * eff.mu;
      for (int i = 3; i < 6; ++i) d(i, i) = eff.mu;
      const Eigen::MatrixXd ke = jxw * b.transpose() * d * b;
      for (int i = 0; i < 8; ++i)
        for (int ci = 0; ci < 3; ++ci)
          for (int j = 0; j < 8; ++j)
            for (int cj = 0; cj < 3; ++cj)
              k_alt(3 * conn[static_cast<size_t>(i)] + ci, 3 * conn[static_cast<size_t>(j)] + cj) +=
                  ke(3 * i + ci, 3 * j + cj);
    }
  }
  CHECK((k_prod - k_alt).cwiseAbs().maxCoeff() <= 1e-13 * k_prod.cwiseAbs().maxCoeff());
}

TEST_CASE("state cache matches recomputation and size mismatches are rejected") {
  Mesh mesh = unit_cube();
  std::mt19937 rng(3u);
  std::normal_distribution<double> nd(0.0, 0.1);
  Eigen::VectorXd u(3 * mesh.n_nodes());
  for (int i = 0; i < u.size(); ++i) u[i] = nd(rng);
  auto state = make_state(mesh, u, 2);
  CHECK(state_cache_error(mesh, state) == 0.0);

  auto params = MaterialParams::isotropic(1.0, 0.3, 1.0);
  state.tr_eps_qp.resize(3);
  CHECK_THROWS_AS(assemble_unconstrained(mesh, params, state), InconsistentState);
}

TEST_CASE("solve_spd: identity, zero rhs, dense oracle") {
  {
    SparseSystem sys;
    sys.K.resize(4, 4);
    sys.K.setIdentity();
    sys.F = Eigen::VectorXd::Zero(4);
    sys.F[0] = 1.0;
    const auto u = solve_spd(sys, 1e-12);
    CHECK((u - sys.F).norm() < 1e-12);
  }
  {
    SparseSystem sys;
    sys.K.resize(4, 4);
    sys.K.setIdentity();
    sys.F = Eigen::VectorXd::Zero(4);
    const auto u = solve_spd(sys, 1e-12);
    CHECK(u.norm() == 0.0);
  }
  {
    std::mt19937 rng(29u);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd m(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) m(i, j) = nd(rng);
    Eigen::MatrixXd a = m.transpose() * m + 5.0 * Eigen::MatrixXd::Identity(5, 5);
    Eigen::VectorXd f(5);
    for (int i = 0; i < 5; ++i) f[i] = nd(rng);

    SparseSystem sys;
    sys.K = a.sparseView();
    sys.F = f;
    LinearSolveStats stats;
    const auto u = solve_spd(sys, 1e-12, nullptr, &stats);
    const auto u_oracle = oracle_dense_solve(a, f);
    CHECK((u - u_oracle).norm() <= 1e-9 * u_oracle.norm());
    CHECK(stats.residual <= 1e-12 * (1 + 1e-12));
  }
}

TEST_CASE("dofmap constrains tagged faces and partitions dofs") {
  PlateSpec s;
  s.side_length = 2.0;
  s.thickness = 1.0;
  s.arm_half_length = 0.5;
  s.nx = s.ny = 4;
  s.nz = 1;
  Mesh mesh = generate_cross_crack_plate(s);

  const Vec3 top(0, 1e-3, 0);
  std::vector<DirichletSpec> bcs = {
      {"y_min", {true, true, true}, [](const Vec3&) { return Vec3(0, -1e-3, 0); }},
      {"y_max", {true, true, true}, [top](const Vec3&) { return top; }},
  };
  const DofMap dofs = build_dofmap(mesh, bcs);

  int n_constrained = 0;
  for (int d = 0; d < dofs.n_dofs(); ++d) {
    const bool c = dofs.is_constrained[static_cast<size_t>(d)];
    const bool f = dofs.free_index[static_cast<size_t>(d)] >= 0;
    CHECK(c != f);
    if (c) ++n_constrained;
  }
  // two faces of 5x2 nodes each, 3 components
  CHECK(n_constrained == 2 * 10 * 3);
  CHECK(dofs.n_free == dofs.n_dofs() - n_constrained);

  CHECK_THROWS_AS(build_dofmap(mesh, {{"nope", {true, true, true}, nullptr}}), MissingTag);
}

TEST_CASE("neumann traction on a unit cube face matches the analytic reaction") {
  // Pull the +x face with a unit normal traction while clamping -x; with
  // nu = 0 the displacement field is u_x = x / E.
  Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 2, 2, 2);
  auto params = MaterialParams::isotropic(4.0, 0.0, 0.0);
  std::vector<DirichletSpec> bcs = {
      {"x_min", {true, false, false}, nullptr},
      {"y_min", {false, true, false}, nullptr},
      {"z_min", {false, false, true}, nullptr},
  };
  const DofMap dofs = build_dofmap(mesh, bcs);
  Loads loads;
  loads.tractions["x_max"] = Vec3(1.0, 0, 0);
  const auto sys = assemble(mesh, dofs, params, zero_state(mesh), loads);
  const auto u_free = solve_spd(sys, 1e-12);
  const auto u = expand_solution(dofs, u_free);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const Vec3& p = mesh.nodes[static_cast<size_t>(n)];
    CHECK(u[3 * n] == doctest::Approx(p.x() / 4.0).epsilon(1e-9));
    CHECK(std::abs(u[3 * n + 1]) < 1e-10);
    CHECK(std::abs(u[3 * n + 2]) < 1e-10);
  }
}

}  // TEST_SUITE
