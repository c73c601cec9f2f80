#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "poro/picard.hpp"
#include "poro/postproc.hpp"

using namespace poro;

namespace {

FieldState state_from_field(const Mesh& mesh, const std::function<Vec3(const Vec3&)>& f) {
  Eigen::VectorXd u(3 * mesh.n_nodes());
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const Vec3 v = f(mesh.nodes[static_cast<size_t>(n)]);
    for (int c = 0; c < 3; ++c) u[3 * n + c] = v[c];
  }
  return make_state(mesh, u, 0);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct SolvedPlate {
  Mesh mesh;
  FieldState state;
  MaterialParams params;
};

SolvedPlate solve_small_plate(double beta) {
  PlateSpec s;
  s.side_length = 0.1;
  s.thickness = 0.01;
  s.arm_half_length = 0.02;
  s.nx = s.ny = 12;
  s.nz = 1;
  Mesh mesh = generate_cross_crack_plate(s);
  std::vector<DirichletSpec> bcs = {
      {"y_min", {true, true, true}, [](const Vec3&) { return Vec3(0, -1e-3, 0); }},
      {"y_max", {true, true, true}, [](const Vec3&) { return Vec3(0, 1e-3, 0); }},
  };
  const DofMap dofs = build_dofmap(mesh, bcs);
  auto params = MaterialParams::isotropic(1e5, 0.3, beta);
  PicardOptions opt;
  opt.tol = 1e-9;
  opt.linear_rel_tol = 1e-11;
  const auto u0 = initial_guess_linear(mesh, dofs, params, {}, opt.linear_rel_tol);
  auto [state, report] = picard_solve(mesh, dofs, params, {}, opt, u0);
  REQUIRE(report.converged);
  return {std::move(mesh), std::move(state), params};
}

}  // namespace

TEST_SUITE("postproc") {

TEST_CASE("zero state recovers zero fields") {
  Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 2, 2, 2);
  auto params = MaterialParams::isotropic(1e5, 0.3, 3.0);
  const auto f = recover_fields(mesh, zero_state(mesh), params);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    CHECK(f.stress[static_cast<size_t>(n)].norm() == 0.0);
    CHECK(f.strain[static_cast<size_t>(n)].norm() == 0.0);
    CHECK(f.energy[static_cast<size_t>(n)] == 0.0);
  }
}

TEST_CASE("affine state recovers the analytic constant tensors") {
  Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 3, 3, 3);
  Eigen::Matrix3d a;
  a << 0.012, 0.003, -0.001,
       0.002, -0.006, 0.004,
       0.001, 0.002, 0.009;
  const auto state = state_from_field(mesh, [&](const Vec3& x) { return Vec3(a * x); });

  for (double beta : {0.0, 2.0}) {
    auto params = MaterialParams::isotropic(1e5, 0.3, beta);
    const SymTensor3 eps_exact = SymTensor3::from_matrix(0.5 * (a + a.transpose()));
    const SymTensor3 t_exact = stress_from_strain(eps_exact, params);
    const double w_exact = strain_energy_density(t_exact, eps_exact);

    const auto f = recover_fields(mesh, state, params);
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      CHECK((f.strain[static_cast<size_t>(n)] - eps_exact).norm() <= 1e-9 * eps_exact.norm());
      CHECK((f.stress[static_cast<size_t>(n)] - t_exact).norm() <= 1e-9 * t_exact.norm());
      CHECK(f.energy[static_cast<size_t>(n)] == doctest::Approx(w_exact).epsilon(1e-9));
    }
  }
}

TEST_CASE("uniaxial stretch of a single cube matches the Hooke expression") {
  Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 1, 1, 1);
  auto params = MaterialParams::isotropic(2.5, 0.25, 0.0);
  const auto lame = classical_lame(params);
  const double e11 = 0.004, e22 = 0.01, e33 = -0.002;
  const auto state = state_from_field(
      mesh, [&](const Vec3& x) { return Vec3(e11 * x.x(), e22 * x.y(), e33 * x.z()); });
  const auto f = recover_fields(mesh, state, params);
  const double t22_exact = (lame.lambda + 2 * lame.mu) * e22 + lame.lambda * (e11 + e33);
  for (int n = 0; n < mesh.n_nodes(); ++n)
    CHECK(f.stress[static_cast<size_t>(n)][1] == doctest::Approx(t22_exact).epsilon(1e-12));
}

TEST_CASE("probe of a constant field returns the constant everywhere") {
  Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 4, 4, 4);
  Eigen::Matrix3d a = 0.01 * Eigen::Matrix3d::Identity();
  const auto state = state_from_field(mesh, [&](const Vec3& x) { return Vec3(a * x); });
  auto params = MaterialParams::isotropic(1e5, 0.3, 1.0);
  const auto f = recover_fields(mesh, state, params);

  const auto probe =
      probe_ray(f, mesh, Vec3(0.1, 0.2, 0.5), Vec3(1, 0.5, 0).normalized(), 0.5, 10);
  REQUIRE(probe.samples.size() == 10);
  CHECK(!probe.clipped);
  for (const auto& s : probe.samples) {
    CHECK(s.t22 == doctest::Approx(probe.samples[0].t22).epsilon(1e-12));
    CHECK(s.eps22 == doctest::Approx(0.01).epsilon(1e-9));
  }
  // r strictly increasing
  for (size_t i = 1; i < probe.samples.size(); ++i)
    CHECK(probe.samples[i].r > probe.samples[i - 1].r);
}

TEST_CASE("probe sample landing on a node reproduces the nodal value") {
  auto sp = solve_small_plate(0.0);
  const auto f = recover_fields(sp.mesh, sp.state, sp.params);
  // Ray from the plate corner along +x at a lattice z; sample k=1 of 2 over
  // twice one cell lands exactly on the next lattice node.
  const double h = 0.1 / 12;
  const Vec3 origin(-0.05, -0.05, 0.0);
  const auto probe = probe_ray(f, sp.mesh, origin, Vec3(1, 0, 0), 2 * h, 2);
  REQUIRE(!probe.samples.empty());
  int node = -1;
  for (int n = 0; n < sp.mesh.n_nodes(); ++n)
    if ((sp.mesh.nodes[static_cast<size_t>(n)] - (origin + Vec3(h, 0, 0))).norm() < 1e-12) node = n;
  REQUIRE(node >= 0);
  CHECK(probe.samples[0].w == doctest::Approx(f.energy[static_cast<size_t>(node)]).epsilon(1e-12));
}

TEST_CASE("probe rays get clipped at the boundary with remaining samples dropped") {
  Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 2, 2, 2);
  const auto state = zero_state(mesh);
  auto params = MaterialParams::isotropic(1.0, 0.0, 0.0);
  const auto f = recover_fields(mesh, state, params);
  const auto probe = probe_ray(f, mesh, Vec3(0.5, 0.5, 0.5), Vec3(1, 0, 0), 2.0, 8);
  CHECK(probe.clipped);
  CHECK(probe.samples.size() == 2);  // r = 0.25, 0.5 inside; 0.75 exits at x=1.25

  CHECK_THROWS_AS(probe_ray(f, mesh, Vec3(5, 5, 5), Vec3(1, 0, 0), 1.0, 4), NotFound);
}

TEST_CASE("ray_fan with angle {0} reduces to probe_ray") {
  auto sp = solve_small_plate(0.0);
  const auto f = recover_fields(sp.mesh, sp.state, sp.params);
  const Vec3 tip = sp.mesh.tip("A").point;
  const auto fan = ray_fan(f, sp.mesh, tip, Vec3(1, 0, 0), {0.0}, 0.02, 16);
  const auto probe = probe_ray(f, sp.mesh, tip, Vec3(1, 0, 0), 0.02, 16);
  REQUIRE(fan.size() == 1);
  REQUIRE(fan[0].samples.size() == probe.samples.size());
  for (size_t i = 0; i < probe.samples.size(); ++i) {
    CHECK(fan[0].samples[i].w == probe.samples[i].w);
    CHECK(fan[0].samples[i].t22 == probe.samples[i].t22);
  }
}

TEST_CASE("symmetric angle pairs give equal near-tip energies on the symmetric problem") {
  auto sp = solve_small_plate(0.0);
  const auto f = recover_fields(sp.mesh, sp.state, sp.params);
  const Vec3 tip = sp.mesh.tip("A").point;
  const auto fan = ray_fan(f, sp.mesh, tip, Vec3(1, 0, 0), {45.0, -45.0, 120.0, -120.0},
                           0.015, 10);
  REQUIRE(fan.size() == 4);
  CHECK(fan[0].near_tip().w ==
        doctest::Approx(fan[1].near_tip().w).epsilon(1e-6));
  CHECK(fan[2].near_tip().w ==
        doctest::Approx(fan[3].near_tip().w).epsilon(1e-6));
}

TEST_CASE("recovered fields satisfy the constitutive residual at every node") {
  auto sp = solve_small_plate(2.0);
  const auto f = recover_fields(sp.mesh, sp.state, sp.params);
  for (int n = 0; n < sp.mesh.n_nodes(); ++n) {
    const auto& t = f.stress[static_cast<size_t>(n)];
    const auto& eps = f.strain[static_cast<size_t>(n)];
    const auto res = implicit_residual(t, eps, sp.params);
    CHECK(res.norm() <= 1e-8 * std::max(t.norm(), 1e-30));
    const auto back = strain_from_stress(t, eps.trace(), sp.params);
    CHECK((back - eps).norm() <= 1e-12 * std::max(eps.norm(), 1e-30));
  }
}

TEST_CASE("build_sweep_table percent changes") {
  {
    std::vector<SweepEntry> entries = {{0.0, 1.0, 2.0, 3.0}, {-1.0, 1.0, 2.0, 3.0}};
    const auto t = build_sweep_table(entries);
    CHECK(t.t22_pct[0] == 0.0);
    CHECK(t.t22_pct[1] == 0.0);
    CHECK(t.eps22_pct[1] == 0.0);
  }
  {
    // near-tip T22 pair 0.130 -> 0.143 is a +10.00% change
    std::vector<SweepEntry> entries = {{0.0, 0.130, 0.062, 1.0}, {-8.0, 0.143, 0.021, 1.0}};
    const auto t = build_sweep_table(entries);
    CHECK(t.t22_pct[1] == doctest::Approx(10.00).epsilon(1e-12));
    CHECK(t.eps22_pct[1] == doctest::Approx(-66.129032).epsilon(1e-6));
  }
  {
    // eps22 pair 0.062 -> 0.178 is +187.10% (2 dp)
    std::vector<SweepEntry> entries = {{0.0, 0.130, 0.062, 1.0}, {8.0, 0.091, 0.178, 1.0}};
    const auto t = build_sweep_table(entries);
    CHECK(t.eps22_pct[1] == doctest::Approx(187.0967742).epsilon(1e-8));
    CHECK(std::round(t.eps22_pct[1] * 100) / 100 == 187.10);
    CHECK(t.t22_pct[1] == doctest::Approx(-30.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(build_sweep_table({{1.0, 1, 1, 1}}), MissingBaseline);
}

TEST_CASE("csv exports: probe line count, sweep shape, quoting") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "poro_postproc_test";
  fs::create_directories(dir);

  ProbeResult probe;
  probe.samples = {{0.1, 1, 2, 3}, {0.2, 4, 5, 6}, {0.3, 7, 8, 9}};
  const auto probe_path = (dir / "probe.csv").string();
  export_csv(probe, probe_path);
  const std::string text = read_file(probe_path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.find("\r") == std::string::npos);
  CHECK(text.rfind("r,T22,eps22,W\n", 0) == 0);

  std::vector<SweepEntry> entries = {{0.0, 1, 1, 1}, {0.5, 2, 2, 2}};
  const auto sweep_path = (dir / "sweep.csv").string();
  export_csv(build_sweep_table(entries), sweep_path);
  const std::string sweep_text = read_file(sweep_path);
  CHECK(std::count(sweep_text.begin(), sweep_text.end(), '\n') == 7);
  CHECK(sweep_text.rfind("beta,0,0.5\n", 0) == 0);

  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("q\"q") == "\"q\"\"q\"");
  CHECK(csv_number(0.1234567891234) == "0.123456789");
}

TEST_CASE("vtk export has one point per mesh node") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "poro_postproc_test";
  fs::create_directories(dir);

  Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 2, 2, 2);
  auto params = MaterialParams::isotropic(1.0, 0.0, 0.0);
  const auto state = zero_state(mesh);
  const auto f = recover_fields(mesh, state, params);
  const auto path = (dir / "fields.vtk").string();
  export_vtk(mesh, f, &state.u, path);
  const std::string text = read_file(path);
  CHECK(text.find("# vtk DataFile Version 3.0") == 0);
  CHECK(text.find("POINTS 27 double") != std::string::npos);
  CHECK(text.find("CELLS 8 72") != std::string::npos);
  CHECK(text.find("SCALARS T_22 double 1") != std::string::npos);
  CHECK(text.find("SCALARS W double 1") != std::string::npos);
  CHECK(text.find("VECTORS displacement double") != std::string::npos);
}

}  // TEST_SUITE
