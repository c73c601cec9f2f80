#include <doctest.h>

#include "poro/picard.hpp"

using namespace poro;

namespace {

Mesh small_plate() {
  PlateSpec s;
  s.side_length = 0.1;
  s.thickness = 0.01;
  s.arm_half_length = 0.02;
  s.nx = s.ny = 10;
  s.nz = 1;
  return generate_cross_crack_plate(s);
}

std::vector<DirichletSpec> tension_bcs(double uy = 1e-3) {
  return {
      {"y_min", {true, true, true}, [uy](const Vec3&) { return Vec3(0, -uy, 0); }},
      {"y_max", {true, true, true}, [uy](const Vec3&) { return Vec3(0, uy, 0); }},
  };
}

}  // namespace

TEST_SUITE("picard") {

TEST_CASE("zero Dirichlet data and zero loads give the zero solution") {
  Mesh mesh = small_plate();
  std::vector<DirichletSpec> bcs = {
      {"y_min", {true, true, true}, nullptr},
      {"y_max", {true, true, true}, nullptr},
  };
  const DofMap dofs = build_dofmap(mesh, bcs);
  auto params = MaterialParams::isotropic(1e5, 0.3, 1.0);
  const auto u0 = initial_guess_linear(mesh, dofs, params, {});
  CHECK(u0.u.norm() == 0.0);

  PicardOptions opt;
  auto [state, report] = picard_solve(mesh, dofs, params, {}, opt, u0);
  CHECK(report.converged);
  CHECK(state.u.norm() == 0.0);
  CHECK(report.used_absolute_norm);
}

TEST_CASE("beta=0 converges in exactly one iteration from the linear guess") {
  Mesh mesh = small_plate();
  const DofMap dofs = build_dofmap(mesh, tension_bcs());
  auto params = MaterialParams::isotropic(1e5, 0.3, 0.0);
  const auto u0 = initial_guess_linear(mesh, dofs, params, {});

  PicardOptions opt;
  auto [state, report] = picard_solve(mesh, dofs, params, {}, opt, u0);
  CHECK(report.converged);
  CHECK(report.iterations == 1);
  CHECK(report.rel_change.back() < 1e-8);
  CHECK((state.u - u0.u).norm() <= 1e-8 * u0.u.norm());
}

TEST_CASE("converged-state restart converges in one iteration") {
  Mesh mesh = small_plate();
  const DofMap dofs = build_dofmap(mesh, tension_bcs());
  auto params = MaterialParams::isotropic(1e5, 0.3, 2.0);
  const auto u0 = initial_guess_linear(mesh, dofs, params, {});
  PicardOptions opt;
  opt.tol = 1e-8;
  auto [state, report] = picard_solve(mesh, dofs, params, {}, opt, u0);
  REQUIRE(report.converged);
  CHECK(report.iterations > 1);

  auto [state2, report2] = picard_solve(mesh, dofs, params, {}, opt, state);
  CHECK(report2.converged);
  CHECK(report2.iterations == 1);
}

TEST_CASE("tiny beta stays within 1e-6 of the linear solution") {
  Mesh mesh = small_plate();
  const DofMap dofs = build_dofmap(mesh, tension_bcs());
  auto p_lin = MaterialParams::isotropic(1e5, 0.3, 0.0);
  auto p_eps = MaterialParams::isotropic(1e5, 0.3, 1e-8);

  PicardOptions opt;
  opt.tol = 1e-10;
  opt.linear_rel_tol = 1e-12;
  const auto u0 = initial_guess_linear(mesh, dofs, p_lin, {}, opt.linear_rel_tol);
  auto [s_lin, r_lin] = picard_solve(mesh, dofs, p_lin, {}, opt, u0);
  auto [s_eps, r_eps] = picard_solve(mesh, dofs, p_eps, {}, opt, u0);
  REQUIRE(r_lin.converged);
  REQUIRE(r_eps.converged);
  CHECK((s_eps.u - s_lin.u).norm() <= 1e-6 * s_lin.u.norm());
}

TEST_CASE("affine Dirichlet data is reproduced exactly for any admissible beta") {
  // Constant-strain patch: with u = A x the dilatation is constant, so the
  // stress is constant and divergence-free; the discrete solution is exact.
  Mesh mesh = generate_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 2, 2, 2);
  Eigen::Matrix3d a;
  a << 0.01, 0.002, 0.0,
       0.001, -0.004, 0.003,
       0.0, 0.001, 0.008;
  auto affine = [a](const Vec3& x) { return Vec3(a * x); };
  std::vector<DirichletSpec> bcs;
  for (const char* tag : {"x_min", "x_max", "y_min", "y_max", "z_min", "z_max"})
    bcs.push_back({tag, {true, true, true}, affine});
  const DofMap dofs = build_dofmap(mesh, bcs);

  for (double beta : {-2.0, 0.0, 2.0}) {
    auto params = MaterialParams::isotropic(1e5, 0.3, beta);
    PicardOptions opt;
    opt.tol = 1e-12;
    opt.linear_rel_tol = 1e-13;
    const auto u0 = initial_guess_linear(mesh, dofs, params, {}, opt.linear_rel_tol);
    auto [state, report] = picard_solve(mesh, dofs, params, {}, opt, u0);
    REQUIRE(report.converged);
    double max_err = 0;
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      const Vec3 exact = affine(mesh.nodes[static_cast<size_t>(n)]);
      for (int c = 0; c < 3; ++c)
        max_err = std::max(max_err, std::abs(state.u[3 * n + c] - exact[c]));
    }
    CHECK(max_err <= 1e-9 * a.norm());
  }
}

TEST_CASE("solutions approach the linear one as beta -> 0 monotonically") {
  Mesh mesh = small_plate();
  const DofMap dofs = build_dofmap(mesh, tension_bcs());
  PicardOptions opt;
  opt.tol = 1e-9;
  opt.linear_rel_tol = 1e-12;

  auto p0 = MaterialParams::isotropic(1e5, 0.3, 0.0);
  const auto u0 = initial_guess_linear(mesh, dofs, p0, {}, opt.linear_rel_tol);
  auto [s0, r0] = picard_solve(mesh, dofs, p0, {}, opt, u0);
  REQUIRE(r0.converged);

  for (double sign : {1.0, -1.0}) {
    double prev = std::numeric_limits<double>::max();
    for (double mag : {1.0, 0.1, 0.01}) {
      auto p = MaterialParams::isotropic(1e5, 0.3, sign * mag);
      auto [s, r] = picard_solve(mesh, dofs, p, {}, opt, u0);
      REQUIRE(r.converged);
      const double diff = (s.u - s0.u).norm();
      CHECK(diff < prev);
      prev = diff;
    }
  }
}

TEST_CASE("report invariants: lengths and convergence flag") {
  Mesh mesh = small_plate();
  const DofMap dofs = build_dofmap(mesh, tension_bcs());
  auto params = MaterialParams::isotropic(1e5, 0.3, -4.0);
  PicardOptions opt;
  opt.tol = 1e-6;
  const auto u0 = initial_guess_linear(mesh, dofs, params, {});
  auto [state, report] = picard_solve(mesh, dofs, params, {}, opt, u0);
  REQUIRE(report.converged);
  CHECK(static_cast<int>(report.rel_change.size()) == report.iterations);
  CHECK(report.rel_change.back() < opt.tol);
  CHECK(state.iteration == report.iterations);
  CHECK(state_cache_error(mesh, state) == 0.0);
}

TEST_CASE("max_iter exhaustion returns the last iterate unconverged") {
  Mesh mesh = small_plate();
  const DofMap dofs = build_dofmap(mesh, tension_bcs());
  auto params = MaterialParams::isotropic(1e5, 0.3, 4.0);
  PicardOptions opt;
  opt.tol = 1e-14;  // unreachably tight
  opt.max_iter = 2;
  const auto u0 = initial_guess_linear(mesh, dofs, params, {});
  auto [state, report] = picard_solve(mesh, dofs, params, {}, opt, u0);
  CHECK(!report.converged);
  CHECK(report.iterations == 2);
  CHECK(state.u.allFinite());
}

}  // TEST_SUITE
