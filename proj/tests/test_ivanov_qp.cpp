#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qp_oracle.hpp"

using namespace ivanov;

using namespace ivanov::oracle;

TEST_CASE("block system with empty active sets couples u = p / gamma") {
  const auto inst = make_instance(4, 1, 1.0, 1.0, BoundsMode::nonneg);
  const double gamma = 0.25;
  const auto sys = assemble_kkt_system(inst.problem, gamma, ActiveSets{});
  const std::size_t n = 9;
  REQUIRE(sys.h.rows() == 3 * n);
  const auto& k = inst.problem.model->k;
  const auto& mi = inst.space->interior_mass();
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(sys.h.coeff(2 * n + i, n + i) == doctest::Approx(-1.0 / gamma));
    CHECK(sys.h.coeff(2 * n + i, 2 * n + i) == 1.0);
    CHECK(sys.b[2 * n + i] == 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(sys.h.coeff(i, j) == k.coeff(i, j));
      CHECK(sys.h.coeff(i, 2 * n + j) == -mi.coeff(i, j));
      CHECK(sys.h.coeff(n + i, j) == mi.coeff(i, j));
      CHECK(sys.h.coeff(n + i, n + j) == k.coeff(j, i));
      CHECK(sys.h.coeff(i, n + j) == 0.0);
    }
  }
}

TEST_CASE("active rows fix u at the bounds") {
  const auto inst = make_instance(4, 2, 1.0, 0.7, BoundsMode::symmetric);
  ActiveSets a;
  a.plus = {0, 4};
  a.minus = {2};
  const auto sys = assemble_kkt_system(inst.problem, 1e-3, a);
  const std::size_t n = 9;
  CHECK(sys.h.coeff(2 * n + 0, n + 0) == 0.0);
  CHECK(sys.b[2 * n + 0] == 0.7);
  CHECK(sys.b[2 * n + 4] == 0.7);
  CHECK(sys.b[2 * n + 2] == -0.7);
  CHECK(sys.h.coeff(2 * n + 1, n + 1) == doctest::Approx(-1e3));
  ActiveSets overlap;
  overlap.plus = {3};
  overlap.minus = {3};
  CHECK_THROWS_AS(assemble_kkt_system(inst.problem, 1e-3, overlap), std::invalid_argument);
  ActiveSets out_of_range;
  out_of_range.plus = {9};
  CHECK_THROWS_AS(assemble_kkt_system(inst.problem, 1e-3, out_of_range), std::invalid_argument);
}

TEST_CASE("single interior node matches symbolic elimination") {
  const auto inst = make_instance(2, 3, 0.0, 1.0, BoundsMode::nonneg);
  const auto& model = *inst.problem.model;
  const double gamma = 1.0;
  const auto sys = assemble_kkt_system(inst.problem, gamma, ActiveSets{});
  const Vector x = solve(sys.h, sys.b);
  const double k = model.k.coeff(0, 0);
  CHECK(k == doctest::Approx(4.0));
  const double m = inst.space->interior_mass().coeff(0, 0);
  const double uk = model.u_k[4];
  double b2 = 0.0;
  for (std::size_t v = 0; v < 9; ++v) b2 += inst.space->mass_rows().coeff(0, v) * (model.g_delta[v] - model.y_k[v]);
  const double p = (b2 + m * m * uk / k) / (m * m / (gamma * k) + k);
  const double u = p / gamma;
  const double v = m * (u - uk) / k;
  CHECK(x[0] == doctest::Approx(v).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(p).epsilon(1e-12));
  CHECK(x[2] == doctest::Approx(u).epsilon(1e-12));
}

TEST_CASE("zero radius forces the zero control") {
  for (auto bounds : {BoundsMode::nonneg, BoundsMode::symmetric}) {
    const auto inst = make_instance(4, 4, 1.0, 0.0, bounds);
    const auto sol = solve_linearized_ivanov(inst.problem);
    CHECK(sol.converged);
    for (double u : sol.u.values()) CHECK(u == 0.0);
  }
}

TEST_CASE("inactive box reproduces the unconstrained Tikhonov minimizer") {
  auto inst = make_instance(4, 5, 1.0, 1e6, BoundsMode::symmetric);
  const double gamma = 1e-3;
  inst.problem.settings.gamma_0 = gamma;
  inst.problem.settings.gamma_final = gamma;
  const auto sol = solve_linearized_ivanov(inst.problem);
  REQUIRE(sol.converged);
  CHECK(sol.active.plus.empty());
  CHECK(sol.active.minus.empty());

  // Normal equations of 1/2 ||v + y - g||^2 + gamma/2 ||u||^2, v = K^-1 M (u - u_k).
  const auto& model = *inst.problem.model;
  const Mesh& mesh = inst.space->mesh();
  const Eigen::MatrixXd k = dense(model.k);
  const Eigen::MatrixXd mi = dense(inst.space->interior_mass());
  const Eigen::MatrixXd mr = dense(inst.space->mass_rows());
  const Eigen::MatrixXd b = k.inverse() * mi;
  Eigen::VectorXd yg(static_cast<Eigen::Index>(mesh.n_vertices()));
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) yg(static_cast<Eigen::Index>(v)) = model.y_k[v] - model.g_delta[v];
  const Eigen::VectorXd uk = to_eigen(restrict_to_interior(mesh, model.u_k));
  const Eigen::MatrixXd lhs = b.transpose() * mi * b + gamma * mi;
  const Eigen::VectorXd rhs = b.transpose() * mi * b * uk - b.transpose() * (mr * yg);
  const Eigen::VectorXd u_ref = lhs.fullPivLu().solve(rhs);
  const Vector u = restrict_to_interior(mesh, sol.u);
  for (std::size_t i = 0; i < u.size(); ++i)
    CHECK(std::abs(u[i] - u_ref(static_cast<Eigen::Index>(i))) <= 1e-8);
}

TEST_CASE("semismooth Newton agrees with projected gradient on seeded instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    const auto c = compare_with_projected_gradient(seed);
    REQUIRE(c.converged);
    REQUIRE(c.pg_residual <= 1e-14);
    CHECK(c.kkt < 1e-9);
    CHECK(c.max_diff <= 1e-6);
  }
}

TEST_CASE("converged solutions satisfy bounds and complementarity") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto bounds = seed % 2 ? BoundsMode::nonneg : BoundsMode::symmetric;
    const auto inst = make_instance(6, 200 + seed, 1.0, 0.3 * static_cast<double>(seed), bounds);
    const auto& pr = inst.problem;
    const auto sol = solve_linearized_ivanov(pr);
    REQUIRE(sol.converged);
    const Mesh& mesh = inst.space->mesh();
    const Vector u = restrict_to_interior(mesh, sol.u);
    const Vector p = restrict_to_interior(mesh, sol.p);
    const double g = sol.gamma_reached;
    std::vector<char> state(u.size(), 0);
    for (auto i : sol.active.plus) state[i] = 1;
    for (auto i : sol.active.minus) state[i] = -1;
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(u[i] >= pr.lower());
      CHECK(u[i] <= pr.rho);
      if (state[i] > 0) {
        CHECK(u[i] == pr.rho);
        CHECK(p[i] >= pr.rho * g - 1e-9);
      } else if (state[i] < 0) {
        CHECK(u[i] == pr.lower());
        CHECK(p[i] <= pr.lower() * g + 1e-9);
      } else {
        CHECK(std::abs(p[i]) <= pr.rho * g + 1e-9 * (1.0 + pr.rho * g));
      }
    }
    for (std::size_t v = 0; v < mesh.n_vertices(); ++v)
      if (mesh.on_boundary(v)) CHECK(sol.u[v] == 0.0);
    CHECK_FALSE(sol.objective_regressed);
  }
}

TEST_CASE("KKT residual vanishes at block solutions and detects perturbations") {
  const auto inst = make_instance(4, 9, 1.0, 0.5, BoundsMode::nonneg);
  const auto sol = solve_linearized_ivanov(inst.problem);
  REQUIRE(sol.converged);
  const double g = sol.gamma_reached;
  CHECK(kkt_residual(inst.problem, sol.u, sol.v, sol.p, g) <= 1e-10);
  NodalField v = sol.v;
  v[6] += 1e-3;
  CHECK(kkt_residual(inst.problem, sol.u, v, sol.p, g) > 1e-6);
  NodalField u = sol.u;
  u[12] = 0.5 * (u[12] + inst.problem.rho) + 0.01;
  CHECK(kkt_residual(inst.problem, u, sol.v, sol.p, g) > 1e-3);
}

TEST_CASE("classification thresholds at rho gamma") {
  const auto inst = make_instance(2, 1, 1.0, 2.0, BoundsMode::symmetric);
  const Vector above = {2.0 * 0.5 + 1e-12};
  const Vector inside = {0.3};
  const Vector below = {-1.0 - 1e-12};
  CHECK(classify(inst.problem, above, 0.5).plus.size() == 1);
  CHECK(classify(inst.problem, inside, 0.5).plus.empty());
  CHECK(classify(inst.problem, inside, 0.5).minus.empty());
  CHECK(classify(inst.problem, below, 0.5).minus.size() == 1);
}

TEST_CASE("warm start from the converged sets reproduces the solution") {
  const auto inst = make_instance(6, 31, 10.0, 0.8, BoundsMode::nonneg);
  const auto cold = solve_linearized_ivanov(inst.problem);
  REQUIRE(cold.converged);
  const auto warm = solve_linearized_ivanov(inst.problem, &cold.active);
  REQUIRE(warm.converged);
  for (std::size_t v = 0; v < cold.u.size(); ++v) CHECK(warm.u[v] == doctest::Approx(cold.u[v]).epsilon(1e-9));
}

TEST_CASE("invalid problems are rejected") {
  auto inst = make_instance(2, 1, 1.0, 1.0, BoundsMode::nonneg);
  inst.problem.rho = -1.0;
  CHECK_THROWS_AS(solve_linearized_ivanov(inst.problem), std::invalid_argument);
  inst.problem.rho = 1.0;
  inst.problem.settings.gamma_final = 2.0;
  CHECK_THROWS_AS(solve_linearized_ivanov(inst.problem), std::invalid_argument);
  CHECK(bounds_mode_from_string("symmetric") == BoundsMode::symmetric);
  CHECK_THROWS_AS(bounds_mode_from_string("box"), std::invalid_argument);
}
