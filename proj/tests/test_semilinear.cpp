#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include "ivanov/semilinear.hpp"
#include "pde_checks.hpp"

using namespace ivanov;

using namespace ivanov::checks;

TEST_CASE("zero source gives the zero state without iterating") {
  const FemSpace s(build_unit_square_mesh(8));
  const NodalField zero(s.mesh().n_vertices());
  const auto r = solve_semilinear(s, zero, 5.0, zero);
  CHECK(r.iterations == 0);
  for (double v : r.y.values()) CHECK(v == 0.0);
}

TEST_CASE("linear equation is solved by one full Newton step") {
  const FemSpace s(build_unit_square_mesh(8));
  const NodalField u = interpolate(s.mesh(), [](Point p) { return 1.0 + p.x; });
  const auto r = solve_semilinear(s, u, 0.0, NodalField(s.mesh().n_vertices()));
  CHECK(r.iterations == 1);
  REQUIRE(r.step_sizes.size() == 1);
  CHECK(r.step_sizes[0] == 1.0);
  CHECK(s.hminus1_norm(semilinear_residual(s, u, 0.0, r.y)) <= 1e-12);
}

TEST_CASE("manufactured solution: residual tolerance and second-order error") {
  std::vector<double> errors;
  for (std::size_t n : {8u, 16u}) {
    const FemSpace s(build_unit_square_mesh(n));
    const auto r = solve_semilinear(s, manufactured_source(s.mesh(), 1.0), 1.0,
                                    NodalField(s.mesh().n_vertices()));
    CHECK(r.residual_history.back() <= 1e-6);
    CHECK(s.hminus1_norm(semilinear_residual(s, manufactured_source(s.mesh(), 1.0), 1.0, r.y)) <= 1e-6);
    NodalField e = interpolate(s.mesh(), sinsin);
    for (std::size_t v = 0; v < e.size(); ++v) e[v] -= r.y[v];
    errors.push_back(s.l2_norm(e.span()));
  }
  CHECK(errors[0] / errors[1] >= 3.0);
}

TEST_CASE("every accepted damped step decreases the residual by the factor 0.8") {
  const auto c = damped_newton_check();
  CHECK(c.all_decrease);
  CHECK(c.damped_step_seen);
  CHECK(c.final_residual <= NewtonOptions{}.tol);
}

TEST_CASE("central differences match the linearized solve") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    CHECK(linearization_error(8, 1.0, 1e-4, seed) <= 1e-4);
  }
  CHECK(linearization_error(8, 100.0, 1e-4, 9) <= 1e-4);
}

TEST_CASE("iteration budget exhaustion raises with the residual history") {
  const FemSpace s(build_unit_square_mesh(8));
  const NodalField u(s.mesh().n_vertices(), 500.0);
  NewtonOptions opts;
  opts.max_outer = 1;
  try {
    solve_semilinear(s, u, 100.0, NodalField(s.mesh().n_vertices()), opts);
    FAIL("expected NonconvergenceError");
  } catch (const NonconvergenceError& e) {
    CHECK(e.residual_history().size() >= 2);
  }
}

TEST_CASE("invalid options and inputs are rejected") {
  NewtonOptions o;
  o.decrease_factor = 1.0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  const FemSpace s(build_unit_square_mesh(4));
  CHECK_THROWS_AS(solve_semilinear(s, NodalField(3), 1.0, NodalField(25)), DimensionError);
}
