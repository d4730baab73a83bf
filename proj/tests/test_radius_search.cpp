#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ivanov/radius_search.hpp"
#include "qp_oracle.hpp"

using namespace ivanov;
using namespace ivanov::oracle;

namespace {

// Linearization at u_k = 0 with data from a disk source, so d(0) = D.
QpProblem zero_start_problem(std::size_t n_grid, double kappa, std::uint64_t seed) {
  auto space = std::make_shared<const FemSpace>(build_unit_square_mesh(n_grid));
  const Mesh& m = space->mesh();
  const NodalField zero(m.n_vertices());
  const NodalField u_true = interpolate(m, [](Point p) {
    return (p.x - 0.4) * (p.x - 0.4) + (p.y - 0.5) * (p.y - 0.5) <= 0.09 ? 1.0 : 0.0;
  });
  NodalField g = solve_semilinear(*space, u_true, kappa, zero).y;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& x : g.values()) x += 1e-4 * normal(rng);
  const NodalField y_k = solve_semilinear(*space, zero, kappa, zero).y;
  QpProblem pr;
  pr.model = std::make_shared<const LinearizedModel>(LinearizedModel::build(space, kappa, zero, y_k, g));
  pr.bounds = BoundsMode::nonneg;
  return pr;
}

double d_of(const QpProblem& tmpl, double rho) {
  QpProblem pr = tmpl;
  pr.rho = rho;
  const auto sol = solve_linearized_ivanov(pr);
  REQUIRE(sol.converged);
  return linearized_discrepancy(*pr.model->space, sol, pr.model->y_k, pr.model->g_delta);
}

double big_d(const QpProblem& pr) {
  const auto& m = *pr.model;
  Vector r(m.y_k.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = m.y_k[i] - m.g_delta[i];
  return compute_norm(m.space->mesh(), r, NormKind::L2);
}

}  // namespace

TEST_CASE("linearized discrepancy definitions") {
  const auto inst = make_instance(4, 11, 1.0, 1.0, BoundsMode::nonneg);
  const auto& m = *inst.problem.model;
  const Mesh& mesh = inst.space->mesh();
  QpSolution sol;
  sol.v = NodalField(mesh.n_vertices());
  CHECK(linearized_discrepancy(*inst.space, sol, m.y_k, m.g_delta) == doctest::Approx(big_d(inst.problem)).epsilon(1e-14));

  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) sol.v[v] = m.g_delta[v] - m.y_k[v];
  CHECK(linearized_discrepancy(*inst.space, sol, m.y_k, m.g_delta) == 0.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (auto& x : sol.v.values()) x = 0.01 * unif(rng);
  Eigen::VectorXd r(static_cast<Eigen::Index>(mesh.n_vertices()));
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) r(static_cast<Eigen::Index>(v)) = m.y_k[v] + sol.v[v] - m.g_delta[v];
  const double ref = std::sqrt(r.dot(dense(inst.space->mass()) * r));
  CHECK(std::abs(linearized_discrepancy(*inst.space, sol, m.y_k, m.g_delta) - ref) <= 1e-12);
}

TEST_CASE("d(rho) is nonincreasing on a grid") {
  const auto tmpl = zero_start_problem(8, 1.0, 1);
  double prev = d_of(tmpl, 0.0);
  CHECK(prev == doctest::Approx(big_d(tmpl)).epsilon(1e-12));
  for (int j = 1; j <= 24; ++j) {
    const double d = d_of(tmpl, 0.1 * j);
    CHECK(d <= prev + 1e-8);
    prev = d;
  }
}

TEST_CASE("band on the first try needs a single solve") {
  auto tmpl = zero_start_problem(8, 1.0, 2);
  const double dd = big_d(tmpl);
  const double ratio = d_of(tmpl, 0.3) / dd;
  RadiusSearchConfig cfg;
  cfg.rho_start = 0.3;
  cfg.theta_low = ratio - 0.01;
  cfg.theta_high = ratio + 0.01;
  const auto res = find_radius(tmpl, cfg);
  CHECK(res.rho == 0.3);
  CHECK(res.qp_solves == 1);
  CHECK(res.phase == SearchPhase::phase1);
  CHECK(res.trace.size() == 1);
}

TEST_CASE("returned radius lies where d crosses the band") {
  for (double kappa : {1.0, 100.0}) {
    CAPTURE(kappa);
    const auto tmpl = zero_start_problem(8, kappa, 3);
    RadiusSearchConfig cfg;
    cfg.rho_start = 4.0;
    const auto res = find_radius(tmpl, cfg);
    const double dd = big_d(tmpl);
    REQUIRE(res.solution.converged);
    CHECK(res.phase == SearchPhase::phase2);
    CHECK(res.discrepancy == doctest::Approx(dd).epsilon(1e-14));

    const double d = linearized_discrepancy(*tmpl.model->space, res.solution, tmpl.model->y_k, tmpl.model->g_delta);
    CHECK(d == res.d_rho);
    CHECK(d >= cfg.theta_low * dd);
    CHECK(d <= cfg.theta_high * dd);
    CHECK(res.qp_solves == res.trace.size());

    // Bracket from a grid pre-evaluation.
    const double h = 0.05;
    double lo = 0.0, hi = cfg.rho_start;
    for (int j = 0; j * h <= cfg.rho_start; ++j) {
      const double dj = d_of(tmpl, j * h);
      if (dj > cfg.theta_high * dd) lo = j * h;
      if (dj < cfg.theta_low * dd) {
        hi = j * h;
        break;
      }
    }
    CHECK(res.rho >= lo);
    CHECK(res.rho <= hi);
  }
}

TEST_CASE("search input validation") {
  auto tmpl = zero_start_problem(4, 1.0, 4);
  auto model = std::make_shared<LinearizedModel>(*tmpl.model);
  model->g_delta = model->y_k;
  tmpl.model = model;
  CHECK_THROWS_AS(find_radius(tmpl, RadiusSearchConfig{}), std::invalid_argument);

  RadiusSearchConfig bad;
  bad.theta_low = 0.9;
  bad.theta_high = 0.8;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = RadiusSearchConfig{};
  bad.theta_high = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = RadiusSearchConfig{};
  bad.rho_start = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("unreachable band exhausts the enlargement phase") {
  const auto tmpl = zero_start_problem(4, 1.0, 5);
  RadiusSearchConfig cfg;
  cfg.rho_start = 1e-3;
  cfg.max_phase1 = 3;
  CHECK_THROWS_AS(find_radius(tmpl, cfg), SearchError);
}
