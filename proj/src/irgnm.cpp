#include "ivanov/irgnm.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace ivanov {

void OuterConfig::validate() const {
  if (!(tau > 1.0)) throw std::invalid_argument("OuterConfig: tau must exceed 1");
  if (max_gn < 1) throw std::invalid_argument("OuterConfig: max_gn must be >= 1");
  if (n_grid < 1) throw std::invalid_argument("OuterConfig: n_grid must be >= 1");
  if (!(kappa >= 0.0)) throw std::invalid_argument("OuterConfig: kappa must be >= 0");
  radius.validate();
  newton.validate();
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::discrepancy_met_at_start: return "discrepancy_met_at_start";
    case StopReason::discrepancy_met: return "discrepancy_met";
    case StopReason::max_gn: return "max_gn";
    case StopReason::search_failure: return "search_failure";
    case StopReason::pde_failure: return "pde_failure";
  }
  return "unknown";
}

namespace {

double misfit(const FemSpace& space, const NodalField& y, const NodalField& g) {
  Vector r(y.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = y[k] - g[k];
  return space.l2_norm(r);
}

}  // namespace

StartCondition check_start_condition(const LinearizedModel& model, const NodalField& u_0,
                                     double theta_high, StartConditionForm form,
                                     const NodalField* y_0) {
  const FemSpace& space = *model.space;
  const Mesh& mesh = space.mesh();
  const double rhs = theta_high * misfit(space, model.y_k, model.g_delta);

  NodalField predicted(mesh.n_vertices());
  if (form == StartConditionForm::state_space) {
    if (!y_0) throw std::invalid_argument("check_start_condition: state-space form needs y_0");
    predicted = *y_0;
  } else {
    NodalField du(mesh.n_vertices());
    for (std::size_t k = 0; k < du.size(); ++k) du[k] = u_0[k] - model.u_k[k];
    const Vector v0 = solve(model.k, space.load(du.span()));
    const NodalField v0_field = extend_from_interior(mesh, v0);
    for (std::size_t k = 0; k < predicted.size(); ++k) predicted[k] = v0_field[k] + model.y_k[k];
  }
  const double lhs = misfit(space, predicted, model.g_delta);

  StartCondition s;
  s.margin = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
  s.satisfied = s.margin >= 1.0 - 1e-10;
  return s;
}

std::string format_record(const GnRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "k=%zu rho=%.10g nonlinear=%.6e linearized=%.6e ratio=%.4f qp_solves=%zu "
                "newton=%zu start_margin=%.6f%s",
                r.k, r.rho_k, r.nonlinear_discrepancy, r.linearized_discrepancy,
                r.linearized_discrepancy / r.nonlinear_discrepancy, r.qp_solves, r.newton_iters,
                r.case_a_margin, r.case_a_satisfied ? "" : " START_CONDITION_VIOLATED");
  return buf;
}

RunReport run_irgnm(const OuterConfig& cfg, std::shared_ptr<const FemSpace> space,
                    const NodalField& u_0, const NodalField& g_delta, double delta_abs,
                    const StepLogger& log) {
  cfg.validate();
  if (!(delta_abs >= 0.0)) throw std::invalid_argument("run_irgnm: delta_abs must be >= 0");
  const Mesh& mesh = space->mesh();
  if (u_0.size() != mesh.n_vertices() || g_delta.size() != mesh.n_vertices())
    throw DimensionError("run_irgnm: field size differs from vertex count");

  RunReport report;
  report.config = cfg;
  report.delta_abs = delta_abs;
  const double target = cfg.tau * delta_abs;

  NodalField u = u_0;
  NodalField y;
  std::size_t newton_iters = 0;
  try {
    auto state = solve_semilinear(*space, u, cfg.kappa, NodalField(mesh.n_vertices()), cfg.newton);
    y = std::move(state.y);
    newton_iters = state.iterations;
  } catch (const NonconvergenceError& e) {
    report.stop_reason = StopReason::pde_failure;
    report.message = e.what();
    report.u_final = u;
    return report;
  }

  // The state-space start condition needs S(u_0), which is the first state.
  const NodalField y_0 = y;
  double discrepancy = misfit(*space, y, g_delta);
  report.residual_history.push_back(discrepancy);
  report.iterates.push_back(u);
  report.states.push_back(y);

  auto finish = [&](StopReason reason) {
    report.stop_reason = reason;
    report.k_star = report.records.size();
    report.u_final = u;
    report.y_final = y;
    report.rho_final = report.records.empty() ? 0.0 : report.records.back().rho_k;
    return report;
  };

  if (discrepancy <= target) return finish(StopReason::discrepancy_met_at_start);

  for (std::size_t k = 0;; ++k) {
    if (k >= cfg.max_gn) return finish(StopReason::max_gn);

    auto model = std::make_shared<const LinearizedModel>(
        LinearizedModel::build(space, cfg.kappa, u, y, g_delta));

    GnRecord rec;
    rec.k = k;
    rec.nonlinear_discrepancy = discrepancy;
    rec.newton_iters = newton_iters;
    rec.contraction = std::numeric_limits<double>::quiet_NaN();
    const auto start = check_start_condition(*model, u_0, cfg.radius.theta_high, cfg.start_form, &y_0);
    rec.case_a_margin = start.margin;
    rec.case_a_satisfied = start.satisfied;

    QpProblem tmpl;
    tmpl.model = model;
    tmpl.bounds = cfg.bounds;
    tmpl.settings = cfg.qp;
    RadiusResult radius;
    try {
      radius = find_radius(tmpl, cfg.radius);
    } catch (const SearchError& e) {
      report.minimizations_total += e.qp_solves();
      report.message = e.what();
      return finish(StopReason::search_failure);
    }
    rec.rho_k = radius.rho;
    rec.linearized_discrepancy = radius.d_rho;
    rec.qp_solves = radius.qp_solves;
    report.minimizations_total += radius.qp_solves;

    NodalField u_next = std::move(radius.solution.u);
    try {
      auto state = solve_semilinear(*space, u_next, cfg.kappa, y, cfg.newton);
      y = std::move(state.y);
      newton_iters = state.iterations;
    } catch (const NonconvergenceError& e) {
      report.records.push_back(rec);
      if (log) log(rec);
      report.message = e.what();
      u = std::move(u_next);
      return finish(StopReason::pde_failure);
    }
    u = std::move(u_next);
    const double next = misfit(*space, y, g_delta);
    rec.contraction = next / discrepancy;
    discrepancy = next;

    report.records.push_back(rec);
    report.residual_history.push_back(discrepancy);
    report.iterates.push_back(u);
    report.states.push_back(y);
    if (log) log(rec);

    if (discrepancy <= target) return finish(StopReason::discrepancy_met);
  }
}

RunReport run_irgnm(const OuterConfig& cfg, const NodalField& u_0, const NodalField& g_delta,
                    double delta_abs, const StepLogger& log) {
  auto space = std::make_shared<const FemSpace>(build_unit_square_mesh(cfg.n_grid));
  return run_irgnm(cfg, std::move(space), u_0, g_delta, delta_abs, log);
}

}  // namespace ivanov
