#include "ivanov/radius_search.hpp"

#include <optional>
#include <sstream>

namespace ivanov {

void RadiusSearchConfig::validate() const {
  if (!(0.0 < theta_low && theta_low < theta_high && theta_high <= 1.0))
    throw std::invalid_argument("RadiusSearchConfig: need 0 < theta_low < theta_high <= 1");
  if (!(rho_start > 0.0)) throw std::invalid_argument("RadiusSearchConfig: rho_start must be positive");
}

const char* to_string(SearchPhase phase) {
  return phase == SearchPhase::phase1 ? "phase1" : "phase2";
}

double linearized_discrepancy(const FemSpace& space, const QpSolution& solution,
                              const NodalField& y_k, const NodalField& g_delta) {
  Vector r(y_k.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = y_k[k] + solution.v[k] - g_delta[k];
  return space.l2_norm(r);
}

namespace {

int sign(double x) { return (x > 0.0) - (x < 0.0); }

class Search {
 public:
  Search(const QpProblem& tmpl, const RadiusSearchConfig& cfg) : problem_(tmpl), cfg_(cfg) {
    const LinearizedModel& m = *tmpl.model;
    Vector r(m.y_k.size());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = m.y_k[k] - m.g_delta[k];
    result_.discrepancy = m.space->l2_norm(r);
    if (!(result_.discrepancy > 0.0))
      throw std::invalid_argument("find_radius: nonlinear discrepancy is zero");
  }

  double low() const { return cfg_.theta_low * result_.discrepancy; }
  double high() const { return cfg_.theta_high * result_.discrepancy; }
  bool in_band(double d) const { return low() <= d && d <= high(); }

  struct Evaluation {
    QpSolution solution;
    double d;
  };

  // One minimization at rho; a nonconverged solve is repeated once from
  // empty active sets before the search gives up.
  Evaluation evaluate(double rho, SearchPhase phase, double a, double b) {
    problem_.rho = rho;
    RadiusTrial trial{rho, 0.0, phase, a, b, false, false};
    QpSolution sol = solve_linearized_ivanov(problem_, warm_ ? &*warm_ : nullptr);
    ++result_.qp_solves;
    if (!sol.converged) {
      trial.retried = true;
      sol = solve_linearized_ivanov(problem_, nullptr);
      ++result_.qp_solves;
    }
    trial.converged = sol.converged;
    trial.d = linearized_discrepancy(*problem_.model->space, sol, problem_.model->y_k,
                                     problem_.model->g_delta);
    result_.trace.push_back(trial);
    if (!sol.converged) {
      std::ostringstream os;
      os << "radius search: linearized problem did not converge at rho=" << rho
         << " (kkt residual " << sol.kkt_residual << ")";
      fail(os.str());
    }
    warm_ = sol.active;
    return {std::move(sol), trial.d};
  }

  RadiusResult accept(double rho, Evaluation e, SearchPhase phase) {
    result_.rho = rho;
    result_.solution = std::move(e.solution);
    result_.d_rho = e.d;
    result_.phase = phase;
    return std::move(result_);
  }

  [[noreturn]] void fail(const std::string& what) {
    throw SearchError(what, result_.trace, result_.qp_solves);
  }

  RadiusResult run() {
    // Phase I: enlarge until the band is hit or undershot.
    double rho = cfg_.rho_start;
    std::optional<Evaluation> at_b;
    for (std::size_t i = 0; i < cfg_.max_phase1; ++i) {
      Evaluation e = evaluate(rho, SearchPhase::phase1, 0.0, rho);
      if (in_band(e.d)) return accept(rho, std::move(e), SearchPhase::phase1);
      if (e.d < low()) {
        at_b = std::move(e);
        break;
      }
      rho += cfg_.rho_start;
    }
    if (!at_b) {
      std::ostringstream os;
      os << "radius search: band not undershot after " << cfg_.max_phase1
         << " enlargements (rho=" << rho << ")";
      fail(os.str());
    }

    // Phase II: bisection on [0, rho] against the band midpoint.
    const double mid = 0.5 * (cfg_.theta_low + cfg_.theta_high) * result_.discrepancy;
    double a = 0.0, b = rho;
    Evaluation at_a = evaluate(a, SearchPhase::phase2, a, b);
    if (in_band(at_a.d)) return accept(a, std::move(at_a), SearchPhase::phase2);
    const int sign_a = sign(at_a.d - mid);

    for (std::size_t i = 0; i < cfg_.max_bisect; ++i) {
      // The right end point was just solved in phase I; reuse it.
      Evaluation e = i == 0 ? std::move(*at_b) : evaluate(rho, SearchPhase::phase2, a, b);
      if (in_band(e.d)) return accept(rho, std::move(e), SearchPhase::phase2);
      if (sign(e.d - mid) == sign_a) a = rho;
      else b = rho;
      rho = 0.5 * (a + b);
    }
    std::ostringstream os;
    os << "radius search: bisection exhausted " << cfg_.max_bisect << " steps, bracket [" << a
       << ", " << b << "]";
    fail(os.str());
  }

 private:
  QpProblem problem_;
  RadiusSearchConfig cfg_;
  RadiusResult result_;
  std::optional<ActiveSets> warm_;
};

}  // namespace

RadiusResult find_radius(const QpProblem& qp_template, const RadiusSearchConfig& cfg) {
  cfg.validate();
  qp_template.validate();
  return Search(qp_template, cfg).run();
}

}  // namespace ivanov
