#pragma once

// Outer Ivanov-regularized Gauss-Newton loop with discrepancy stopping.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ivanov/radius_search.hpp"
#include "ivanov/semilinear.hpp"

namespace ivanov {

/// How the start condition is evaluated. `linearized` uses F'(u_k)(u_0 - u_k)
/// + F(u_k); `state_space` uses the state y_0 = S(u_0) directly.
enum class StartConditionForm { linearized, state_space };

struct OuterConfig {
  double tau = 2.0;
  double kappa = 1.0;
  std::size_t n_grid = 32;
  BoundsMode bounds = BoundsMode::nonneg;
  std::size_t max_gn = 60;
  RadiusSearchConfig radius;
  NewtonOptions newton;
  QpSettings qp;
  StartConditionForm start_form = StartConditionForm::linearized;

  void validate() const;
};

struct StartCondition {
  bool satisfied = false;
  /// ||F'(u_k)(u_0 - u_k) + F(u_k) - g|| / (theta_high ||F(u_k) - g||)
  double margin = 0.0;
};

/// Linearized form: solves K(y_k) v0 = M (u_0 - u_k) and compares
/// ||v0 + y_k - g|| with theta_high ||y_k - g||. For the state-space form pass
/// y_0 = S(u_0); it is ignored otherwise.
StartCondition check_start_condition(const LinearizedModel& model, const NodalField& u_0,
                                     double theta_high,
                                     StartConditionForm form = StartConditionForm::linearized,
                                     const NodalField* y_0 = nullptr);

struct GnRecord {
  std::size_t k = 0;
  double rho_k = 0.0;
  double nonlinear_discrepancy = 0.0;   // ||F(u_k) - g||
  double linearized_discrepancy = 0.0;  // ||F'(u_k)(u_{k+1} - u_k) + F(u_k) - g||
  std::size_t qp_solves = 0;
  std::size_t newton_iters = 0;  // damped Newton steps for y_k
  double case_a_margin = 0.0;
  bool case_a_satisfied = false;
  /// ||F(u_{k+1}) - g|| / ||F(u_k) - g||; NaN until the next state is known.
  double contraction = 0.0;
};

enum class StopReason { discrepancy_met_at_start, discrepancy_met, max_gn, search_failure, pde_failure };

const char* to_string(StopReason reason);

struct RunReport {
  OuterConfig config;
  double delta_abs = 0.0;
  std::vector<GnRecord> records;
  std::size_t k_star = 0;
  NodalField u_final;
  NodalField y_final;
  StopReason stop_reason = StopReason::max_gn;
  std::size_t minimizations_total = 0;
  double rho_final = 0.0;
  /// ||F(u_k) - g|| for k = 0 .. k_star.
  std::vector<double> residual_history;
  /// Accepted iterates u_0 .. u_{k_star} and their states.
  std::vector<NodalField> iterates;
  std::vector<NodalField> states;
  std::string message;
};

using StepLogger = std::function<void(const GnRecord&)>;

RunReport run_irgnm(const OuterConfig& cfg, std::shared_ptr<const FemSpace> space,
                    const NodalField& u_0, const NodalField& g_delta, double delta_abs,
                    const StepLogger& log = {});

/// Builds the uniform mesh of cfg.n_grid cells per side.
RunReport run_irgnm(const OuterConfig& cfg, const NodalField& u_0, const NodalField& g_delta,
                    double delta_abs, const StepLogger& log = {});

/// One line per step: k, rho_k, discrepancies, qp solves, start margin.
std::string format_record(const GnRecord& r);

}  // namespace ivanov
