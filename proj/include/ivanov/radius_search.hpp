#pragma once

// A posteriori choice of the Ivanov radius: find rho with
//   theta_low D <= || y_k + v(rho) - g || <= theta_high D,   D = || y_k - g ||,
// by enlarging rho in steps of rho_start and then bisecting.

#include <stdexcept>
#include <vector>

#include "ivanov/ivanov_qp.hpp"

namespace ivanov {

struct RadiusSearchConfig {
  double rho_start = 100.0;
  double theta_low = 0.51;
  double theta_high = 0.98;
  std::size_t max_phase1 = 200;
  std::size_t max_bisect = 100;

  void validate() const;
};

enum class SearchPhase { phase1, phase2 };

const char* to_string(SearchPhase phase);

struct RadiusTrial {
  double rho = 0.0;
  double d = 0.0;
  SearchPhase phase = SearchPhase::phase1;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  bool converged = false;
  /// Re-solved from empty active sets after a nonconverged first attempt.
  bool retried = false;
};

struct RadiusResult {
  double rho = 0.0;
  QpSolution solution;
  double d_rho = 0.0;
  std::size_t qp_solves = 0;
  SearchPhase phase = SearchPhase::phase1;
  double discrepancy = 0.0;  // D = ||y_k - g||
  std::vector<RadiusTrial> trace;
};

class SearchError : public std::runtime_error {
 public:
  SearchError(const std::string& what, std::vector<RadiusTrial> trace, std::size_t qp_solves)
      : std::runtime_error(what), trace_(std::move(trace)), qp_solves_(qp_solves) {}
  const std::vector<RadiusTrial>& trace() const noexcept { return trace_; }
  std::size_t qp_solves() const noexcept { return qp_solves_; }

 private:
  std::vector<RadiusTrial> trace_;
  std::size_t qp_solves_;
};

/// || y_k + v - g ||_{L2}.
double linearized_discrepancy(const FemSpace& space, const QpSolution& solution,
                              const NodalField& y_k, const NodalField& g_delta);

/// `qp_template` supplies the linearized model, bounds and solver settings;
/// its rho is ignored. Requires ||y_k - g|| > 0.
RadiusResult find_radius(const QpProblem& qp_template, const RadiusSearchConfig& cfg);

}  // namespace ivanov
