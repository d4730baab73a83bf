#pragma once

// Box-constrained linearized Ivanov subproblem
//
//   min  1/2 ||v + y_k - g||^2 + gamma/2 ||u||^2
//   s.t. K v = M (u - u_k),   lower <= u <= rho  (nodewise),
//
// solved by a primal-dual active set (semismooth Newton) iteration on the
// optimality system, with a continuation gamma = gamma_0 2^-l that drives the
// Moreau-Yosida weight to gamma_final. K is the stiffness matrix plus the
// reaction term 3 kappa y_k^2.

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "ivanov/fem.hpp"

namespace ivanov {

/// symmetric: -rho <= u <= rho.  nonneg: 0 <= u <= rho.
enum class BoundsMode { symmetric, nonneg };

const char* to_string(BoundsMode mode);
BoundsMode bounds_mode_from_string(const std::string& s);

struct QpSettings {
  double gamma_0 = 1.0;
  double gamma_final = 1e-9;
  std::size_t i_max = 30;
  double kkt_tol = 1e-9;
};

/// Everything fixed during one Gauss-Newton step: the linearization point,
/// its state, the data and the linearized operator K.
struct LinearizedModel {
  std::shared_ptr<const FemSpace> space;
  double kappa = 0.0;
  NodalField u_k;
  NodalField y_k;
  NodalField g_delta;
  SparseMatrix k;  // interior x interior, grad-grad + 3 kappa y_k^2

  /// Factorizations and reduced operators shared by every QP on this model,
  /// filled on first use.
  struct Cache;
  std::shared_ptr<Cache> cache;

  static LinearizedModel build(std::shared_ptr<const FemSpace> space, double kappa, NodalField u_k,
                               NodalField y_k, NodalField g_delta);
};

struct QpProblem {
  std::shared_ptr<const LinearizedModel> model;
  double rho = 0.0;
  BoundsMode bounds = BoundsMode::nonneg;
  QpSettings settings;

  double lower() const noexcept { return bounds == BoundsMode::nonneg ? 0.0 : -rho; }
  void validate() const;
};

/// Active set indices (interior dof numbering).
struct ActiveSets {
  std::vector<std::size_t> plus;
  std::vector<std::size_t> minus;

  friend bool operator==(const ActiveSets&, const ActiveSets&) = default;
};

/// One gamma level of the continuation.
struct GammaLevelTrace {
  double gamma = 0.0;
  std::size_t inner_iterations = 0;
  bool sets_stable = false;
  std::size_t n_plus = 0;
  std::size_t n_minus = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
};

struct QpSolution {
  NodalField u;
  NodalField v;
  NodalField p;
  ActiveSets active;
  double gamma_reached = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  std::size_t ssn_iterations = 0;
  std::vector<GammaLevelTrace> trace;
  /// Objective at the last level exceeded the first level's (logged only).
  bool objective_regressed = false;
};

struct KktSystem {
  SparseMatrix h;
  Vector b;
};

/// Block system over interior dofs, unknowns ordered (v, p, u):
///   [ K   0          -M ] [v]   [ -M u_k           ]
///   [ M   K^T         0 ] [p] = [  M (g - y_k)     ]
///   [ 0  -(1/g) As    I ] [u]   [  rho 1_A+ + lower 1_A- ]
/// with As = I - diag(1_A+ + 1_A-). Throws std::invalid_argument when the
/// sets overlap or hold out-of-range indices.
KktSystem assemble_kkt_system(const QpProblem& problem, double gamma, const ActiveSets& active);

/// Euclidean norm of the stacked residual
///   (K v - M(u - u_k),  M v + K^T p - M(g - y_k),  u - proj_box(p / gamma)).
/// u, v, p are nodal fields.
double kkt_residual(const QpProblem& problem, const NodalField& u, const NodalField& v,
                    const NodalField& p, double gamma);

/// Active sets implied by an adjoint: A+ = {p_i > rho gamma}, A- = {p_i < lower gamma}.
ActiveSets classify(const QpProblem& problem, std::span<const double> p_interior, double gamma);

/// Objective 1/2 ||v + y_k - g||^2 + gamma/2 ||u||^2 (L2 norms).
double qp_objective(const QpProblem& problem, const NodalField& u, const NodalField& v, double gamma);

/// Runs the continuation. `warm_start` seeds the initial active sets; without
/// it the first level starts from empty sets.
QpSolution solve_linearized_ivanov(const QpProblem& problem,
                                   const ActiveSets* warm_start = nullptr);

}  // namespace ivanov
