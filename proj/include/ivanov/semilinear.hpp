#pragma once

// Damped Newton solver for  -Laplace(y) + kappa y^3 = u  with homogeneous
// Dirichlet conditions, residual measured in H^{-1}.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ivanov/fem.hpp"

namespace ivanov {

struct NewtonOptions {
  double tol = 1e-6;
  double decrease_factor = 0.8;
  double step_halving_floor = std::ldexp(1.0, -30);
  std::size_t max_outer = 100;

  void validate() const;
};

struct NewtonResult {
  NodalField y;
  /// ||Phi(y^l)||_{H^-1} for l = 0 .. iterations.
  std::vector<double> residual_history;
  /// Damping factor s of each accepted step.
  std::vector<double> step_sizes;
  std::size_t iterations = 0;
};

class NonconvergenceError : public std::runtime_error {
 public:
  NonconvergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), residual_history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return residual_history_; }

 private:
  std::vector<double> residual_history_;
};

/// Phi(y) = K0 y + n(y) - M u on interior dofs.
Vector semilinear_residual(const FemSpace& space, const NodalField& u, double kappa,
                           const NodalField& y);

/// y_init must vanish on the boundary. Throws NonconvergenceError when the
/// damping floor or max_outer is reached.
NewtonResult solve_semilinear(const FemSpace& space, const NodalField& u, double kappa,
                              const NodalField& y_init, const NewtonOptions& opts = {});

}  // namespace ivanov
