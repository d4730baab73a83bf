#include "ivanov/semilinear.hpp"

#include <sstream>

namespace ivanov {

void NewtonOptions::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("NewtonOptions: tol must be positive");
  if (!(decrease_factor > 0.0 && decrease_factor < 1.0))
    throw std::invalid_argument("NewtonOptions: decrease_factor must lie in (0, 1)");
  if (!(step_halving_floor > 0.0))
    throw std::invalid_argument("NewtonOptions: step_halving_floor must be positive");
}

Vector semilinear_residual(const FemSpace& space, const NodalField& u, double kappa,
                           const NodalField& y) {
  const Mesh& mesh = space.mesh();
  Vector r = matvec(space.stiffness(), restrict_to_interior(mesh, y));
  const Vector n = nonlinear_term(mesh, y, kappa);
  const Vector mu = space.load(u.span());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += n[i] - mu[i];
  return r;
}

NewtonResult solve_semilinear(const FemSpace& space, const NodalField& u, double kappa,
                              const NodalField& y_init, const NewtonOptions& opts) {
  opts.validate();
  const Mesh& mesh = space.mesh();
  if (u.size() != mesh.n_vertices() || y_init.size() != mesh.n_vertices())
    throw DimensionError("solve_semilinear: field size differs from vertex count");

  NewtonResult result;
  // Only interior values are unknowns; boundary values are zero.
  result.y = extend_from_interior(mesh, restrict_to_interior(mesh, y_init));
  Vector phi = semilinear_residual(space, u, kappa, result.y);
  double norm = space.hminus1_norm(phi);
  result.residual_history.push_back(norm);

  while (norm > opts.tol) {
    if (result.iterations >= opts.max_outer) {
      std::ostringstream os;
      os << "damped Newton: no convergence in " << opts.max_outer << " steps, residual " << norm;
      throw NonconvergenceError(os.str(), result.residual_history);
    }
    const SparseMatrix jac = assemble_linearized_operator(mesh, result.y, kappa);
    Vector minus_phi(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) minus_phi[i] = -phi[i];
    const Vector d = solve(jac, minus_phi);

    const Vector y0 = restrict_to_interior(mesh, result.y);
    double s = 1.0;
    for (;;) {
      Vector trial = y0;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += s * d[i];
      NodalField y_trial = extend_from_interior(mesh, trial);
      Vector phi_trial = semilinear_residual(space, u, kappa, y_trial);
      const double trial_norm = space.hminus1_norm(phi_trial);
      if (trial_norm <= opts.decrease_factor * norm) {
        result.y = std::move(y_trial);
        phi = std::move(phi_trial);
        norm = trial_norm;
        break;
      }
      s *= 0.5;
      if (s < opts.step_halving_floor) {
        std::ostringstream os;
        os << "damped Newton: step size fell below " << opts.step_halving_floor
           << " without sufficient decrease, residual " << norm;
        throw NonconvergenceError(os.str(), result.residual_history);
      }
    }
    ++result.iterations;
    result.step_sizes.push_back(s);
    result.residual_history.push_back(norm);
  }
  return result;
}

}  // namespace ivanov
