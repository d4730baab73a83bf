// Command-line driver for the synthetic inverse source experiments.

#include <iostream>

#include "CLI11.hpp"
#include "ivanov/experiment.hpp"

int main(int argc, char** argv) {
  ivanov::ExperimentConfig cfg;
  std::vector<double> kappas;
  std::vector<double> noise_pct;
  std::string bounds = "nonneg";
  std::string out = "results";

  CLI::App app{"Ivanov-regularized Gauss-Newton reconstruction of a source in -Lap y + kappa y^3 = u"};
  app.add_option("--n-grid", cfg.n_grid, "cells per side of the inversion grid")->check(CLI::PositiveNumber);
  app.add_option("--fine-factor", cfg.fine_factor, "refinement factor of the data grid")->check(CLI::Range(2, 64));
  app.add_option("--kappa", kappas, "nonlinearity parameter (repeatable)");
  app.add_option("--noise", noise_pct, "relative noise level in percent (repeatable)");
  app.add_option("--seed", cfg.seed, "base seed of the noise generator");
  app.add_option("--tau", cfg.tau, "discrepancy principle factor");
  app.add_option("--theta-low", cfg.theta_low, "lower band factor for the radius");
  app.add_option("--theta-high", cfg.theta_high, "upper band factor for the radius");
  app.add_option("--rho-start", cfg.rho_start, "initial radius and enlargement step");
  app.add_option("--gamma-final", cfg.gamma_final, "final Moreau-Yosida weight");
  app.add_option("--bounds", bounds, "box constraint")->check(CLI::IsMember({"symmetric", "nonneg"}));
  app.add_option("--max-gn", cfg.max_gn, "maximum Gauss-Newton steps");
  app.add_option("--out", out, "output directory");
  app.add_flag("--dump-fields", cfg.dump_fields, "write x,y,value tables of the fields");
  app.add_option("--jobs", cfg.jobs, "runs executed in parallel")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  if (app.count("--kappa")) cfg.kappas = kappas;
  if (app.count("--noise")) {
    cfg.noise_levels.clear();
    for (double p : noise_pct) cfg.noise_levels.push_back(p / 100.0);
  }
  cfg.bounds = ivanov::bounds_mode_from_string(bounds);
  cfg.out_dir = out;

  try {
    return ivanov::run_experiment_suite(cfg, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
