#pragma once

// Synthetic-data experiments: exact source, data on a finer grid, noise,
// reconstruction metrics and report files.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ivanov/irgnm.hpp"

namespace ivanov {

struct ExperimentConfig {
  std::size_t n_grid = 32;
  std::size_t fine_factor = 2;
  std::vector<double> kappas{1.0, 100.0};
  /// Relative noise levels (0.01 = 1 %).
  std::vector<double> noise_levels{0.001, 0.01, 0.05, 0.10};
  std::uint64_t seed = 1;
  double tau = 2.0;
  double theta_low = 0.51;
  double theta_high = 0.98;
  double rho_start = 100.0;
  double gamma_final = 1e-9;
  BoundsMode bounds = BoundsMode::nonneg;
  std::size_t max_gn = 60;
  std::filesystem::path out_dir = "results";
  bool dump_fields = false;
  std::size_t jobs = 1;

  void validate() const;
  OuterConfig outer_config(double kappa) const;
};

struct Metrics {
  double l1_error = 0.0;
  std::array<double, 3> spot_errors{};
  double rho_final = 0.0;
  std::size_t gn_iterations = 0;
  std::size_t minimizations = 0;
};

/// Squares [x0, x0 + 1/N) x [y0, y0 + 1/N) probing the reconstruction.
std::array<std::array<double, 4>, 3> spot_boxes(std::size_t n_grid);

/// Nodal interpolant of the indicator of the disk of radius 0.2 about (0.3, 0.3).
NodalField make_exact_source(const Mesh& mesh);

/// Solves the state equation on `fine` for the source u_ex_fine and
/// L2-projects the state onto `coarse`.
NodalField synthesize_data(const FemSpace& fine, const Mesh& coarse, const NodalField& u_ex_fine,
                           double kappa, const NewtonOptions& newton = {});

struct NoisyData {
  NodalField g_delta;
  double delta_abs = 0.0;
};

/// Name of the generator behind add_noise, recorded in reports.
inline constexpr const char* kNoiseGenerator = "mt19937_64/box-muller";

/// g_delta = g + rel ||g|| / ||e|| e with e i.i.d. standard normal per vertex,
/// so ||g_delta - g||_{L2} = rel ||g||_{L2} = delta_abs.
NoisyData add_noise(const FemSpace& space, const NodalField& g, double rel_level,
                    std::uint64_t seed);

/// Per-cell seed stream derived from the base seed and (kappa, noise level).
std::uint64_t cell_seed(std::uint64_t seed, double kappa, double noise_level);

Metrics evaluate_metrics(const Mesh& mesh, const NodalField& u_rec, const NodalField& u_ex,
                         const RunReport& run);

struct CellResult {
  double kappa = 0.0;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  RunReport run;
  Metrics metrics;
  NodalField u_ex;
  NodalField g_delta;
  double wall_clock_seconds = 0.0;
  bool ok = false;
  std::string error;
};

/// One (kappa, noise) experiment; never throws for solver failures, which
/// end up in `ok`/`error` and the run's stop reason.
CellResult run_cell(const ExperimentConfig& cfg, double kappa, double noise_level,
                    const StepLogger& log = {});

/// Directory name "<kappa>_<noise percent>".
std::string cell_name(double kappa, double noise_level);

void write_summary_csv(std::ostream& os, const std::vector<CellResult>& cells);
std::string report_json(const ExperimentConfig& cfg, const CellResult& cell);

/// Runs the whole grid, writes summary.csv, per-cell report.json, run.log
/// and optional field dumps. Returns 0 iff every run stopped by the
/// discrepancy principle.
int run_experiment_suite(const ExperimentConfig& cfg, std::ostream& progress);

}  // namespace ivanov
