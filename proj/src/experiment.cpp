#include "ivanov/experiment.hpp"

#include "json.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace ivanov {

void ExperimentConfig::validate() const {
  if (n_grid < 1) throw std::invalid_argument("ExperimentConfig: n_grid must be >= 1");
  if (fine_factor < 2) throw std::invalid_argument("ExperimentConfig: fine_factor must be >= 2");
  for (double d : noise_levels)
    if (!(d >= 0.0 && d < 1.0))
      throw std::invalid_argument("ExperimentConfig: noise levels must lie in [0, 1)");
  for (double k : kappas)
    if (!(k >= 0.0)) throw std::invalid_argument("ExperimentConfig: kappa must be >= 0");
  if (jobs < 1) throw std::invalid_argument("ExperimentConfig: jobs must be >= 1");
  outer_config(1.0).validate();
}

OuterConfig ExperimentConfig::outer_config(double kappa) const {
  OuterConfig c;
  c.tau = tau;
  c.kappa = kappa;
  c.n_grid = n_grid;
  c.bounds = bounds;
  c.max_gn = max_gn;
  c.radius.rho_start = rho_start;
  c.radius.theta_low = theta_low;
  c.radius.theta_high = theta_high;
  c.qp.gamma_final = gamma_final;
  return c;
}

std::array<std::array<double, 4>, 3> spot_boxes(std::size_t n_grid) {
  const double w = 1.0 / static_cast<double>(n_grid);
  return {{{0.3, 0.3 + w, 0.3, 0.3 + w}, {0.7, 0.7 + w, 0.3, 0.3 + w}, {0.3, 0.3 + w, 0.5, 0.5 + w}}};
}

NodalField make_exact_source(const Mesh& mesh) {
  return interpolate(mesh, [](Point p) {
    const double dx = p.x - 0.3, dy = p.y - 0.3;
    return dx * dx + dy * dy <= 0.04 ? 1.0 : 0.0;
  });
}

NodalField synthesize_data(const FemSpace& fine, const Mesh& coarse, const NodalField& u_ex_fine,
                           double kappa, const NewtonOptions& newton) {
  const auto state =
      solve_semilinear(fine, u_ex_fine, kappa, NodalField(fine.mesh().n_vertices()), newton);
  return transfer(fine.mesh(), coarse, state.y, TransferMode::l2_project);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1] from the top 53 bits.
double uniform_open_closed(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::uint64_t cell_seed(std::uint64_t seed, double kappa, double noise_level) {
  const std::uint64_t h =
      splitmix64(std::bit_cast<std::uint64_t>(kappa) ^ splitmix64(std::bit_cast<std::uint64_t>(noise_level)));
  return seed ^ h;
}

NoisyData add_noise(const FemSpace& space, const NodalField& g, double rel_level,
                    std::uint64_t seed) {
  if (!(rel_level >= 0.0)) throw std::invalid_argument("add_noise: rel_level must be >= 0");
  NoisyData out{g, 0.0};
  if (rel_level == 0.0) return out;

  const double gnorm = space.l2_norm(g.span());
  if (!(gnorm > 0.0)) throw std::invalid_argument("add_noise: cannot scale noise relative to g = 0");

  // Box-Muller, both variates of each pair used in order.
  std::mt19937_64 rng(seed);
  NodalField e(g.size());
  for (std::size_t k = 0; k < e.size(); k += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform_open_closed(rng)));
    const double t = 2.0 * std::numbers::pi * uniform_open_closed(rng);
    e[k] = r * std::cos(t);
    if (k + 1 < e.size()) e[k + 1] = r * std::sin(t);
  }
  const double scale = rel_level * gnorm / space.l2_norm(e.span());
  for (std::size_t k = 0; k < e.size(); ++k) out.g_delta[k] = g[k] + scale * e[k];
  out.delta_abs = rel_level * gnorm;
  return out;
}

Metrics evaluate_metrics(const Mesh& mesh, const NodalField& u_rec, const NodalField& u_ex,
                         const RunReport& run) {
  if (u_rec.size() != mesh.n_vertices() || u_ex.size() != mesh.n_vertices())
    throw DimensionError("evaluate_metrics: field size differs from vertex count");
  NodalField err(u_rec.size());
  for (std::size_t k = 0; k < err.size(); ++k) err[k] = u_rec[k] - u_ex[k];

  Metrics m;
  m.l1_error = integrate_abs(mesh, err.span());
  const auto boxes = spot_boxes(mesh.n_per_side());
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& b = boxes[s];
    const double area = (b[1] - b[0]) * (b[3] - b[2]);
    m.spot_errors[s] = std::abs(integrate_over_box(mesh, err.span(), b[0], b[1], b[2], b[3])) / area;
  }
  m.rho_final = run.rho_final;
  m.gn_iterations = run.k_star;
  m.minimizations = run.minimizations_total;
  return m;
}

CellResult run_cell(const ExperimentConfig& cfg, double kappa, double noise_level,
                    const StepLogger& log) {
  const auto t0 = std::chrono::steady_clock::now();
  CellResult cell;
  cell.kappa = kappa;
  cell.noise_level = noise_level;
  cell.seed = cell_seed(cfg.seed, kappa, noise_level);
  try {
    const OuterConfig outer = cfg.outer_config(kappa);
    auto space = std::make_shared<const FemSpace>(build_unit_square_mesh(cfg.n_grid));
    const FemSpace fine(build_unit_square_mesh(cfg.n_grid * cfg.fine_factor));
    const NodalField g = synthesize_data(fine, space->mesh(), make_exact_source(fine.mesh()), kappa,
                                         outer.newton);
    auto noisy = add_noise(*space, g, noise_level, cell.seed);
    cell.g_delta = noisy.g_delta;
    cell.u_ex = make_exact_source(space->mesh());

    const NodalField u_0(space->mesh().n_vertices(), 0.0);
    cell.run = run_irgnm(outer, space, u_0, noisy.g_delta, noisy.delta_abs, log);
    cell.metrics = evaluate_metrics(space->mesh(), cell.run.u_final, cell.u_ex, cell.run);
    cell.ok = cell.run.stop_reason == StopReason::discrepancy_met ||
              cell.run.stop_reason == StopReason::discrepancy_met_at_start;
    if (!cell.ok) cell.error = cell.run.message.empty() ? to_string(cell.run.stop_reason) : cell.run.message;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  cell.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cell;
}

std::string cell_name(double kappa, double noise_level) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g_%g", kappa, noise_level * 100.0);
  return buf;
}

void write_summary_csv(std::ostream& os, const std::vector<CellResult>& cells) {
  os << "kappa,noise_pct,k_star,minimizations,rho_final,l1_error,spot1,spot2,spot3,stop_reason\n";
  char buf[512];
  for (const auto& c : cells) {
    const auto& m = c.metrics;
    std::snprintf(buf, sizeof buf, "%g,%g,%zu,%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%s\n", c.kappa,
                  c.noise_level * 100.0, c.run.k_star, c.run.minimizations_total, c.run.rho_final,
                  m.l1_error, m.spot_errors[0], m.spot_errors[1], m.spot_errors[2],
                  !c.ok && c.run.residual_history.empty() ? "error" : to_string(c.run.stop_reason));
    os << buf;
  }
}

std::string report_json(const ExperimentConfig& cfg, const CellResult& cell) {
  using nlohmann::json;
  const RunReport& r = cell.run;
  json config = {
      {"n_grid", cfg.n_grid},
      {"fine_factor", cfg.fine_factor},
      {"kappa", cell.kappa},
      {"noise_level", cell.noise_level},
      {"seed", cfg.seed},
      {"cell_seed", cell.seed},
      {"tau", cfg.tau},
      {"theta_low", cfg.theta_low},
      {"theta_high", cfg.theta_high},
      {"rho_start", cfg.rho_start},
      {"gamma_0", r.config.qp.gamma_0},
      {"gamma_final", cfg.gamma_final},
      {"i_max", r.config.qp.i_max},
      {"bounds", to_string(cfg.bounds)},
      {"max_gn", cfg.max_gn},
      {"newton_tol", r.config.newton.tol},
      {"rng", kNoiseGenerator},
  };
  json rho_history = json::array();
  json records = json::array();
  for (const auto& rec : r.records) {
    rho_history.push_back(rec.rho_k);
    records.push_back({{"k", rec.k},
                       {"rho", rec.rho_k},
                       {"nonlinear_discrepancy", rec.nonlinear_discrepancy},
                       {"linearized_discrepancy", rec.linearized_discrepancy},
                       {"qp_solves", rec.qp_solves},
                       {"newton_iters", rec.newton_iters},
                       {"start_margin", rec.case_a_margin},
                       {"start_satisfied", rec.case_a_satisfied},
                       {"contraction", std::isfinite(rec.contraction) ? json(rec.contraction) : json()}});
  }
  json j = {
      {"config", config},
      {"delta_abs", r.delta_abs},
      {"k_star", r.k_star},
      {"minimizations", r.minimizations_total},
      {"rho_final", r.rho_final},
      {"rho_history", rho_history},
      {"residual_history", r.residual_history},
      {"l1_error", cell.metrics.l1_error},
      {"spot_errors", cell.metrics.spot_errors},
      {"stop_reason", to_string(r.stop_reason)},
      {"wall_clock_seconds", cell.wall_clock_seconds},
      {"records", records},
  };
  if (!cell.error.empty()) j["error"] = cell.error;
  return j.dump(2);
}

namespace {

void write_cell_files(const ExperimentConfig& cfg, const CellResult& cell, const std::string& log) {
  const auto dir = cfg.out_dir / cell_name(cell.kappa, cell.noise_level);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.json") << report_json(cfg, cell) << "\n";
  std::ofstream(dir / "run.log") << log;
  if (!cfg.dump_fields || cell.u_ex.size() == 0) return;

  const Mesh mesh = build_unit_square_mesh(cfg.n_grid);
  auto dump = [&](const std::filesystem::path& name, const NodalField& f) {
    if (f.size() != mesh.n_vertices()) return;
    std::ofstream os(dir / name);
    write_field(os, mesh, f);
  };
  dump("u_rec.csv", cell.run.u_final);
  dump("u_ex.csv", cell.u_ex);
  dump("y_final.csv", cell.run.y_final);
  dump("g_delta.csv", cell.g_delta);
  for (std::size_t k = 0; k < cell.run.iterates.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "iterate_%02zu.csv", k);
    dump(name, cell.run.iterates[k]);
    std::snprintf(name, sizeof name, "state_%02zu.csv", k);
    dump(name, cell.run.states[k]);
  }
}

}  // namespace

int run_experiment_suite(const ExperimentConfig& cfg, std::ostream& progress) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  std::vector<std::pair<double, double>> grid;
  for (double k : cfg.kappas)
    for (double d : cfg.noise_levels) grid.emplace_back(k, d);

  std::vector<CellResult> cells(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      const auto [kappa, noise] = grid[i];
      std::ostringstream log;
      cells[i] = run_cell(cfg, kappa, noise, [&](const GnRecord& r) { log << format_record(r) << "\n"; });
      write_cell_files(cfg, cells[i], log.str());
      std::lock_guard lock(io);
      progress << cell_name(kappa, noise) << ": " << to_string(cells[i].run.stop_reason)
               << " k*=" << cells[i].run.k_star << " rho=" << cells[i].run.rho_final
               << " L1=" << cells[i].metrics.l1_error << " (" << cells[i].wall_clock_seconds << " s)";
      if (!cells[i].ok) progress << " error: " << cells[i].error;
      progress << "\n";
    }
  };
  const std::size_t n_threads = std::min(cfg.jobs, std::max<std::size_t>(grid.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream summary(cfg.out_dir / "summary.csv");
  write_summary_csv(summary, cells);

  for (const auto& c : cells)
    if (!c.ok) return 1;
  return 0;
}

}  // namespace ivanov
