#include "ivanov/ivanov_qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace ivanov {

// With K the linearized operator and S = K^-T M K^-1 M, the first two block
// rows give p = e - S u with e = K^-T M (g - y_k) + S u_k.
struct LinearizedModel::Cache {
  std::mutex mutex;
  std::optional<SparseLu> k_lu;
  std::optional<SparseLu> kt_lu;
  Vector uk;
  Vector mgy;
  Eigen::MatrixXd s;
  Eigen::VectorXd e;
  bool dense_ready = false;
};

const char* to_string(BoundsMode mode) {
  return mode == BoundsMode::nonneg ? "nonneg" : "symmetric";
}

BoundsMode bounds_mode_from_string(const std::string& s) {
  if (s == "nonneg") return BoundsMode::nonneg;
  if (s == "symmetric") return BoundsMode::symmetric;
  throw std::invalid_argument("unknown bounds mode '" + s + "' (expected symmetric or nonneg)");
}

LinearizedModel LinearizedModel::build(std::shared_ptr<const FemSpace> space, double kappa,
                                       NodalField u_k, NodalField y_k, NodalField g_delta) {
  LinearizedModel m;
  m.k = assemble_linearized_operator(space->mesh(), y_k, kappa);
  m.space = std::move(space);
  m.kappa = kappa;
  m.u_k = std::move(u_k);
  m.y_k = std::move(y_k);
  m.g_delta = std::move(g_delta);
  m.cache = std::make_shared<Cache>();
  return m;
}

void QpProblem::validate() const {
  if (!model || !model->space) throw std::invalid_argument("QpProblem: missing linearized model");
  if (!(rho >= 0.0)) throw std::invalid_argument("QpProblem: rho must be >= 0");
  if (!(settings.gamma_final <= settings.gamma_0) || !(settings.gamma_final > 0.0))
    throw std::invalid_argument("QpProblem: need 0 < gamma_final <= gamma_0");
  if (settings.i_max < 1) throw std::invalid_argument("QpProblem: i_max must be >= 1");
  const std::size_t nv = model->space->mesh().n_vertices();
  if (model->u_k.size() != nv || model->y_k.size() != nv || model->g_delta.size() != nv)
    throw DimensionError("QpProblem: field size differs from vertex count");
}

namespace {

// Per-node state: +1 upper active, -1 lower active, 0 inactive.
std::vector<signed char> node_states(std::size_t n, const ActiveSets& active) {
  std::vector<signed char> s(n, 0);
  for (auto i : active.plus) {
    if (i >= n) throw std::invalid_argument("active set index out of range");
    s[i] = 1;
  }
  for (auto i : active.minus) {
    if (i >= n) throw std::invalid_argument("active set index out of range");
    if (s[i] != 0) throw std::invalid_argument("active sets A+ and A- overlap");
    s[i] = -1;
  }
  return s;
}

// Right-hand side blocks that do not depend on gamma or the active sets.
struct ConstantBlocks {
  TripletList triplets;  // everything except the -(1/gamma) As block
  Vector b1;
  Vector b2;
};

ConstantBlocks constant_blocks(const QpProblem& pr) {
  const LinearizedModel& m = *pr.model;
  const FemSpace& space = *m.space;
  const std::size_t n = space.mesh().n_interior();
  ConstantBlocks c;
  const SparseMatrix& mi = space.interior_mass();
  c.triplets.reserve(2 * m.k.nnz() + 2 * mi.nnz() + 2 * n);
  m.k.append_triplets(c.triplets, 0, 0);
  mi.append_triplets(c.triplets, 0, 2 * n, -1.0);
  mi.append_triplets(c.triplets, n, 0);
  m.k.transpose().append_triplets(c.triplets, n, n);
  for (std::size_t i = 0; i < n; ++i) c.triplets.push_back({2 * n + i, 2 * n + i, 1.0});

  c.b1 = matvec(mi, restrict_to_interior(space.mesh(), m.u_k));
  for (auto& x : c.b1) x = -x;
  Vector diff(m.g_delta.size());
  for (std::size_t v = 0; v < diff.size(); ++v) diff[v] = m.g_delta[v] - m.y_k[v];
  c.b2 = space.load(diff);
  return c;
}

KktSystem assemble_with(const QpProblem& pr, const ConstantBlocks& c, double gamma,
                        const std::vector<signed char>& state) {
  const std::size_t n = c.b1.size();
  TripletList t = c.triplets;
  for (std::size_t i = 0; i < n; ++i)
    if (state[i] == 0) t.push_back({2 * n + i, n + i, -1.0 / gamma});
  KktSystem sys;
  sys.h = SparseMatrix::from_triplets(t, 3 * n, 3 * n);
  sys.b.resize(3 * n);
  std::copy(c.b1.begin(), c.b1.end(), sys.b.begin());
  std::copy(c.b2.begin(), c.b2.end(), sys.b.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = 0; i < n; ++i)
    sys.b[2 * n + i] = state[i] > 0 ? pr.rho : state[i] < 0 ? pr.lower() : 0.0;
  return sys;
}

ActiveSets sets_from_states(const std::vector<signed char>& s) {
  ActiveSets a;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] > 0) a.plus.push_back(i);
    if (s[i] < 0) a.minus.push_back(i);
  }
  return a;
}

std::vector<signed char> classify_states(const QpProblem& pr, std::span<const double> p,
                                         double gamma) {
  std::vector<signed char> s(p.size(), 0);
  const double upper = pr.rho * gamma;
  const double lower = pr.lower() * gamma;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > upper) s[i] = 1;
    else if (p[i] < lower) s[i] = -1;
  }
  return s;
}

}  // namespace

KktSystem assemble_kkt_system(const QpProblem& problem, double gamma, const ActiveSets& active) {
  problem.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("assemble_kkt_system: gamma must be positive");
  const std::size_t n = problem.model->space->mesh().n_interior();
  return assemble_with(problem, constant_blocks(problem), gamma, node_states(n, active));
}

ActiveSets classify(const QpProblem& problem, std::span<const double> p_interior, double gamma) {
  return sets_from_states(classify_states(problem, p_interior, gamma));
}

double kkt_residual(const QpProblem& problem, const NodalField& u, const NodalField& v,
                    const NodalField& p, double gamma) {
  const LinearizedModel& m = *problem.model;
  const FemSpace& space = *m.space;
  const Mesh& mesh = space.mesh();
  const Vector ui = restrict_to_interior(mesh, u);
  const Vector vi = restrict_to_interior(mesh, v);
  const Vector pi = restrict_to_interior(mesh, p);
  const Vector uk = restrict_to_interior(mesh, m.u_k);
  const std::size_t n = ui.size();

  Vector du(n);
  for (std::size_t i = 0; i < n; ++i) du[i] = ui[i] - uk[i];
  const Vector kv = matvec(m.k, vi);
  const Vector mdu = matvec(space.interior_mass(), du);

  const Vector mv = matvec(space.interior_mass(), vi);
  const Vector ktp = matvec(m.k.transpose(), pi);
  Vector diff(mesh.n_vertices());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = m.g_delta[k] - m.y_k[k];
  const Vector mgy = space.load(diff);

  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r1 = kv[i] - mdu[i];
    const double r2 = mv[i] + ktp[i] - mgy[i];
    const double proj = std::clamp(pi[i] / gamma, problem.lower(), problem.rho);
    const double r3 = ui[i] - proj;
    s += r1 * r1 + r2 * r2 + r3 * r3;
  }
  return std::sqrt(s);
}

double qp_objective(const QpProblem& problem, const NodalField& u, const NodalField& v, double gamma) {
  const LinearizedModel& m = *problem.model;
  NodalField r(v.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = v[k] + m.y_k[k] - m.g_delta[k];
  const double misfit = m.space->l2_norm(r.span());
  const double unorm = m.space->l2_norm(u.span());
  return 0.5 * misfit * misfit + 0.5 * gamma * unorm * unorm;
}

namespace {

// Inactive sets up to this size are solved through the dense reduced
// operator; larger ones through the sparse block system.
constexpr std::size_t kDenseLimit = 500;
constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 30;
// Fischer-Burmeister recovery when the active-set iteration stalls.
constexpr int kRecoveryIterations = 200;
constexpr double kDescentFloor = 1e-10;

LinearizedModel::Cache& prepare_cache(const LinearizedModel& m,
                                      std::shared_ptr<LinearizedModel::Cache>& local) {
  if (!m.cache) local = std::make_shared<LinearizedModel::Cache>();
  LinearizedModel::Cache& c = m.cache ? *m.cache : *local;
  std::lock_guard lock(c.mutex);
  if (!c.k_lu) {
    const Mesh& mesh = m.space->mesh();
    c.k_lu.emplace(m.k);
    c.kt_lu.emplace(m.k.transpose());
    c.uk = restrict_to_interior(mesh, m.u_k);
    Vector diff(mesh.n_vertices());
    for (std::size_t v = 0; v < diff.size(); ++v) diff[v] = m.g_delta[v] - m.y_k[v];
    c.mgy = m.space->load(diff);
  }
  return c;
}

void prepare_dense(const LinearizedModel& m, LinearizedModel::Cache& c) {
  std::lock_guard lock(c.mutex);
  if (c.dense_ready) return;
  const SparseMatrix& mi = m.space->interior_mass();
  const std::size_t n = mi.rows();
  const auto ni = static_cast<Eigen::Index>(n);
  c.s.resize(ni, ni);
  Vector col(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    col[j] = 1.0;
    const Vector x = c.k_lu->solve(matvec(mi, col));
    const Vector sj = c.kt_lu->solve(matvec(mi, x));
    col[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) c.s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sj[i];
  }
  const Vector base = c.kt_lu->solve(c.mgy);
  const Eigen::VectorXd suk = c.s * Eigen::Map<const Eigen::VectorXd>(c.uk.data(), ni);
  c.e.resize(ni);
  for (std::size_t i = 0; i < n; ++i) c.e(static_cast<Eigen::Index>(i)) = base[i] + suk(static_cast<Eigen::Index>(i));
  c.dense_ready = true;
}

Vector adjoint_of(const LinearizedModel& m, const LinearizedModel::Cache& c,
                  std::span<const double> u, Vector* v_out = nullptr) {
  const SparseMatrix& mi = m.space->interior_mass();
  Vector du(u.size());
  for (std::size_t i = 0; i < du.size(); ++i) du[i] = u[i] - c.uk[i];
  Vector v = c.k_lu->solve(matvec(mi, du));
  Vector rhs = matvec(mi, v);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = c.mgy[i] - rhs[i];
  if (v_out) *v_out = std::move(v);
  return c.kt_lu->solve(rhs);
}

double nodal_residual(const QpProblem& pr, std::span<const double> u, std::span<const double> p,
                      double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = u[i] - std::clamp(p[i] / gamma, pr.lower(), pr.rho);
    s += r * r;
  }
  return std::sqrt(s);
}

// Block system with u eliminated through its third row; unknowns interleaved
// per node as (v_i, p_i), which keeps the factorization narrow.
Vector solve_eliminated(const QpProblem& pr, const ConstantBlocks& blocks, double gamma,
                        const std::vector<signed char>& state) {
  const LinearizedModel& m = *pr.model;
  const SparseMatrix& mi = m.space->interior_mass();
  const std::size_t n = state.size();
  Vector u_fixed(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (state[i] != 0) u_fixed[i] = state[i] > 0 ? pr.rho : pr.lower();

  TripletList t;
  t.reserve(2 * m.k.nnz() + 2 * mi.nnz());
  const SparseMatrix kt = m.k.transpose();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t q = m.k.row_offsets()[r]; q < m.k.row_offsets()[r + 1]; ++q)
      t.push_back({2 * r, 2 * m.k.col_indices()[q], m.k.values()[q]});
    for (std::size_t q = kt.row_offsets()[r]; q < kt.row_offsets()[r + 1]; ++q)
      t.push_back({2 * r + 1, 2 * kt.col_indices()[q] + 1, kt.values()[q]});
    for (std::size_t q = mi.row_offsets()[r]; q < mi.row_offsets()[r + 1]; ++q) {
      const std::size_t c = mi.col_indices()[q];
      t.push_back({2 * r + 1, 2 * c, mi.values()[q]});
      if (state[c] == 0) t.push_back({2 * r, 2 * c + 1, -mi.values()[q] / gamma});
    }
  }
  const SparseMatrix h = SparseMatrix::from_triplets(t, 2 * n, 2 * n);
  const Vector mu = matvec(mi, u_fixed);
  Vector b(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    b[2 * i] = blocks.b1[i] + mu[i];
    b[2 * i + 1] = blocks.b2[i];
  }
  const Vector y = solve(h, b);
  Vector x(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = y[2 * i];
    x[n + i] = y[2 * i + 1];
    x[2 * n + i] = state[i] == 0 ? y[2 * i + 1] / gamma : u_fixed[i];
  }
  return x;
}

// Solution (v, p, u) of the block system for fixed gamma and node states.
Vector solve_block_system(const QpProblem& pr, const ConstantBlocks& blocks,
                          LinearizedModel::Cache& c, double gamma,
                          const std::vector<signed char>& state) {
  const std::size_t n = state.size();
  std::vector<std::size_t> inactive;
  for (std::size_t i = 0; i < n; ++i)
    if (state[i] == 0) inactive.push_back(i);
  if (inactive.size() > kDenseLimit) {
    return solve_eliminated(pr, blocks, gamma, state);
  }

  prepare_dense(*pr.model, c);
  const auto m = static_cast<Eigen::Index>(inactive.size());
  Eigen::VectorXd u_fixed = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    if (state[i] != 0) u_fixed(static_cast<Eigen::Index>(i)) = state[i] > 0 ? pr.rho : pr.lower();
  Vector u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = u_fixed(static_cast<Eigen::Index>(i));
  if (m > 0) {
    const Eigen::VectorXd su = c.s * u_fixed;
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto ir = static_cast<Eigen::Index>(inactive[static_cast<std::size_t>(r)]);
      for (Eigen::Index k = 0; k < m; ++k)
        a(r, k) = c.s(ir, static_cast<Eigen::Index>(inactive[static_cast<std::size_t>(k)]));
      a(r, r) += gamma;
      rhs(r) = c.e(ir) - su(ir);
    }
    const Eigen::VectorXd ui = a.partialPivLu().solve(rhs);
    for (Eigen::Index r = 0; r < m; ++r) u[inactive[static_cast<std::size_t>(r)]] = ui(r);
  }
  Vector v;
  Vector p = adjoint_of(*pr.model, c, u, &v);
  // Inactive rows of the third block hold exactly.
  for (auto i : inactive) p[i] = gamma * u[i];
  Vector x(3 * n);
  std::copy(v.begin(), v.end(), x.begin());
  std::copy(p.begin(), p.end(), x.begin() + static_cast<std::ptrdiff_t>(n));
  std::copy(u.begin(), u.end(), x.begin() + static_cast<std::ptrdiff_t>(2 * n));
  return x;
}

// Largest singular value of a by power iteration on a^T a.
double spectral_norm(const Eigen::MatrixXd& a) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(a.cols()).normalized();
  double sigma = 0.0;
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd y = a.transpose() * (a * x);
    const double next = std::sqrt(y.norm());
    x = y / y.norm();
    if (std::abs(next - sigma) <= 1e-6 * next) return next;
    sigma = next;
  }
  return sigma;
}

struct Recovery {
  Vector x;
  std::vector<signed char> state;
};

// phi(a, b) = a + b - sqrt(a^2 + b^2) and its partial derivatives.
struct FbValue {
  double value, da, db;
};

FbValue fischer_burmeister(double a, double b) {
  const double r = std::hypot(a, b);
  if (r == 0.0) return {0.0, 1.0 - std::sqrt(0.5), 1.0 - std::sqrt(0.5)};
  return {a + b - r, 1.0 - a / r, 1.0 - b / r};
}

// Box complementarity u in [lo, hi] against F(u) = gamma u - p(u), written as
// Phi_i = phi(u_i - lo, -phi(hi - u_i, -F_i)) and solved by Newton on Phi
// with an Armijo search on 1/2 |Phi|^2, falling back to its gradient when the
// Newton direction is not a descent direction. Every iterate's sets seed an
// exact block solve, which ends the recovery once they are stable.
std::optional<Recovery> recover_by_fischer_burmeister(const QpProblem& pr, const ConstantBlocks& blocks,
                                                      LinearizedModel::Cache& c, double gamma,
                                                      std::span<const double> u_start) {
  prepare_dense(*pr.model, c);
  const auto n = static_cast<Eigen::Index>(u_start.size());
  const auto nn = static_cast<std::size_t>(n);
  Eigen::MatrixXd a = c.s;
  a.diagonal().array() += gamma;
  const double scale = 1.0 / spectral_norm(a);
  a *= scale;
  const Eigen::VectorXd e = scale * c.e;
  const double lo = pr.lower(), hi = pr.rho;

  Eigen::VectorXd da(n), db(n);
  auto residual = [&](const Eigen::VectorXd& u, bool with_derivatives) {
    const Eigen::VectorXd f = a * u - e;
    Eigen::VectorXd phi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const FbValue inner = fischer_burmeister(hi - u(i), -f(i));
      const FbValue outer = fischer_burmeister(u(i) - lo, -inner.value);
      phi(i) = outer.value;
      if (with_derivatives) {
        da(i) = outer.da + outer.db * inner.da;
        db(i) = outer.db * inner.db;
      }
    }
    return phi;
  };

  Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(u_start.data(), n);
  for (int it = 0; it < kRecoveryIterations; ++it) {
    const Eigen::VectorXd p = c.e - c.s * u;
    auto state = classify_states(pr, std::span<const double>(p.data(), nn), gamma);
    Vector x = solve_block_system(pr, blocks, c, gamma, state);
    if (classify_states(pr, std::span<const double>(x).subspan(nn, nn), gamma) == state)
      return Recovery{std::move(x), std::move(state)};

    const Eigen::VectorXd phi = residual(u, true);
    const double merit = 0.5 * phi.squaredNorm();
    Eigen::MatrixXd jac = db.asDiagonal() * a;
    jac.diagonal() += da;
    const Eigen::VectorXd grad = jac.transpose() * phi;
    Eigen::VectorXd d = jac.partialPivLu().solve(-phi);
    if (!d.allFinite() || grad.dot(d) > -kDescentFloor * std::pow(d.norm(), 2.1)) d = -grad;
    const double slope = grad.dot(d);
    double t = 1.0;
    for (int b = 0; b <= kMaxBacktracks; ++b, t *= 0.5) {
      const Eigen::VectorXd trial = u + t * d;
      if (0.5 * residual(trial, false).squaredNorm() <= merit + kArmijo * t * slope) break;
    }
    u += t * d;
  }
  return std::nullopt;
}

}  // namespace

QpSolution solve_linearized_ivanov(const QpProblem& problem, const ActiveSets* warm_start) {
  problem.validate();
  const FemSpace& space = *problem.model->space;
  const Mesh& mesh = space.mesh();
  const std::size_t n = mesh.n_interior();
  const ConstantBlocks blocks = constant_blocks(problem);
  std::shared_ptr<LinearizedModel::Cache> local_cache;
  LinearizedModel::Cache& cache = prepare_cache(*problem.model, local_cache);
  const QpSettings& cfg = problem.settings;

  std::vector<signed char> state =
      warm_start ? node_states(n, *warm_start) : std::vector<signed char>(n, 0);
  Vector x;      // (v, p, u) of the latest block solve
  Vector u_cur;  // current control iterate (interior)
  Vector p_cur;  // adjoint of u_cur
  std::vector<signed char> solved_state = state;
  QpSolution sol;
  bool last_stable = false;

  for (std::size_t level = 0;; ++level) {
    const double gamma = std::ldexp(cfg.gamma_0, -static_cast<int>(level));
    // Warm start: the previous level's point decides the first sets here.
    if (!u_cur.empty()) state = classify_states(problem, p_cur, gamma);

    GammaLevelTrace level_trace;
    level_trace.gamma = gamma;
    last_stable = false;
    for (std::size_t i = 0; i < cfg.i_max; ++i) {
      x = solve_block_system(problem, blocks, cache, gamma, state);
      solved_state = state;
      ++sol.ssn_iterations;
      ++level_trace.inner_iterations;
      const auto xs = std::span<const double>(x);
      const auto p_new = xs.subspan(n, n);
      const auto u_new = xs.subspan(2 * n, n);
      auto next = classify_states(problem, p_new, gamma);
      if (next == state || u_cur.empty()) {
        u_cur.assign(u_new.begin(), u_new.end());
        p_cur.assign(p_new.begin(), p_new.end());
        if (next == state) {
          last_stable = true;
          break;
        }
        state = std::move(next);
        continue;
      }
      // Backtracking on the nodal residual along u_cur -> u_new.
      const double m0 = nodal_residual(problem, u_cur, p_cur, gamma);
      Vector trial(n);
      Vector best_u;
      Vector best_p;
      double best_m = std::numeric_limits<double>::infinity();
      double t = 1.0;
      for (int b = 0; b <= kMaxBacktracks; ++b, t *= 0.5) {
        for (std::size_t j = 0; j < n; ++j) trial[j] = u_cur[j] + t * (u_new[j] - u_cur[j]);
        Vector p_trial = b == 0 ? Vector(p_new.begin(), p_new.end()) : adjoint_of(*problem.model, cache, trial);
        const double m = nodal_residual(problem, trial, p_trial, gamma);
        if (m < best_m) {
          best_m = m;
          best_u = trial;
          best_p = std::move(p_trial);
        }
        if (m <= (1.0 - kArmijo * t) * m0) break;
      }
      u_cur = std::move(best_u);
      p_cur = std::move(best_p);
      state = classify_states(problem, p_cur, gamma);
    }
    if (!last_stable) {
      if (auto r = recover_by_fischer_burmeister(problem, blocks, cache, gamma, u_cur)) {
        x = std::move(r->x);
        solved_state = std::move(r->state);
        const auto xs = std::span<const double>(x);
        p_cur.assign(xs.begin() + static_cast<std::ptrdiff_t>(n), xs.begin() + static_cast<std::ptrdiff_t>(2 * n));
        u_cur.assign(xs.begin() + static_cast<std::ptrdiff_t>(2 * n), xs.end());
        last_stable = true;
      }
    }

    const auto xs = std::span<const double>(x);
    sol.v = extend_from_interior(mesh, xs.subspan(0, n));
    sol.p = extend_from_interior(mesh, xs.subspan(n, n));
    sol.u = extend_from_interior(mesh, xs.subspan(2 * n, n));
    sol.gamma_reached = gamma;
    sol.kkt_residual = kkt_residual(problem, sol.u, sol.v, sol.p, gamma);

    level_trace.sets_stable = last_stable;
    level_trace.kkt_residual = sol.kkt_residual;
    level_trace.objective = qp_objective(problem, sol.u, sol.v, gamma);
    const auto sets = sets_from_states(solved_state);
    level_trace.n_plus = sets.plus.size();
    level_trace.n_minus = sets.minus.size();
    sol.trace.push_back(level_trace);

    if (gamma <= cfg.gamma_final) break;
  }

  sol.active = sets_from_states(solved_state);
  sol.converged = last_stable && sol.gamma_reached <= cfg.gamma_final &&
                  sol.kkt_residual <= cfg.kkt_tol;
  sol.objective_regressed = sol.trace.back().objective > sol.trace.front().objective + 1e-9;
  return sol;
}

}  // namespace ivanov
