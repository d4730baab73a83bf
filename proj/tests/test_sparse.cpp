#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include <random>

#include "ivanov/sparse.hpp"

using namespace ivanov;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.rows()),
                                            static_cast<Eigen::Index>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a.col_indices()[k])) = a.values()[k];
  return d;
}

SparseMatrix random_sparse(std::size_t n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  TripletList t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (keep(rng)) t.push_back({i, j, u(rng)});
  return SparseMatrix::from_triplets(t, n, n);
}

// B^T B + I, symmetric positive definite.
SparseMatrix spd_matrix(std::size_t n, std::mt19937_64& rng) {
  const Eigen::MatrixXd b = dense(random_sparse(n, 0.05, rng));
  const Eigen::MatrixXd a = b.transpose() * b + Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  TripletList t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double v = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v != 0.0) t.push_back({i, j, v});
    }
  return SparseMatrix::from_triplets(t, n, n);
}

}  // namespace

TEST_CASE("triplets are sorted per row and duplicates summed") {
  const TripletList t = {{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 2, 4.0}, {0, 0, -1.0}};
  const auto a = SparseMatrix::from_triplets(t, 2, 3);
  CHECK(a.nnz() == 4);
  CHECK(a.row_offsets() == std::vector<std::size_t>{0, 2, 4});
  CHECK(a.col_indices() == std::vector<std::size_t>{0, 1, 0, 2});
  CHECK(a.coeff(1, 2) == doctest::Approx(5.0));
  CHECK(a.coeff(0, 2) == 0.0);
}

TEST_CASE("out-of-range triplet is rejected") {
  const TripletList t = {{0, 3, 1.0}};
  CHECK_THROWS_AS(SparseMatrix::from_triplets(t, 2, 3), AssemblyError);
}

TEST_CASE("matvec agrees with a dense product") {
  std::mt19937_64 rng(7);
  const auto a = random_sparse(40, 0.2, rng);
  Vector x(40);
  std::normal_distribution<double> nd;
  for (auto& v : x) v = nd(rng);
  const Vector y = matvec(a, x);
  const Eigen::VectorXd ref = dense(a) * Eigen::Map<const Eigen::VectorXd>(x.data(), 40);
  for (std::size_t i = 0; i < 40; ++i) CHECK(y[i] == doctest::Approx(ref(static_cast<Eigen::Index>(i))).epsilon(1e-14));
  CHECK_THROWS_AS(matvec(a, Vector(39)), DimensionError);
}

TEST_CASE("transpose and select") {
  const TripletList t = {{0, 1, 2.0}, {2, 0, 3.0}, {1, 1, 5.0}};
  const auto a = SparseMatrix::from_triplets(t, 3, 2);
  const auto at = a.transpose();
  CHECK(at.rows() == 2);
  CHECK(at.coeff(1, 0) == 2.0);
  CHECK(at.coeff(0, 2) == 3.0);
  const std::vector<std::size_t> rows = {2, 1};
  const std::vector<std::size_t> cols = {1, 0};
  const auto s = a.select(rows, cols);
  CHECK(s.coeff(0, 1) == 3.0);
  CHECK(s.coeff(1, 0) == 5.0);
  CHECK(s.nnz() == 2);
}

TEST_CASE("SPD solves meet the linear tolerance") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 200;
    const auto a = spd_matrix(n, rng);
    Vector b(n);
    std::normal_distribution<double> nd;
    for (auto& v : b) v = nd(rng);
    const Vector x = solve(a, b);
    Vector r = matvec(a, x);
    for (std::size_t i = 0; i < n; ++i) r[i] -= b[i];
    CHECK(norm2(r) <= 1e-12 * std::max(1.0, norm2(b)));
  }
}

TEST_CASE("solution is invariant under a symmetric permutation") {
  std::mt19937_64 rng(11);
  const std::size_t n = 60;
  const auto a = spd_matrix(n, rng);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto pa = a.select(perm, perm);
  Vector b(n), pb(n);
  std::normal_distribution<double> nd;
  for (auto& v : b) v = nd(rng);
  for (std::size_t i = 0; i < n; ++i) pb[i] = b[perm[i]];
  const Vector x = solve(a, b);
  const Vector px = solve(pa, pb);
  for (std::size_t i = 0; i < n; ++i) CHECK(px[i] == doctest::Approx(x[perm[i]]).epsilon(1e-10));
}

TEST_CASE("factorization is reused across right-hand sides") {
  std::mt19937_64 rng(5);
  const auto a = spd_matrix(50, rng);
  const SparseLu lu(a);
  for (int k = 0; k < 3; ++k) {
    Vector b(50, static_cast<double>(k + 1));
    const Vector x = lu.solve(b);
    Vector r = matvec(a, x);
    for (std::size_t i = 0; i < 50; ++i) r[i] -= b[i];
    CHECK(norm2(r) <= 1e-12 * norm2(b));
  }
}

TEST_CASE("singular matrix raises SolverError") {
  const TripletList t = {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 4.0}, {2, 2, 1.0}};
  const auto a = SparseMatrix::from_triplets(t, 3, 3);
  CHECK_THROWS_AS(SparseLu{a}, SolverError);
  const auto empty_row = SparseMatrix::from_triplets(TripletList{{0, 0, 1.0}}, 2, 2);
  CHECK_THROWS_AS(SparseLu{empty_row}, SolverError);
}

TEST_CASE("non-square matrix is rejected") {
  const auto a = SparseMatrix::from_triplets(TripletList{{0, 0, 1.0}}, 2, 3);
  CHECK_THROWS_AS(SparseLu{a}, DimensionError);
}
