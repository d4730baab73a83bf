#include "ivanov/sparse.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ivanov {

SparseMatrix SparseMatrix::from_triplets(std::span<const Triplet> triplets, std::size_t n_rows,
                                         std::size_t n_cols) {
  SparseMatrix m;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;

  std::vector<std::size_t> count(n_rows + 1, 0);
  for (const auto& t : triplets) {
    if (t.row >= n_rows || t.col >= n_cols) {
      std::ostringstream os;
      os << "triplet (" << t.row << ", " << t.col << ") outside " << n_rows << "x" << n_cols;
      throw AssemblyError(os.str());
    }
    ++count[t.row + 1];
  }
  std::partial_sum(count.begin(), count.end(), count.begin());

  // Bucket by row, then sort each row by column and merge duplicates.
  std::vector<std::size_t> order(triplets.size());
  std::vector<std::size_t> fill(count.begin(), count.end() - 1);
  for (std::size_t k = 0; k < triplets.size(); ++k) order[fill[triplets[k].row]++] = k;

  m.row_offsets_.assign(n_rows + 1, 0);
  m.col_indices_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  for (std::size_t i = 0; i < n_rows; ++i) {
    auto first = order.begin() + static_cast<std::ptrdiff_t>(count[i]);
    auto last = order.begin() + static_cast<std::ptrdiff_t>(count[i + 1]);
    // Stable sort keeps the summation order fixed for a fixed input order.
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return triplets[a].col < triplets[b].col;
    });
    for (auto it = first; it != last;) {
      const std::size_t col = triplets[*it].col;
      double sum = 0.0;
      for (; it != last && triplets[*it].col == col; ++it) sum += triplets[*it].value;
      m.col_indices_.push_back(col);
      m.values_.push_back(sum);
    }
    m.row_offsets_[i + 1] = m.values_.size();
  }
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  SparseMatrix m;
  m.n_rows_ = m.n_cols_ = n;
  m.row_offsets_.resize(n + 1);
  std::iota(m.row_offsets_.begin(), m.row_offsets_.end(), std::size_t{0});
  m.col_indices_.resize(n);
  std::iota(m.col_indices_.begin(), m.col_indices_.end(), std::size_t{0});
  m.values_.assign(n, 1.0);
  return m;
}

double SparseMatrix::coeff(std::size_t i, std::size_t j) const {
  if (i >= n_rows_ || j >= n_cols_) throw DimensionError("coeff index out of range");
  auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

SparseMatrix SparseMatrix::transpose() const {
  TripletList t;
  t.reserve(nnz());
  for (std::size_t i = 0; i < n_rows_; ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      t.push_back({col_indices_[k], i, values_[k]});
  return from_triplets(t, n_cols_, n_rows_);
}

SparseMatrix SparseMatrix::select(std::span<const std::size_t> rows,
                                  std::span<const std::size_t> cols) const {
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> col_map(n_cols_, none);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] >= n_cols_) throw DimensionError("select: column out of range");
    col_map[cols[k]] = k;
  }
  TripletList t;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    if (i >= n_rows_) throw DimensionError("select: row out of range");
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      if (col_map[col_indices_[k]] != none) t.push_back({r, col_map[col_indices_[k]], values_[k]});
  }
  return from_triplets(t, rows.size(), cols.size());
}

void SparseMatrix::append_triplets(TripletList& out, std::size_t row_shift, std::size_t col_shift,
                                   double scale) const {
  for (std::size_t i = 0; i < n_rows_; ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      out.push_back({i + row_shift, col_indices_[k] + col_shift, scale * values_[k]});
}

Vector matvec(const SparseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) {
    std::ostringstream os;
    os << "matvec: vector of length " << x.size() << " for " << a.rows() << "x" << a.cols();
    throw DimensionError(os.str());
  }
  Vector y(a.rows(), 0.0);
  const auto& off = a.row_offsets();
  const auto& col = a.col_indices();
  const auto& val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct SparseLu::Impl {
  SparseMatrix a;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

SparseLu::SparseLu(const SparseMatrix& a) : impl_(std::make_unique<Impl>()), n_(a.rows()) {
  if (a.rows() != a.cols()) throw DimensionError("SparseLu: matrix is not square");
  impl_->a = a;

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(a.nnz());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k)
      t.emplace_back(static_cast<int>(i), static_cast<int>(a.col_indices()[k]), a.values()[k]);
  Eigen::SparseMatrix<double> e(static_cast<int>(n_), static_cast<int>(n_));
  e.setFromTriplets(t.begin(), t.end());
  e.makeCompressed();

  impl_->lu.analyzePattern(e);
  impl_->lu.factorize(e);
  if (impl_->lu.info() != Eigen::Success)
    throw SolverError("sparse LU factorization failed", impl_->lu.lastErrorMessage());
}

SparseLu::~SparseLu() = default;
SparseLu::SparseLu(SparseLu&&) noexcept = default;
SparseLu& SparseLu::operator=(SparseLu&&) noexcept = default;

Vector SparseLu::solve(std::span<const double> b) const {
  if (b.size() != n_) throw DimensionError("SparseLu::solve: right-hand side length mismatch");
  const int n = static_cast<int>(n_);
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);
  Eigen::VectorXd x = impl_->lu.solve(rhs);

  const double target = kLinearTolerance * std::max(1.0, rhs.norm());
  Vector out(x.data(), x.data() + n);
  double residual = 0.0;
  for (int sweep = 0;; ++sweep) {
    Vector ax = matvec(impl_->a, out);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = b[static_cast<std::size_t>(i)] - ax[static_cast<std::size_t>(i)];
    residual = r.norm();
    if (!std::isfinite(residual)) {
      throw SolverError("sparse LU produced a non-finite solution",
                        "matrix is numerically singular");
    }
    if (residual <= target || sweep == 3) break;
    Eigen::VectorXd dx = impl_->lu.solve(r);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] += dx[i];
  }
  // Refinement that cannot get within six orders of the target means the
  // pivots carry no information.
  if (residual > 1e6 * target) {
    std::ostringstream os;
    os << "residual " << residual << " after refinement (target " << target
       << "); matrix is numerically rank-deficient";
    throw SolverError("sparse LU solve failed", os.str());
  }
  return out;
}

Vector solve(const SparseMatrix& a, std::span<const double> b) { return SparseLu(a).solve(b); }

}  // namespace ivanov
