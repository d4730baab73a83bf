#pragma once

// Compressed-row sparse matrices and a sparse direct solver.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ivanov {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

using TripletList = std::vector<Triplet>;

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a factorization breaks down. `diagnostic` carries the
/// backend's pivot message (e.g. the column of the failing pivot).
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::string diagnostic)
      : std::runtime_error(what + ": " + diagnostic), diagnostic_(std::move(diagnostic)) {}
  const std::string& diagnostic() const noexcept { return diagnostic_; }

 private:
  std::string diagnostic_;
};

/// Real sparse matrix in compressed-row storage. Column indices are strictly
/// increasing within each row and duplicates never appear.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Sums duplicate entries. Throws AssemblyError on out-of-range indices.
  static SparseMatrix from_triplets(std::span<const Triplet> triplets, std::size_t n_rows,
                                    std::size_t n_cols);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<std::size_t>& col_indices() const noexcept { return col_indices_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Entry (i, j), zero when not stored.
  double coeff(std::size_t i, std::size_t j) const;

  SparseMatrix transpose() const;

  /// Submatrix selecting the given rows and columns (in the given order).
  SparseMatrix select(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const;

  void append_triplets(TripletList& out, std::size_t row_shift, std::size_t col_shift,
                       double scale = 1.0) const;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

Vector matvec(const SparseMatrix& a, std::span<const double> x);

/// Factorized square matrix; solves reuse the factors.
class SparseLu {
 public:
  explicit SparseLu(const SparseMatrix& a);
  ~SparseLu();
  SparseLu(SparseLu&&) noexcept;
  SparseLu& operator=(SparseLu&&) noexcept;

  /// Solution refined until ||Ax - b|| <= kLinearTolerance * max(1, ||b||)
  /// or the refinement budget is spent.
  Vector solve(std::span<const double> b) const;

  std::size_t size() const noexcept { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t n_ = 0;
};

inline constexpr double kLinearTolerance = 1e-12;

Vector solve(const SparseMatrix& a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace ivanov
