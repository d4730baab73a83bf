#pragma once

// P1 finite elements on a uniform triangulation of the unit square.

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "ivanov/sparse.hpp"

namespace ivanov {

struct Point {
  double x;
  double y;
};

/// Uniform triangulation of (0,1)^2 with N cells per side. Each cell is cut
/// along the diagonal from its lower-left to its upper-right corner.
/// Vertices are numbered row-major: index = i + j (N+1) for the vertex at
/// (i h, j h).
class Mesh {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t n_per_side() const noexcept { return n_; }
  double h() const noexcept { return h_; }

  std::size_t n_vertices() const noexcept { return vertices_.size(); }
  std::size_t n_triangles() const noexcept { return triangles_.size(); }
  std::size_t n_interior() const noexcept { return interior_vertices_.size(); }

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<std::array<std::size_t, 3>>& triangles() const noexcept { return triangles_; }
  bool on_boundary(std::size_t v) const { return boundary_[v] != 0; }
  /// Interior degree-of-freedom index of vertex v, or npos on the boundary.
  std::size_t interior_index(std::size_t v) const { return interior_index_[v]; }
  const std::vector<std::size_t>& interior_vertices() const noexcept { return interior_vertices_; }

  std::size_t vertex(std::size_t i, std::size_t j) const noexcept { return i + j * (n_ + 1); }
  double triangle_area() const noexcept { return 0.5 * h_ * h_; }

 private:
  friend Mesh build_unit_square_mesh(std::size_t n_per_side);

  std::size_t n_ = 0;
  double h_ = 0.0;
  std::vector<Point> vertices_;
  std::vector<std::array<std::size_t, 3>> triangles_;
  std::vector<char> boundary_;
  std::vector<std::size_t> interior_index_;
  std::vector<std::size_t> interior_vertices_;
};

/// Throws std::invalid_argument for n_per_side == 0.
Mesh build_unit_square_mesh(std::size_t n_per_side);

/// Coefficients of a P1 function in the nodal basis, one per mesh vertex
/// (boundary vertices included).
class NodalField {
 public:
  NodalField() = default;
  explicit NodalField(std::size_t n, double value = 0.0) : values_(n, value) {}
  explicit NodalField(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  friend bool operator==(const NodalField&, const NodalField&) = default;

 private:
  std::vector<double> values_;
};

NodalField interpolate(const Mesh& mesh, const std::function<double(Point)>& f);
Vector restrict_to_interior(const Mesh& mesh, const NodalField& field);
NodalField extend_from_interior(const Mesh& mesh, std::span<const double> interior);

/// Symmetric quadrature on the reference triangle in barycentric
/// coordinates. Weights sum to one (multiply by the element area).
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;
};

/// 12-point rule exact for polynomials of degree <= 6.
const QuadratureRule& triangle_rule_degree6();

/// Interior x interior matrix of  int grad(phi_i).grad(phi_j) + c phi_i phi_j,
/// c the P1 interpolant of the given nodal field (c >= 0).
SparseMatrix assemble_operator(const Mesh& mesh, const NodalField& c);

/// Interior x interior matrix of  int grad(phi_i).grad(phi_j) + 3 kappa y^2 phi_i phi_j
/// with y the P1 field itself (exact Jacobian of the cubic load).
SparseMatrix assemble_linearized_operator(const Mesh& mesh, const NodalField& y, double kappa);

/// Stiffness restricted to interior degrees of freedom (c = 0).
SparseMatrix assemble_stiffness(const Mesh& mesh);

/// Consistent mass matrix on the full vertex set.
SparseMatrix assemble_mass(const Mesh& mesh);

/// n_i = int kappa y^3 phi_i over the interior basis functions.
Vector nonlinear_term(const Mesh& mesh, const NodalField& y, double kappa);

/// b_i = int f phi_i over the interior basis functions (degree-6 quadrature).
Vector assemble_load(const Mesh& mesh, const std::function<double(Point)>& f);

enum class NormKind { L2, L1, Linf, Hminus1 };

/// L2, L1 and Linf take a nodal field (vertex count); Hminus1 takes an
/// interior residual vector and uses the discrete Riesz map through the
/// interior stiffness matrix.
double compute_norm(const Mesh& mesh, std::span<const double> values, NormKind kind);

/// Exact integral of a P1 field over the axis-aligned box [x0,x1) x [y0,y1).
double integrate_over_box(const Mesh& mesh, std::span<const double> field, double x0, double x1,
                          double y0, double y1);

/// Exact integral of |u_h| for a P1 field u_h.
double integrate_abs(const Mesh& mesh, std::span<const double> field);

enum class TransferMode { interpolate, l2_project };

/// Moves a field from `fine` to `coarse`; fine.n_per_side() must be a
/// multiple of coarse.n_per_side(). l2_project integrates on the fine mesh.
NodalField transfer(const Mesh& fine, const Mesh& coarse, const NodalField& field,
                    TransferMode mode);

/// Writes "x,y,value" rows in vertex order with 17 significant digits.
void write_field(std::ostream& os, const Mesh& mesh, const NodalField& field);

/// Reads a table written by write_field. Throws std::runtime_error when the
/// header, row count or coordinates do not match the mesh.
NodalField read_field(std::istream& is, const Mesh& mesh);

/// Mesh plus the matrices every solver on it needs. Builds the stiffness
/// factorization once so H^{-1} norms are cheap.
class FemSpace {
 public:
  explicit FemSpace(Mesh mesh);

  const Mesh& mesh() const noexcept { return mesh_; }
  /// Interior stiffness (c = 0).
  const SparseMatrix& stiffness() const noexcept { return stiffness_; }
  /// Full-vertex mass matrix.
  const SparseMatrix& mass() const noexcept { return mass_; }
  /// Interior rows of the full mass matrix (interior x all vertices).
  const SparseMatrix& mass_rows() const noexcept { return mass_rows_; }
  /// Interior x interior mass matrix.
  const SparseMatrix& interior_mass() const noexcept { return interior_mass_; }

  double l2_norm(std::span<const double> field) const;
  double hminus1_norm(std::span<const double> interior_residual) const;
  /// Interior rows of M f for a nodal field f.
  Vector load(std::span<const double> field) const;

 private:
  Mesh mesh_;
  SparseMatrix stiffness_;
  SparseMatrix mass_;
  SparseMatrix mass_rows_;
  SparseMatrix interior_mass_;
  SparseLu stiffness_lu_;
};

}  // namespace ivanov
