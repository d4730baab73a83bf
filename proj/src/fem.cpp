#include "ivanov/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <sstream>
#include <stdexcept>

namespace ivanov {

namespace {

using ElementMatrix = std::array<std::array<double, 3>, 3>;

// Signed area and barycentric gradients of a triangle.
struct ElementGeometry {
  double area;
  std::array<Point, 3> grad;
};

ElementGeometry geometry(const Mesh& mesh, const std::array<std::size_t, 3>& tri) {
  const Point& a = mesh.vertices()[tri[0]];
  const Point& b = mesh.vertices()[tri[1]];
  const Point& c = mesh.vertices()[tri[2]];
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  ElementGeometry g;
  g.area = 0.5 * det;
  g.grad[0] = {(b.y - c.y) / det, (c.x - b.x) / det};
  g.grad[1] = {(c.y - a.y) / det, (a.x - c.x) / det};
  g.grad[2] = {(a.y - b.y) / det, (b.x - a.x) / det};
  return g;
}

ElementMatrix local_stiffness(const ElementGeometry& g) {
  ElementMatrix k{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      k[i][j] = g.area * (g.grad[i].x * g.grad[j].x + g.grad[i].y * g.grad[j].y);
  return k;
}

// int c phi_i phi_j over one element, c given pointwise from barycentrics.
template <class Coefficient>
ElementMatrix local_weighted_mass(double area, Coefficient&& c) {
  ElementMatrix m{};
  const auto& rule = triangle_rule_degree6();
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    const auto& lam = rule.points[q];
    const double w = area * rule.weights[q] * c(lam);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m[i][j] += w * lam[i] * lam[j];
  }
  return m;
}

double p1_value(const std::array<double, 3>& lam, const std::array<double, 3>& nodal) {
  return lam[0] * nodal[0] + lam[1] * nodal[1] + lam[2] * nodal[2];
}

std::array<double, 3> gather(std::span<const double> field, const std::array<std::size_t, 3>& tri) {
  return {field[tri[0]], field[tri[1]], field[tri[2]]};
}

void check_field(const Mesh& mesh, std::size_t size, const char* who) {
  if (size != mesh.n_vertices()) {
    std::ostringstream os;
    os << who << ": field of length " << size << " on a mesh with " << mesh.n_vertices()
       << " vertices";
    throw DimensionError(os.str());
  }
}

template <class Coefficient>
SparseMatrix assemble_interior(const Mesh& mesh, Coefficient&& coefficient_on) {
  TripletList t;
  t.reserve(mesh.n_triangles() * 9);
  for (std::size_t e = 0; e < mesh.n_triangles(); ++e) {
    const auto& tri = mesh.triangles()[e];
    const auto g = geometry(mesh, tri);
    const auto k = local_stiffness(g);
    const auto m = coefficient_on(e, g.area);
    for (int i = 0; i < 3; ++i) {
      const std::size_t ri = mesh.interior_index(tri[i]);
      if (ri == Mesh::npos) continue;
      for (int j = 0; j < 3; ++j) {
        const std::size_t cj = mesh.interior_index(tri[j]);
        if (cj == Mesh::npos) continue;
        t.push_back({ri, cj, k[i][j] + m[i][j]});
      }
    }
  }
  return SparseMatrix::from_triplets(t, mesh.n_interior(), mesh.n_interior());
}

// Polygon vertex carrying the value of a linear function.
struct PolyVertex {
  double x, y, f;
};
using Polygon = std::vector<PolyVertex>;

// Keeps the part of a convex polygon where the affine quantity s(v) >= 0.
template <class Side>
Polygon clip(const Polygon& poly, Side&& side) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const PolyVertex& p = poly[k];
    const PolyVertex& q = poly[(k + 1) % n];
    const double sp = side(p);
    const double sq = side(q);
    if (sp >= 0.0) out.push_back(p);
    if ((sp >= 0.0) != (sq >= 0.0)) {
      const double t = sp / (sp - sq);
      out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y), p.f + t * (q.f - p.f)});
    }
  }
  return out;
}

// Exact integral of the linear function over a convex polygon.
double integrate(const Polygon& poly) {
  double s = 0.0;
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    const auto& a = poly[0];
    const auto& b = poly[k];
    const auto& c = poly[k + 1];
    const double area = 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    s += area * (a.f + b.f + c.f) / 3.0;
  }
  return s;
}

Polygon element_polygon(const Mesh& mesh, std::span<const double> field,
                        const std::array<std::size_t, 3>& tri) {
  Polygon p;
  for (auto v : tri) p.push_back({mesh.vertices()[v].x, mesh.vertices()[v].y, field[v]});
  return p;
}

}  // namespace

Mesh build_unit_square_mesh(std::size_t n_per_side) {
  if (n_per_side == 0) throw std::invalid_argument("build_unit_square_mesh: n_per_side must be >= 1");
  Mesh m;
  m.n_ = n_per_side;
  m.h_ = 1.0 / static_cast<double>(n_per_side);
  const std::size_t np = n_per_side + 1;
  m.vertices_.reserve(np * np);
  m.boundary_.reserve(np * np);
  m.interior_index_.reserve(np * np);
  for (std::size_t j = 0; j < np; ++j) {
    for (std::size_t i = 0; i < np; ++i) {
      m.vertices_.push_back({static_cast<double>(i) * m.h_, static_cast<double>(j) * m.h_});
      const bool boundary = i == 0 || j == 0 || i == n_per_side || j == n_per_side;
      m.boundary_.push_back(boundary ? 1 : 0);
      if (boundary) {
        m.interior_index_.push_back(Mesh::npos);
      } else {
        m.interior_index_.push_back(m.interior_vertices_.size());
        m.interior_vertices_.push_back(m.vertices_.size() - 1);
      }
    }
  }
  m.triangles_.reserve(2 * n_per_side * n_per_side);
  for (std::size_t j = 0; j < n_per_side; ++j) {
    for (std::size_t i = 0; i < n_per_side; ++i) {
      const std::size_t a = m.vertex(i, j), b = m.vertex(i + 1, j);
      const std::size_t c = m.vertex(i + 1, j + 1), d = m.vertex(i, j + 1);
      m.triangles_.push_back({a, b, c});
      m.triangles_.push_back({a, c, d});
    }
  }
  return m;
}

NodalField interpolate(const Mesh& mesh, const std::function<double(Point)>& f) {
  NodalField out(mesh.n_vertices());
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) out[v] = f(mesh.vertices()[v]);
  return out;
}

Vector restrict_to_interior(const Mesh& mesh, const NodalField& field) {
  check_field(mesh, field.size(), "restrict_to_interior");
  Vector out(mesh.n_interior());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = field[mesh.interior_vertices()[k]];
  return out;
}

NodalField extend_from_interior(const Mesh& mesh, std::span<const double> interior) {
  if (interior.size() != mesh.n_interior())
    throw DimensionError("extend_from_interior: vector length differs from interior dof count");
  NodalField out(mesh.n_vertices());
  for (std::size_t k = 0; k < interior.size(); ++k) out[mesh.interior_vertices()[k]] = interior[k];
  return out;
}

const QuadratureRule& triangle_rule_degree6() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 6;
    const double a1 = 0.249286745170910421291638553107;
    const double w1 = 0.116786275726379366030690538687;
    const double a2 = 0.063089014491502228340331602870;
    const double w2 = 0.050844906370206816920936809106;
    const double b1 = 0.053145049844816947353249671631;
    const double b2 = 0.310352451033784405416607733956;
    const double b3 = 0.636502499121398647230142594413;
    const double w3 = 0.082851075618373575193553456421;
    auto orbit3 = [&](double a, double w) {
      const double c = 1.0 - 2.0 * a;
      for (auto p : {std::array{c, a, a}, std::array{a, c, a}, std::array{a, a, c}}) {
        r.points.push_back(p);
        r.weights.push_back(w);
      }
    };
    orbit3(a1, w1);
    orbit3(a2, w2);
    for (auto p : {std::array{b1, b2, b3}, std::array{b1, b3, b2}, std::array{b2, b1, b3},
                   std::array{b2, b3, b1}, std::array{b3, b1, b2}, std::array{b3, b2, b1}}) {
      r.points.push_back(p);
      r.weights.push_back(w3);
    }
    return r;
  }();
  return rule;
}

SparseMatrix assemble_operator(const Mesh& mesh, const NodalField& c) {
  check_field(mesh, c.size(), "assemble_operator");
  return assemble_interior(mesh, [&](std::size_t e, double area) {
    const auto ce = gather(c.span(), mesh.triangles()[e]);
    return local_weighted_mass(area, [&](const std::array<double, 3>& lam) { return p1_value(lam, ce); });
  });
}

SparseMatrix assemble_linearized_operator(const Mesh& mesh, const NodalField& y, double kappa) {
  check_field(mesh, y.size(), "assemble_linearized_operator");
  return assemble_interior(mesh, [&](std::size_t e, double area) {
    const auto ye = gather(y.span(), mesh.triangles()[e]);
    return local_weighted_mass(area, [&](const std::array<double, 3>& lam) {
      const double v = p1_value(lam, ye);
      return 3.0 * kappa * v * v;
    });
  });
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  return assemble_interior(mesh, [](std::size_t, double) { return ElementMatrix{}; });
}

SparseMatrix assemble_mass(const Mesh& mesh) {
  TripletList t;
  t.reserve(mesh.n_triangles() * 9);
  for (const auto& tri : mesh.triangles()) {
    const double area = geometry(mesh, tri).area;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.push_back({tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0)});
  }
  return SparseMatrix::from_triplets(t, mesh.n_vertices(), mesh.n_vertices());
}

Vector nonlinear_term(const Mesh& mesh, const NodalField& y, double kappa) {
  check_field(mesh, y.size(), "nonlinear_term");
  Vector out(mesh.n_interior(), 0.0);
  if (kappa == 0.0) return out;
  const auto& rule = triangle_rule_degree6();
  for (const auto& tri : mesh.triangles()) {
    const double area = geometry(mesh, tri).area;
    const auto ye = gather(y.span(), tri);
    std::array<double, 3> local{};
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& lam = rule.points[q];
      const double v = p1_value(lam, ye);
      const double w = area * rule.weights[q] * kappa * v * v * v;
      for (int i = 0; i < 3; ++i) local[i] += w * lam[i];
    }
    for (int i = 0; i < 3; ++i) {
      const std::size_t r = mesh.interior_index(tri[i]);
      if (r != Mesh::npos) out[r] += local[i];
    }
  }
  return out;
}

Vector assemble_load(const Mesh& mesh, const std::function<double(Point)>& f) {
  Vector out(mesh.n_interior(), 0.0);
  const auto& rule = triangle_rule_degree6();
  for (const auto& tri : mesh.triangles()) {
    const double area = geometry(mesh, tri).area;
    const Point& a = mesh.vertices()[tri[0]];
    const Point& b = mesh.vertices()[tri[1]];
    const Point& c = mesh.vertices()[tri[2]];
    std::array<double, 3> local{};
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& lam = rule.points[q];
      const Point x{lam[0] * a.x + lam[1] * b.x + lam[2] * c.x, lam[0] * a.y + lam[1] * b.y + lam[2] * c.y};
      const double w = area * rule.weights[q] * f(x);
      for (int i = 0; i < 3; ++i) local[i] += w * lam[i];
    }
    for (int i = 0; i < 3; ++i) {
      const std::size_t r = mesh.interior_index(tri[i]);
      if (r != Mesh::npos) out[r] += local[i];
    }
  }
  return out;
}

double compute_norm(const Mesh& mesh, std::span<const double> values, NormKind kind) {
  switch (kind) {
    case NormKind::L2: {
      check_field(mesh, values.size(), "compute_norm(L2)");
      const auto m = assemble_mass(mesh);
      return std::sqrt(std::max(0.0, dot(values, matvec(m, values))));
    }
    case NormKind::L1:
      check_field(mesh, values.size(), "compute_norm(L1)");
      return integrate_abs(mesh, values);
    case NormKind::Linf: {
      check_field(mesh, values.size(), "compute_norm(Linf)");
      double m = 0.0;
      for (double v : values) m = std::max(m, std::abs(v));
      return m;
    }
    case NormKind::Hminus1: {
      if (values.size() != mesh.n_interior())
        throw DimensionError("compute_norm(Hminus1): expects an interior residual vector");
      if (values.empty()) return 0.0;
      const auto z = solve(assemble_stiffness(mesh), values);
      return std::sqrt(std::max(0.0, dot(values, z)));
    }
  }
  throw std::logic_error("compute_norm: unknown kind");
}

double integrate_over_box(const Mesh& mesh, std::span<const double> field, double x0, double x1,
                          double y0, double y1) {
  check_field(mesh, field.size(), "integrate_over_box");
  double s = 0.0;
  for (const auto& tri : mesh.triangles()) {
    auto poly = element_polygon(mesh, field, tri);
    poly = clip(poly, [&](const PolyVertex& v) { return v.x - x0; });
    poly = clip(poly, [&](const PolyVertex& v) { return x1 - v.x; });
    poly = clip(poly, [&](const PolyVertex& v) { return v.y - y0; });
    poly = clip(poly, [&](const PolyVertex& v) { return y1 - v.y; });
    if (poly.size() >= 3) s += integrate(poly);
  }
  return s;
}

double integrate_abs(const Mesh& mesh, std::span<const double> field) {
  check_field(mesh, field.size(), "integrate_abs");
  double s = 0.0;
  for (const auto& tri : mesh.triangles()) {
    const auto poly = element_polygon(mesh, field, tri);
    const auto pos = clip(poly, [](const PolyVertex& v) { return v.f; });
    const auto neg = clip(poly, [](const PolyVertex& v) { return -v.f; });
    if (pos.size() >= 3) s += integrate(pos);
    if (neg.size() >= 3) s -= integrate(neg);
  }
  return s;
}

NodalField transfer(const Mesh& fine, const Mesh& coarse, const NodalField& field,
                    TransferMode mode) {
  check_field(fine, field.size(), "transfer");
  const std::size_t nf = fine.n_per_side(), nc = coarse.n_per_side();
  if (nf % nc != 0) {
    std::ostringstream os;
    os << "transfer: fine grid N=" << nf << " is not a multiple of coarse N=" << nc;
    throw std::invalid_argument(os.str());
  }
  const std::size_t ratio = nf / nc;

  if (mode == TransferMode::interpolate) {
    NodalField out(coarse.n_vertices());
    for (std::size_t j = 0; j <= nc; ++j)
      for (std::size_t i = 0; i <= nc; ++i)
        out[coarse.vertex(i, j)] = field[fine.vertex(i * ratio, j * ratio)];
    return out;
  }

  // b_i = int field phi_i^coarse, exact on each fine element: both factors
  // are linear there because the fine triangles nest in the coarse ones.
  Vector b(coarse.n_vertices(), 0.0);
  for (const auto& tri : fine.triangles()) {
    const auto g = geometry(fine, tri);
    const Point& p0 = fine.vertices()[tri[0]];
    const Point& p1 = fine.vertices()[tri[1]];
    const Point& p2 = fine.vertices()[tri[2]];
    const double cx = (p0.x + p1.x + p2.x) / 3.0, cy = (p0.y + p1.y + p2.y) / 3.0;
    const auto ci = std::min(nc - 1, static_cast<std::size_t>(cx * static_cast<double>(nc)));
    const auto cj = std::min(nc - 1, static_cast<std::size_t>(cy * static_cast<double>(nc)));
    const double sx = cx * static_cast<double>(nc) - static_cast<double>(ci);
    const double sy = cy * static_cast<double>(nc) - static_cast<double>(cj);
    const std::array<std::size_t, 3> ctri =
        sy <= sx ? std::array{coarse.vertex(ci, cj), coarse.vertex(ci + 1, cj), coarse.vertex(ci + 1, cj + 1)}
                 : std::array{coarse.vertex(ci, cj), coarse.vertex(ci + 1, cj + 1), coarse.vertex(ci, cj + 1)};
    const auto cg = geometry(coarse, ctri);
    const Point& c0 = coarse.vertices()[ctri[0]];

    // Coarse barycentrics at the fine vertices: phi^c_a(p_k).
    std::array<std::array<double, 3>, 3> phi{};
    for (int k = 0; k < 3; ++k) {
      const Point& p = fine.vertices()[tri[k]];
      for (int a = 1; a < 3; ++a)
        phi[a][k] = cg.grad[a].x * (p.x - c0.x) + cg.grad[a].y * (p.y - c0.y);
      phi[0][k] = 1.0 - phi[1][k] - phi[2][k];
    }
    const auto fe = gather(field.span(), tri);
    for (int a = 0; a < 3; ++a) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) s += (k == l ? 2.0 : 1.0) * fe[k] * phi[a][l];
      b[ctri[a]] += g.area / 12.0 * s;
    }
  }
  return NodalField(solve(assemble_mass(coarse), b));
}

void write_field(std::ostream& os, const Mesh& mesh, const NodalField& field) {
  check_field(mesh, field.size(), "write_field");
  os << "x,y,value\n";
  char buf[96];
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
    const Point& p = mesh.vertices()[v];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x, p.y, field[v]);
    os << buf;
  }
}

NodalField read_field(std::istream& is, const Mesh& mesh) {
  std::string line;
  if (!std::getline(is, line) || line != "x,y,value")
    throw std::runtime_error("read_field: missing 'x,y,value' header");
  NodalField out(mesh.n_vertices());
  const double tol = 1e-12;
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
    if (!std::getline(is, line)) throw std::runtime_error("read_field: too few rows");
    double x = 0.0, y = 0.0, value = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &value) != 3)
      throw std::runtime_error("read_field: malformed row '" + line + "'");
    const Point& p = mesh.vertices()[v];
    if (std::abs(x - p.x) > tol || std::abs(y - p.y) > tol)
      throw std::runtime_error("read_field: coordinates do not match the mesh at row " + std::to_string(v));
    out[v] = value;
  }
  return out;
}

namespace {
SparseLu factor_or_empty(const SparseMatrix& k) {
  return SparseLu(k.rows() == 0 ? SparseMatrix::identity(1) : k);
}
}  // namespace

FemSpace::FemSpace(Mesh mesh)
    : mesh_(std::move(mesh)),
      stiffness_(assemble_stiffness(mesh_)),
      mass_(assemble_mass(mesh_)),
      mass_rows_(mass_.select(mesh_.interior_vertices(), [&] {
        std::vector<std::size_t> all(mesh_.n_vertices());
        for (std::size_t v = 0; v < all.size(); ++v) all[v] = v;
        return all;
      }())),
      interior_mass_(mass_.select(mesh_.interior_vertices(), mesh_.interior_vertices())),
      stiffness_lu_(factor_or_empty(stiffness_)) {}

double FemSpace::l2_norm(std::span<const double> field) const {
  check_field(mesh_, field.size(), "FemSpace::l2_norm");
  return std::sqrt(std::max(0.0, dot(field, matvec(mass_, field))));
}

double FemSpace::hminus1_norm(std::span<const double> r) const {
  if (r.size() != mesh_.n_interior())
    throw DimensionError("FemSpace::hminus1_norm: expects an interior residual vector");
  if (r.empty()) return 0.0;
  return std::sqrt(std::max(0.0, dot(r, stiffness_lu_.solve(r))));
}

Vector FemSpace::load(std::span<const double> field) const { return matvec(mass_rows_, field); }

}  // namespace ivanov
