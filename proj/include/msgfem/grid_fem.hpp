#ifndef MSGFEM_GRID_FEM_HPP
#define MSGFEM_GRID_FEM_HPP

// Uniform Cartesian Q1 mesh on the unit square, closed-form element
// stiffness, Gauss-quadrature loads, boundary mass and energy norms.

#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "msgfem/coefficient_field.hpp"

namespace msgfem {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
/// Symmetric sparse matrix. Compressed storage of a symmetric matrix is the
/// same whether read by rows or by columns.
using SparseMatrix = Eigen::SparseMatrix<double>;
using ScalarFunction = std::function<double(double, double)>;

enum class BoundaryTag : unsigned char { Interior, DirichletLeftRight, NeumannTopBottom };

/// Rectangle of whole cells [x0,x1) x [y0,y1). Its nodes are [x0,x1] x [y0,y1],
/// numbered row-major inside the box.
struct CellBox {
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;

  int cells_x() const { return x1 - x0; }
  int cells_y() const { return y1 - y0; }
  int cell_count() const { return cells_x() * cells_y(); }
  int nodes_x() const { return cells_x() + 1; }
  int nodes_y() const { return cells_y() + 1; }
  int node_count() const { return nodes_x() * nodes_y(); }

  bool contains_cell(int ex, int ey) const { return ex >= x0 && ex < x1 && ey >= y0 && ey < y1; }
  bool contains_box(const CellBox& o) const {
    return o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1;
  }
  bool contains_node(int ix, int iy) const { return ix >= x0 && ix <= x1 && iy >= y0 && iy <= y1; }
  int local_node(int ix, int iy) const { return (iy - y0) * nodes_x() + (ix - x0); }
  int node_ix(int local) const { return x0 + local % nodes_x(); }
  int node_iy(int local) const { return y0 + local / nodes_x(); }

  CellBox dilated(int layers, const CellBox& clip) const {
    return {std::max(clip.x0, x0 - layers), std::min(clip.x1, x1 + layers),
            std::max(clip.y0, y0 - layers), std::min(clip.y1, y1 + layers)};
  }

  friend bool operator==(const CellBox&, const CellBox&) = default;
};

/// Mesh edge between two adjacent nodes.
struct Edge {
  int a = 0;
  int b = 0;
};

class GridMesh {
 public:
  GridMesh(int n_cells_x, int n_cells_y) : nx_(n_cells_x), ny_(n_cells_y) {
    if (nx_ < 2 || ny_ < 2)
      throw std::invalid_argument("GridMesh: need at least 2 cells per axis, got " +
                                  std::to_string(nx_) + "x" + std::to_string(ny_));
    hx_ = 1.0 / nx_;
    hy_ = 1.0 / ny_;
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  /// Cell side along x, the mesh size used throughout.
  double h() const { return hx_; }

  int node_count() const { return (nx_ + 1) * (ny_ + 1); }
  int element_count() const { return nx_ * ny_; }
  CellBox full_box() const { return {0, nx_, 0, ny_}; }

  int node(int ix, int iy) const { return iy * (nx_ + 1) + ix; }
  int node_ix(int k) const { return k % (nx_ + 1); }
  int node_iy(int k) const { return k / (nx_ + 1); }
  double node_x(int k) const { return node_ix(k) * hx_; }
  double node_y(int k) const { return node_iy(k) * hy_; }

  int element(int ex, int ey) const { return ey * nx_ + ex; }
  /// Corner nodes counterclockwise from the lower-left corner.
  std::array<int, 4> element_nodes(int e) const {
    const int ex = e % nx_, ey = e / nx_;
    const int n0 = node(ex, ey);
    return {n0, n0 + 1, n0 + nx_ + 2, n0 + nx_ + 1};
  }
  double element_center_x(int e) const { return (e % nx_ + 0.5) * hx_; }
  double element_center_y(int e) const { return (e / nx_ + 0.5) * hy_; }

  BoundaryTag boundary_tag(int k) const {
    const int ix = node_ix(k), iy = node_iy(k);
    if (ix == 0 || ix == nx_) return BoundaryTag::DirichletLeftRight;
    if (iy == 0 || iy == ny_) return BoundaryTag::NeumannTopBottom;
    return BoundaryTag::Interior;
  }
  bool is_dirichlet(int k) const { return boundary_tag(k) == BoundaryTag::DirichletLeftRight; }

  bool is_edge(const Edge& e) const {
    if (e.a < 0 || e.b < 0 || e.a >= node_count() || e.b >= node_count()) return false;
    const int dx = std::abs(node_ix(e.a) - node_ix(e.b));
    const int dy = std::abs(node_iy(e.a) - node_iy(e.b));
    return dx + dy == 1;
  }
  double edge_length(const Edge& e) const {
    return node_iy(e.a) == node_iy(e.b) ? hx_ : hy_;
  }

  /// Edges on x2 = 0 and x2 = 1.
  std::vector<Edge> neumann_edges() const { return neumann_edges(full_box()); }
  std::vector<Edge> neumann_edges(const CellBox& box) const {
    std::vector<Edge> out;
    for (int iy : {0, ny_}) {
      if (iy != box.y0 && iy != box.y1) continue;
      for (int ex = box.x0; ex < box.x1; ++ex) out.push_back({node(ex, iy), node(ex + 1, iy)});
    }
    return out;
  }
  /// Every edge of the outer boundary of the unit square.
  std::vector<Edge> boundary_edges() const {
    std::vector<Edge> out = neumann_edges();
    for (int ix : {0, nx_})
      for (int iy = 0; iy < ny_; ++iy) out.push_back({node(ix, iy), node(ix, iy + 1)});
    return out;
  }
  /// Edges of the box outline that are not on the boundary of the unit square.
  std::vector<Edge> interface_edges(const CellBox& box) const {
    std::vector<Edge> out;
    if (box.y0 > 0)
      for (int ex = box.x0; ex < box.x1; ++ex) out.push_back({node(ex, box.y0), node(ex + 1, box.y0)});
    if (box.y1 < ny_)
      for (int ex = box.x0; ex < box.x1; ++ex) out.push_back({node(ex, box.y1), node(ex + 1, box.y1)});
    if (box.x0 > 0)
      for (int ey = box.y0; ey < box.y1; ++ey) out.push_back({node(box.x0, ey), node(box.x0, ey + 1)});
    if (box.x1 < nx_)
      for (int ey = box.y0; ey < box.y1; ++ey) out.push_back({node(box.x1, ey), node(box.x1, ey + 1)});
    return out;
  }

  /// Global node index of a box-local node.
  int global_node(const CellBox& box, int local) const { return node(box.node_ix(local), box.node_iy(local)); }

 private:
  int nx_, ny_;
  double hx_ = 0, hy_ = 0;
};

inline GridMesh build_mesh(int n_cells_x, int n_cells_y) { return GridMesh(n_cells_x, n_cells_y); }

/// Exact Q1 stiffness of an hx x hy rectangle with constant coefficient,
/// corner ordering as GridMesh::element_nodes.
inline std::array<std::array<double, 4>, 4> element_stiffness(double hx, double hy, double coeff) {
  static constexpr int px[4] = {0, 1, 1, 0};
  static constexpr int py[4] = {0, 0, 1, 1};
  auto stiff1 = [](int p, int q) { return p == q ? 1.0 : -1.0; };
  auto mass1 = [](int p, int q) { return (p == q ? 2.0 : 1.0) / 6.0; };
  std::array<std::array<double, 4>, 4> k{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      k[i][j] = coeff * ((hy / hx) * stiff1(px[i], px[j]) * mass1(py[i], py[j]) +
                         (hx / hy) * mass1(px[i], px[j]) * stiff1(py[i], py[j]));
  return k;
}

namespace detail {

inline void check_coefficient(const GridMesh& mesh, const CoefficientField& coeff) {
  if (coeff.nx() != mesh.nx() || coeff.ny() != mesh.ny() ||
      static_cast<int>(coeff.values().size()) != mesh.element_count())
    throw std::invalid_argument("coefficient field does not match the mesh");
  for (double a : coeff.values())
    if (!(a > 0.0)) throw std::invalid_argument("coefficient must be positive on every element");
}

}  // namespace detail

/// Stiffness over the cells of `box`, indexed by box-local nodes.
inline SparseMatrix assemble_stiffness(const GridMesh& mesh, const CoefficientField& coeff, const CellBox& box) {
  detail::check_coefficient(mesh, coeff);
  const auto unit = element_stiffness(mesh.hx(), mesh.hy(), 1.0);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(box.cell_count()) * 16);
  for (int ey = box.y0; ey < box.y1; ++ey) {
    for (int ex = box.x0; ex < box.x1; ++ex) {
      const double a = coeff.values()[mesh.element(ex, ey)];
      const int n0 = box.local_node(ex, ey);
      const int loc[4] = {n0, n0 + 1, n0 + box.nodes_x() + 1, n0 + box.nodes_x()};
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) trip.emplace_back(loc[i], loc[j], a * unit[i][j]);
    }
  }
  SparseMatrix k(box.node_count(), box.node_count());
  k.setFromTriplets(trip.begin(), trip.end());
  k.prune(0.0);
  return k;
}

inline SparseMatrix assemble_stiffness(const GridMesh& mesh, const CoefficientField& coeff) {
  return assemble_stiffness(mesh, coeff, mesh.full_box());
}

/// F_k = int_box f phi_k + int_{box cap dOmega_N} g phi_k, 2x2 Gauss per cell and
/// 2-point Gauss per boundary edge. Indexed by box-local nodes.
inline Vector assemble_load(const GridMesh& mesh, const ScalarFunction& f, const ScalarFunction& g,
                            const CellBox& box) {
  const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  Vector load = Vector::Zero(box.node_count());
  const double hx = mesh.hx(), hy = mesh.hy();
  if (f) {
    for (int ey = box.y0; ey < box.y1; ++ey) {
      for (int ex = box.x0; ex < box.x1; ++ex) {
        const int n0 = box.local_node(ex, ey);
        const int loc[4] = {n0, n0 + 1, n0 + box.nodes_x() + 1, n0 + box.nodes_x()};
        for (double s : gp) {
          for (double t : gp) {
            const double w = 0.25 * hx * hy * f((ex + s) * hx, (ey + t) * hy);
            const double shape[4] = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
            for (int i = 0; i < 4; ++i) load[loc[i]] += w * shape[i];
          }
        }
      }
    }
  }
  if (g) {
    for (const Edge& e : mesh.neumann_edges(box)) {
      const double xa = mesh.node_x(e.a), ya = mesh.node_y(e.a);
      const double xb = mesh.node_x(e.b), yb = mesh.node_y(e.b);
      const double len = mesh.edge_length(e);
      const int la = box.local_node(mesh.node_ix(e.a), mesh.node_iy(e.a));
      const int lb = box.local_node(mesh.node_ix(e.b), mesh.node_iy(e.b));
      for (double s : gp) {
        const double w = 0.5 * len * g(xa + s * (xb - xa), ya + s * (yb - ya));
        load[la] += w * (1 - s);
        load[lb] += w * s;
      }
    }
  }
  return load;
}

inline Vector assemble_load(const GridMesh& mesh, const ScalarFunction& f, const ScalarFunction& g) {
  return assemble_load(mesh, f, g, mesh.full_box());
}

/// Boundary L2 mass on a set of mesh edges, indexed by global nodes.
inline SparseMatrix assemble_boundary_mass(const GridMesh& mesh, const std::vector<Edge>& edges) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(edges.size() * 4);
  for (const Edge& e : edges) {
    if (!mesh.is_edge(e))
      throw std::invalid_argument("boundary mass: (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                                  ") is not a mesh edge");
    const double len = mesh.edge_length(e);
    trip.emplace_back(e.a, e.a, len / 3.0);
    trip.emplace_back(e.b, e.b, len / 3.0);
    trip.emplace_back(e.a, e.b, len / 6.0);
    trip.emplace_back(e.b, e.a, len / 6.0);
  }
  SparseMatrix m(mesh.node_count(), mesh.node_count());
  m.setFromTriplets(trip.begin(), trip.end());
  m.prune(0.0);
  return m;
}

inline double max_abs(const SparseMatrix& k) {
  double v = 0.0;
  for (int c = 0; c < k.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(k, c); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

/// sqrt(u^T K u). Round-off negatives down to -1e-12 * max|K| * |u|^2 are
/// clamped to zero; anything below signals an indefinite K.
inline double energy_norm(const SparseMatrix& k, const Vector& u) {
  if (k.rows() != u.size() || k.cols() != u.size())
    throw std::invalid_argument("energy_norm: dimension mismatch");
  const double e = u.dot(k * u);
  if (e >= 0.0) return std::sqrt(e);
  const double scale = max_abs(k) * u.squaredNorm();
  if (e >= -1e-12 * scale) return 0.0;
  throw std::domain_error("energy_norm: u^T K u = " + std::to_string(e) + " is negative");
}

/// "x,y,value" rows for a nodal vector.
inline void write_nodal_csv(std::ostream& os, const GridMesh& mesh, const Vector& u) {
  if (u.size() != mesh.node_count()) throw std::invalid_argument("write_nodal_csv: size mismatch");
  os << "x,y,value\n";
  os.precision(17);
  for (int k = 0; k < mesh.node_count(); ++k) os << mesh.node_x(k) << ',' << mesh.node_y(k) << ',' << u[k] << '\n';
}

}  // namespace msgfem

#endif  // MSGFEM_GRID_FEM_HPP
