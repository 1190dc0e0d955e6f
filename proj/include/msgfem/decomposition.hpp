#ifndef MSGFEM_DECOMPOSITION_HPP
#define MSGFEM_DECOMPOSITION_HPP

// Overlapping box decomposition of the grid, oversampling boxes, internal
// dof sets, multiplicities and the discrete partition-of-unity operators.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "msgfem/grid_fem.hpp"

namespace msgfem {

/// A box of cells together with the classification of its nodes.
/// All node lists hold box-local indices in increasing order.
struct Subdomain {
  CellBox box;
  /// Nodes whose hat function is supported in the closed box. Includes nodes
  /// on the Dirichlet boundary; trial spaces drop those separately.
  std::vector<int> internal;
  /// Outline nodes whose hat function leaks outside the box (on the outline
  /// intersected with the open domain).
  std::vector<int> interface;
  /// Nodes on x1 = 0 or x1 = 1.
  std::vector<int> dirichlet;
  /// Outline nodes on x2 = 0 or x2 = 1 that are internal and not Dirichlet.
  std::vector<int> neumann;
  double width = 0;
  double height = 0;

  bool touches_dirichlet() const { return !dirichlet.empty(); }
  bool touches_boundary(const GridMesh& mesh) const {
    return box.x0 == 0 || box.y0 == 0 || box.x1 == mesh.nx() || box.y1 == mesh.ny();
  }
};

inline Subdomain make_subdomain(const GridMesh& mesh, const CellBox& box) {
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > mesh.nx() || box.y1 > mesh.ny() || box.x0 >= box.x1 || box.y0 >= box.y1)
    throw std::invalid_argument("make_subdomain: box outside the mesh or empty");
  Subdomain s;
  s.box = box;
  s.width = box.cells_x() * mesh.hx();
  s.height = box.cells_y() * mesh.hy();
  for (int l = 0; l < box.node_count(); ++l) {
    const int ix = box.node_ix(l), iy = box.node_iy(l);
    const bool inside_x = (ix > box.x0 || box.x0 == 0) && (ix < box.x1 || box.x1 == mesh.nx());
    const bool inside_y = (iy > box.y0 || box.y0 == 0) && (iy < box.y1 || box.y1 == mesh.ny());
    const bool is_internal = inside_x && inside_y;
    const bool on_outline = ix == box.x0 || ix == box.x1 || iy == box.y0 || iy == box.y1;
    const bool dir = ix == 0 || ix == mesh.nx();
    if (is_internal)
      s.internal.push_back(l);
    else
      s.interface.push_back(l);
    if (dir) s.dirichlet.push_back(l);
    if (on_outline && is_internal && !dir && (iy == 0 || iy == mesh.ny())) s.neumann.push_back(l);
  }
  return s;
}

struct Decomposition {
  int m = 0;
  int overlap_layers = 0;
  int oversample_layers = 0;
  int block_x = 0;
  int block_y = 0;
  std::vector<Subdomain> omega;
  std::vector<Subdomain> omega_star;
  /// Per global node: number of subdomains having it as an internal dof.
  std::vector<int> mu;
  int kappa = 0;
  int kappa_star = 0;
  /// Side lengths of a full-size (interior) subdomain and its oversampling box.
  double H = 0;
  double H_star = 0;

  int size() const { return static_cast<int>(omega.size()); }
  double rho() const { return H / H_star; }
};

namespace detail {

inline int max_cell_overlap(const GridMesh& mesh, const std::vector<Subdomain>& subs) {
  std::vector<int> count(mesh.element_count(), 0);
  for (const auto& s : subs)
    for (int ey = s.box.y0; ey < s.box.y1; ++ey)
      for (int ex = s.box.x0; ex < s.box.x1; ++ex) ++count[mesh.element(ex, ey)];
  if (std::find(count.begin(), count.end(), 0) != count.end())
    throw std::logic_error("decomposition does not cover every element");
  return *std::max_element(count.begin(), count.end());
}

}  // namespace detail

/// m x m blocks of ceil(n/m) cells (last block smaller), each grown by
/// overlap_layers into omega_i and by a further oversample_layers into
/// omega_i*, always clipped to the unit square.
inline Decomposition build_decomposition(const GridMesh& mesh, int m, int overlap_layers, int oversample_layers) {
  if (m < 1) throw std::invalid_argument("build_decomposition: m must be >= 1");
  if (m > mesh.nx() || m > mesh.ny()) throw std::invalid_argument("build_decomposition: m exceeds the cell count");
  if (overlap_layers < 1) throw std::invalid_argument("build_decomposition: overlap_layers must be >= 1");
  if (oversample_layers < 0) throw std::invalid_argument("build_decomposition: oversample_layers must be >= 0");
  Decomposition d;
  d.m = m;
  d.overlap_layers = overlap_layers;
  d.oversample_layers = oversample_layers;
  d.block_x = (mesh.nx() + m - 1) / m;
  d.block_y = (mesh.ny() + m - 1) / m;
  if ((m - 1) * d.block_x >= mesh.nx() || (m - 1) * d.block_y >= mesh.ny())
    throw std::invalid_argument("build_decomposition: m=" + std::to_string(m) + " leaves an empty block");

  const CellBox all = mesh.full_box();
  for (int by = 0; by < m; ++by) {
    for (int bx = 0; bx < m; ++bx) {
      const CellBox core{bx * d.block_x, std::min(mesh.nx(), (bx + 1) * d.block_x), by * d.block_y,
                         std::min(mesh.ny(), (by + 1) * d.block_y)};
      const CellBox w = core.dilated(overlap_layers, all);
      d.omega.push_back(make_subdomain(mesh, w));
      d.omega_star.push_back(make_subdomain(mesh, w.dilated(oversample_layers, all)));
    }
  }

  d.mu.assign(mesh.node_count(), 0);
  for (const auto& s : d.omega)
    for (int l : s.internal) ++d.mu[mesh.global_node(s.box, l)];
  d.kappa = detail::max_cell_overlap(mesh, d.omega);
  d.kappa_star = detail::max_cell_overlap(mesh, d.omega_star);
  d.H = (d.block_x + 2 * overlap_layers) * mesh.hx();
  d.H_star = d.H + 2 * oversample_layers * mesh.hx();
  return d;
}

/// Discrete partition-of-unity operator of one subdomain: diagonal weights
/// 1/mu_k on its internal dofs, zero on the rest of its nodes.
struct PUOperator {
  int j = 0;
  Vector weights;
};

inline PUOperator pu_operator(const GridMesh& mesh, const Decomposition& d, int j) {
  const Subdomain& s = d.omega.at(j);
  PUOperator pu{j, Vector::Zero(s.box.node_count())};
  for (int l : s.internal) pu.weights[l] = 1.0 / d.mu[mesh.global_node(s.box, l)];
  return pu;
}

inline Vector pu_apply(const PUOperator& pu, const Vector& v) {
  if (v.size() != pu.weights.size()) throw std::invalid_argument("pu_apply: dimension mismatch");
  return pu.weights.cwiseProduct(v);
}

/// Restriction of a global nodal vector to the nodes of a box.
inline Vector restrict_to(const GridMesh& mesh, const CellBox& box, const Vector& global) {
  if (global.size() != mesh.node_count()) throw std::invalid_argument("restrict_to: dimension mismatch");
  Vector out(box.node_count());
  for (int l = 0; l < box.node_count(); ++l) out[l] = global[mesh.global_node(box, l)];
  return out;
}

/// Restriction between nested boxes, inner inside outer.
template <typename Derived>
DenseMatrix restrict_box(const CellBox& outer, const CellBox& inner, const Eigen::MatrixBase<Derived>& v) {
  if (!outer.contains_box(inner) || v.rows() != outer.node_count())
    throw std::invalid_argument("restrict_box: boxes not nested or size mismatch");
  DenseMatrix out(inner.node_count(), v.cols());
  for (int l = 0; l < inner.node_count(); ++l)
    out.row(l) = v.row(outer.local_node(inner.node_ix(l), inner.node_iy(l)));
  return out;
}

/// R_j^T: extend a vector on the nodes of omega_j by zero. Entries on nodes
/// outside dof(omega_j) must already vanish.
inline Vector zero_extend(const GridMesh& mesh, const Decomposition& d, int j, const Vector& v) {
  const Subdomain& s = d.omega.at(j);
  if (v.size() != s.box.node_count()) throw std::invalid_argument("zero_extend: dimension mismatch");
  for (int l : s.interface)
    if (std::abs(v[l]) >= 1e-14)
      throw std::invalid_argument("zero_extend: vector is nonzero outside the internal dofs of subdomain " +
                                  std::to_string(j));
  Vector out = Vector::Zero(mesh.node_count());
  for (int l : s.internal) out[mesh.global_node(s.box, l)] = v[l];
  return out;
}

/// Debug dump: one row per omega_i and omega_i* with bounds and dof counts.
inline void write_decomposition_csv(std::ostream& os, const GridMesh& mesh, const Decomposition& d) {
  os << "index,kind,x_min,x_max,y_min,y_max,nodes,internal_dofs,interface_dofs\n";
  auto row = [&](int i, const char* kind, const Subdomain& s) {
    os << i << ',' << kind << ',' << s.box.x0 * mesh.hx() << ',' << s.box.x1 * mesh.hx() << ','
       << s.box.y0 * mesh.hy() << ',' << s.box.y1 * mesh.hy() << ',' << s.box.node_count() << ','
       << s.internal.size() << ',' << s.interface.size() << '\n';
  };
  for (int i = 0; i < d.size(); ++i) {
    row(i, "omega", d.omega[i]);
    row(i, "omega_star", d.omega_star[i]);
  }
}

}  // namespace msgfem

#endif  // MSGFEM_DECOMPOSITION_HPP
