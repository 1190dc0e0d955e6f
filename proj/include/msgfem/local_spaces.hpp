#ifndef MSGFEM_LOCAL_SPACES_HPP
#define MSGFEM_LOCAL_SPACES_HPP

// Per-subdomain construction on an oversampling box omega*:
//   - particular function  psi^r + psi^d  (source/Neumann data and the
//     discrete A-harmonic lift of the Dirichlet data),
//   - Steklov eigenbasis of the discrete A-harmonic space, obtained from the
//     Dirichlet-to-Neumann map on the interface dofs (Schur complement
//     against the interface boundary mass),
//   - the optimal local space: eigenvectors of
//       a_{omega*}(phi, v) = lambda a_{omega}(Xi(phi|omega), Xi(v|omega))
//     over the harmonic basis.
// Vectors live on the box-local nodes of omega* unless stated otherwise.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "msgfem/coefficients.hpp"
#include "msgfem/decomposition.hpp"
#include "msgfem/grid_fem.hpp"
#include "msgfem/linalg.hpp"

namespace msgfem {

namespace detail {

inline std::vector<int> set_minus(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// Clamp round-off negatives to zero; anything below -1e-10 (relative to the
/// largest magnitude, at least 1) is an error.
inline double clamp_eigenvalue(double v, double scale) {
  if (v >= 0.0) return v;
  if (v >= -1e-10 * std::max(1.0, scale)) return 0.0;
  throw SolverError("eigenvalue " + std::to_string(v) + " of a semidefinite pencil is negative");
}

inline bool& warnings_enabled() {
  static bool on = true;
  return on;
}

inline void warn(const std::string& msg) {
  if (warnings_enabled()) std::clog << "msgfem: warning: " << msg << '\n';
}

}  // namespace detail

/// Silences the library's warnings on std::clog.
inline void set_warnings(bool on) { detail::warnings_enabled() = on; }

/// The discrete problem on one box: stiffness over its cells, node classes,
/// factorization of the block on V_{h,0} and the Schur complement onto the
/// interface dofs that are not Dirichlet-eliminated.
class LocalProblem {
 public:
  LocalProblem(const GridMesh& mesh, const CoefficientField& coeff, const Subdomain& sub)
      : mesh_(&mesh),
        sub_(sub),
        k_(assemble_stiffness(mesh, coeff, sub.box)),
        interior_(detail::set_minus(sub.internal, sub.dirichlet)),
        boundary_(detail::set_minus(sub.interface, sub.dirichlet)),
        k_ii_(extract(k_, interior_, interior_)) {
    k_ib_ = extract(k_, interior_, boundary_);
    schur_ = schur_complement(extract(k_, boundary_, boundary_), k_ib_, k_ii_);
    // boundary mass on the interface edges, restricted to eligible dofs
    std::vector<int> global_boundary(boundary_.size());
    for (std::size_t b = 0; b < boundary_.size(); ++b) global_boundary[b] = mesh.global_node(sub.box, boundary_[b]);
    mass_ = DenseMatrix(extract(assemble_boundary_mass(mesh, mesh.interface_edges(sub.box)), global_boundary,
                                global_boundary));
  }

  const GridMesh& mesh() const { return *mesh_; }
  const Subdomain& subdomain() const { return sub_; }
  const CellBox& box() const { return sub_.box; }
  const SparseMatrix& stiffness() const { return k_; }
  /// Dofs of V_{h,0}(omega*): internal, not Dirichlet.
  const std::vector<int>& interior() const { return interior_; }
  /// Interface dofs that are not Dirichlet; dim W_h(omega*).
  const std::vector<int>& boundary() const { return boundary_; }
  const std::vector<int>& dirichlet() const { return sub_.dirichlet; }
  bool touches_dirichlet() const { return sub_.touches_dirichlet(); }
  const SpdFactorization& interior_factor() const { return k_ii_; }
  const DenseMatrix& schur() const { return schur_; }
  const DenseMatrix& boundary_mass() const { return mass_; }

  /// Discrete A-harmonic extensions of interface values (one column each),
  /// zero on Dirichlet nodes.
  DenseMatrix harmonic_extension(const DenseMatrix& g) const {
    if (g.rows() != static_cast<Eigen::Index>(boundary_.size()))
      throw std::invalid_argument("harmonic_extension: dimension mismatch");
    DenseMatrix u = DenseMatrix::Zero(sub_.box.node_count(), g.cols());
    for (std::size_t b = 0; b < boundary_.size(); ++b) u.row(boundary_[b]) = g.row(static_cast<Eigen::Index>(b));
    if (!interior_.empty() && g.cols() > 0) {
      const DenseMatrix ui = k_ii_.solve(DenseMatrix(-(k_ib_ * g)));
      for (std::size_t i = 0; i < interior_.size(); ++i) u.row(interior_[i]) = ui.row(static_cast<Eigen::Index>(i));
    }
    return u;
  }

 private:
  const GridMesh* mesh_;
  Subdomain sub_;
  SparseMatrix k_;
  std::vector<int> interior_;
  std::vector<int> boundary_;
  SpdFactorization k_ii_;
  SparseMatrix k_ib_;
  DenseMatrix schur_;
  DenseMatrix mass_;
};

/// psi^r + psi^d on the box of `lp`. psi^r vanishes on the interface and
/// Dirichlet nodes and carries the local load; psi^d equals q on Dirichlet
/// nodes and is discrete A-harmonic against all of V_hD(omega*).
inline Vector particular_function(const LocalProblem& lp, const ProblemData& data) {
  const GridMesh& mesh = lp.mesh();
  const CellBox& box = lp.box();
  const auto& in = lp.interior();
  const auto& bd = lp.boundary();
  const auto& dir = lp.dirichlet();
  Vector u = Vector::Zero(box.node_count());

  const Vector load = assemble_load(mesh, data.f, data.g, box);
  if (!in.empty()) {
    Vector rhs(static_cast<Eigen::Index>(in.size()));
    for (std::size_t i = 0; i < in.size(); ++i) rhs[static_cast<Eigen::Index>(i)] = load[in[i]];
    const Vector psi_r = lp.interior_factor().solve(rhs);
    for (std::size_t i = 0; i < in.size(); ++i) u[in[i]] = psi_r[static_cast<Eigen::Index>(i)];
  }

  if (!dir.empty() && data.q) {
    Vector qd(static_cast<Eigen::Index>(dir.size()));
    for (std::size_t d = 0; d < dir.size(); ++d) {
      const int k = mesh.global_node(box, dir[d]);
      qd[static_cast<Eigen::Index>(d)] = data.q(mesh.node_x(k), mesh.node_y(k));
    }
    const Vector rhs_i = -(extract(lp.stiffness(), in, dir) * qd);
    const Vector rhs_b = -(extract(lp.stiffness(), bd, dir) * qd);
    const SparseMatrix k_ib = extract(lp.stiffness(), in, bd);
    const Vector y = in.empty() ? Vector() : lp.interior_factor().solve(rhs_i);
    Vector xb = Vector::Zero(static_cast<Eigen::Index>(bd.size()));
    if (!bd.empty()) {
      Eigen::LLT<DenseMatrix> s(lp.schur());
      if (s.info() != Eigen::Success) throw SolverError("particular_function: Schur complement not definite");
      Vector r = rhs_b;
      if (!in.empty()) r -= k_ib.transpose() * y;
      xb = s.solve(r);
    }
    Vector xi = y;
    if (!in.empty() && !bd.empty()) xi -= lp.interior_factor().solve(Vector(k_ib * xb));
    for (std::size_t i = 0; i < in.size(); ++i) u[in[i]] += xi[static_cast<Eigen::Index>(i)];
    for (std::size_t b = 0; b < bd.size(); ++b) u[bd[b]] += xb[static_cast<Eigen::Index>(b)];
    for (std::size_t d = 0; d < dir.size(); ++d) u[dir[d]] += qd[static_cast<Eigen::Index>(d)];
  }
  return u;
}

/// Leading Steklov eigenfunctions of the box, A-harmonically extended.
struct HarmonicBasis {
  int subdomain = -1;
  /// Box-local nodal values, one column per eigenfunction.
  DenseMatrix vectors;
  /// Interface values of the columns (boundary-mass orthonormal).
  DenseMatrix boundary_values;
  /// Steklov eigenvalues, nondecreasing.
  Vector eigenvalues;
  /// dim W_h(omega*), the number of eligible interface dofs.
  int dimension = 0;

  int count() const { return static_cast<int>(vectors.cols()); }
};

/// Solves S g = lambda M_b g on the eligible interface dofs and extends the s
/// smallest modes. s is clamped to dim W_h(omega*).
inline HarmonicBasis steklov_basis(const LocalProblem& lp, int s, int subdomain = -1) {
  if (s <= 0) throw std::invalid_argument("steklov_basis: s must be positive");
  HarmonicBasis hb;
  hb.subdomain = subdomain;
  hb.dimension = static_cast<int>(lp.boundary().size());
  if (hb.dimension == 0) {
    hb.vectors = DenseMatrix(lp.box().node_count(), 0);
    hb.boundary_values = DenseMatrix(0, 0);
    hb.eigenvalues = Vector(0);
    return hb;
  }
  if (s > hb.dimension) {
    detail::warn("subdomain " + std::to_string(subdomain) + ": s=" + std::to_string(s) + " clamped to dim W_h=" +
                 std::to_string(hb.dimension));
    s = hb.dimension;
  }
  const GevpResult ev = sym_gevp(lp.schur(), lp.boundary_mass());
  if (ev.size() < s) throw SolverError("steklov_basis: boundary mass is singular on the interface dofs");
  const double scale = std::abs(ev.pairs.back().value);
  hb.boundary_values.resize(hb.dimension, s);
  hb.eigenvalues.resize(s);
  for (int k = 0; k < s; ++k) {
    hb.boundary_values.col(k) = ev.pairs[k].vector;
    hb.eigenvalues[k] = detail::clamp_eigenvalue(ev.pairs[k].value, scale);
  }
  hb.vectors = lp.harmonic_extension(hb.boundary_values);
  return hb;
}

/// Reduced matrices of the PU-weighted eigenproblem over a harmonic basis:
/// a_hat = a_{omega*}(u_p, u_q), b_hat = a_{omega}(Xi u_p, Xi u_q), and the
/// weighted restrictions Xi(u_p|omega) (box-local on omega).
struct WeightedHarmonic {
  DenseMatrix a_hat;
  DenseMatrix b_hat;
  DenseMatrix weighted;
};

inline WeightedHarmonic weighted_harmonic(const GridMesh& mesh, const CoefficientField& coeff, const Decomposition& d,
                                          int i, const LocalProblem& lp, const HarmonicBasis& hb) {
  const Subdomain& om = d.omega.at(i);
  WeightedHarmonic w;
  const DenseMatrix ku = lp.stiffness() * hb.vectors;
  w.a_hat = hb.vectors.transpose() * ku;
  const PUOperator pu = pu_operator(mesh, d, i);
  w.weighted = pu.weights.asDiagonal() * restrict_box(lp.box(), om.box, hb.vectors);
  const SparseMatrix k_om = assemble_stiffness(mesh, coeff, om.box);
  w.b_hat = w.weighted.transpose() * (k_om * w.weighted);
  return w;
}

/// Every finite eigenpair of the PU-weighted problem on the leading s
/// harmonic columns; coefficients are with respect to those columns.
struct LocalEigen {
  Vector eigenvalues;
  DenseMatrix coefficients;
  int infinite_count = 0;

  int count() const { return static_cast<int>(eigenvalues.size()); }
};

inline LocalEigen local_eigenproblem(const WeightedHarmonic& w, int s) {
  s = std::min<int>(s, static_cast<int>(w.a_hat.rows()));
  LocalEigen le;
  if (s == 0) {
    le.eigenvalues = Vector(0);
    le.coefficients = DenseMatrix(0, 0);
    return le;
  }
  DenseMatrix a = w.a_hat.topLeftCorner(s, s);
  DenseMatrix b = w.b_hat.topLeftCorner(s, s);
  const double sa = a.cwiseAbs().maxCoeff(), sb = b.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(sa, 1e-300) ||
      (b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(sb, 1e-300))
    throw SolverError("local_eigenproblem: reduced matrices are not symmetric");
  a = 0.5 * (a + a.transpose());
  b = 0.5 * (b + b.transpose());
  const GevpResult ev = sym_gevp(a, b);
  le.infinite_count = ev.infinite_count;
  le.eigenvalues.resize(ev.size());
  le.coefficients.resize(s, ev.size());
  const double scale = ev.size() ? std::abs(ev.pairs.back().value) : 1.0;
  for (int k = 0; k < ev.size(); ++k) {
    le.eigenvalues[k] = detail::clamp_eigenvalue(ev.pairs[k].value, scale);
    le.coefficients.col(k) = ev.pairs[k].vector;
  }
  return le;
}

struct LocalSpace {
  int subdomain = -1;
  CellBox box;
  /// u^p_{h,i} on omega*.
  Vector particular;
  /// phi_{h,1..n_loc} on omega*, columns.
  DenseMatrix basis;
  /// Xi_i(phi|omega_i) on omega_i, columns.
  DenseMatrix weighted_basis;
  /// lambda_1..lambda_{n_loc+1} (fewer if the space is exhausted).
  Vector eigenvalues;
  bool touches_dirichlet = false;

  int size() const { return static_cast<int>(basis.cols()); }
};

/// The n_loc smallest modes of `le`, mapped back to nodal vectors.
inline LocalSpace make_local_space(int i, const CellBox& box, const Vector& particular, const HarmonicBasis& hb,
                                   const WeightedHarmonic& w, const LocalEigen& le, int n_loc, bool touches_dirichlet) {
  if (n_loc < 0) throw std::invalid_argument("local space size must be nonnegative");
  if (n_loc + 1 > le.count())
    detail::warn("subdomain " + std::to_string(i) + ": n_loc=" + std::to_string(n_loc) + " with only " +
                 std::to_string(le.count()) + " finite local eigenpairs");
  const int n = std::min(n_loc, le.count());
  const int s = static_cast<int>(le.coefficients.rows());
  LocalSpace ls;
  ls.subdomain = i;
  ls.box = box;
  ls.particular = particular;
  ls.touches_dirichlet = touches_dirichlet;
  const auto coeffs = le.coefficients.leftCols(n);
  ls.basis = hb.vectors.leftCols(s) * coeffs;
  ls.weighted_basis = w.weighted.leftCols(s) * coeffs;
  ls.eigenvalues = le.eigenvalues.head(std::min(n + 1, le.count()));
  return ls;
}

/// One-shot construction of the optimal local space of subdomain i.
inline LocalSpace local_spectral_basis(const GridMesh& mesh, const CoefficientField& coeff, const Decomposition& d,
                                       int i, const LocalProblem& lp, const HarmonicBasis& hb, const Vector& particular,
                                       int n_loc) {
  if (n_loc + 1 > hb.count())
    detail::warn("subdomain " + std::to_string(i) + ": n_loc+1 exceeds the harmonic basis size");
  const WeightedHarmonic w = weighted_harmonic(mesh, coeff, d, i, lp, hb);
  const LocalEigen le = local_eigenproblem(w, hb.count());
  return make_local_space(i, lp.box(), particular, hb, w, le, n_loc, lp.touches_dirichlet());
}

/// lambda_{n+1}^{-1/2}: the n-width of the local PU operator.
inline double nwidth_estimate(const Vector& eigenvalues, int n) {
  if (n < 0 || n >= eigenvalues.size())
    throw std::out_of_range("nwidth_estimate: n=" + std::to_string(n) + " needs " + std::to_string(n + 1) +
                            " eigenvalues, have " + std::to_string(eigenvalues.size()));
  const double l = eigenvalues[n];
  return l <= 1e-14 ? std::numeric_limits<double>::infinity() : 1.0 / std::sqrt(l);
}

inline double nwidth_estimate(const LocalSpace& space, int n) { return nwidth_estimate(space.eigenvalues, n); }

/// Max over interior hat functions phi_k of |a(u, phi_k)| / (|u|_a |phi_k|_a)
/// for one box-local vector u.
inline double harmonicity_residual(const LocalProblem& lp, const Vector& u) {
  const Vector ku = lp.stiffness() * u;
  const double ua = std::sqrt(std::max(u.dot(ku), 0.0));
  double worst = 0.0;
  for (int k : lp.interior()) {
    const double scale = ua * std::sqrt(lp.stiffness().coeff(k, k));
    worst = std::max(worst, scale > 0.0 ? std::abs(ku[k]) / scale
                                        : (ku[k] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()));
  }
  return worst;
}

/// Componentwise backward error max_k |(K u)_k| / (|K| |u|)_k over interior dofs.
inline double componentwise_residual(const LocalProblem& lp, const Vector& u) {
  const Vector ku = lp.stiffness() * u;
  SparseMatrix abs_k = lp.stiffness().cwiseAbs();
  const Vector scale = abs_k * u.cwiseAbs();
  double worst = 0.0;
  for (int k : lp.interior())
    worst = std::max(worst, scale[k] > 0.0 ? std::abs(ku[k]) / scale[k] : 0.0);
  return worst;
}

/// Per-subdomain diagnostics row header and rows.
inline void write_local_diagnostics_header(std::ostream& os, int n_loc) {
  os << "i,N_i,s_used";
  for (int k = 1; k <= n_loc + 1; ++k) os << ",lambda" << k;
  os << ",nwidth\n";
}

inline void write_local_diagnostics_row(std::ostream& os, const LocalSpace& ls, int dim_w, int s_used, int n_loc) {
  os.precision(12);
  os << ls.subdomain << ',' << dim_w << ',' << s_used;
  for (int k = 0; k <= n_loc; ++k) {
    os << ',';
    if (k < ls.eigenvalues.size()) os << ls.eigenvalues[k];
  }
  os << ',';
  if (n_loc < ls.eigenvalues.size()) os << nwidth_estimate(ls, n_loc);
  os << '\n';
}

}  // namespace msgfem

#endif  // MSGFEM_LOCAL_SPACES_HPP
