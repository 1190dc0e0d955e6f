#ifndef MSGFEM_GFEM_HPP
#define MSGFEM_GFEM_HPP

// Global MS-GFEM driver: glue the local particular functions and local
// spaces with the partition-of-unity operators, solve the coarse Galerkin
// problem, and compare against the fine-scale reference solution.

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "msgfem/coefficients.hpp"
#include "msgfem/decomposition.hpp"
#include "msgfem/grid_fem.hpp"
#include "msgfem/linalg.hpp"
#include "msgfem/local_spaces.hpp"
#include "msgfem/parallel.hpp"

namespace msgfem {

/// Mesh, coefficient, data and the assembled global stiffness and load.
struct FineProblem {
  GridMesh mesh;
  CoefficientField coeff;
  ProblemData data;
  SparseMatrix stiffness;
  Vector load;

  FineProblem(GridMesh m, CoefficientField c, ProblemData d)
      : mesh(m), coeff(std::move(c)), data(std::move(d)) {
    stiffness = assemble_stiffness(mesh, coeff);
    load = assemble_load(mesh, data.f, data.g);
  }
};

inline FineProblem make_paper_problem(int mesh_n, Example example, std::uint64_t seed) {
  GridMesh mesh(mesh_n, mesh_n);
  return FineProblem(mesh, make_coefficient(mesh, example, seed), paper_problem_data(example));
}

/// Fine FE solution: Dirichlet nodes set to q, the remaining dofs solved.
inline Vector reference_solve(const GridMesh& mesh, const SparseMatrix& k, const Vector& load, const ProblemData& data) {
  std::vector<int> free, fixed;
  for (int n = 0; n < mesh.node_count(); ++n) (mesh.is_dirichlet(n) ? fixed : free).push_back(n);
  Vector u = Vector::Zero(mesh.node_count());
  Vector qd(static_cast<Eigen::Index>(fixed.size()));
  for (std::size_t i = 0; i < fixed.size(); ++i)
    qd[static_cast<Eigen::Index>(i)] = data.q ? data.q(mesh.node_x(fixed[i]), mesh.node_y(fixed[i])) : 0.0;
  Vector rhs(static_cast<Eigen::Index>(free.size()));
  for (std::size_t i = 0; i < free.size(); ++i) rhs[static_cast<Eigen::Index>(i)] = load[free[i]];
  rhs -= extract(k, free, fixed) * qd;
  const Vector uf = SpdFactorization(extract(k, free, free)).solve(rhs);
  for (std::size_t i = 0; i < free.size(); ++i) u[free[i]] = uf[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < fixed.size(); ++i) u[fixed[i]] = qd[static_cast<Eigen::Index>(i)];
  return u;
}

inline Vector reference_solve(const FineProblem& p) { return reference_solve(p.mesh, p.stiffness, p.load, p.data); }

/// |u_h - u_G|_a / |u_h|_a.
inline double relative_energy_error(const SparseMatrix& k, const Vector& u_h, const Vector& u_g) {
  const double ref = energy_norm(k, u_h);
  if (!(ref > 0.0)) throw std::domain_error("relative_energy_error: reference solution has zero energy");
  return energy_norm(k, u_h - u_g) / ref;
}

/// h(s) = 1 + s log(s) / (1 - s), extended by h(0) = 1 and h(1) = 0.
inline double h_of_s(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("h_of_s: s must lie in [0,1]");
  if (s == 0.0) return 1.0;
  if (s == 1.0) return 0.0;
  return 1.0 + s * std::log(s) / (1.0 - s);
}

struct TheoryBounds {
  double rho = 1;
  double h_of_rho = 0;
};

inline TheoryBounds theory_bounds(const Decomposition& d) {
  const double rho = d.rho();
  return {rho, h_of_s(rho)};
}

/// Global particular function and coarse basis (one column per local mode).
struct GlobalSpace {
  Vector u_p;
  SparseMatrix basis;
  /// Subdomain of each column.
  std::vector<int> owner;
  int dropped_columns = 0;
};

/// u_p = sum_i R_i^T Xi_i(u^p_i|omega_i); columns R_i^T Xi_i(phi|omega_i).
/// Columns with energy norm <= 1e-13 are dropped.
inline GlobalSpace assemble_global(const GridMesh& mesh, const SparseMatrix& k, const Decomposition& d,
                                   const std::vector<LocalSpace>& locals) {
  if (static_cast<int>(locals.size()) != d.size())
    throw std::invalid_argument("assemble_global: need one local space per subdomain");
  GlobalSpace gs;
  gs.u_p = Vector::Zero(mesh.node_count());
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> owner;
  int col = 0;
  for (int i = 0; i < d.size(); ++i) {
    const LocalSpace& ls = locals[i];
    const Subdomain& om = d.omega[i];
    const PUOperator pu = pu_operator(mesh, d, i);
    const Vector up = pu_apply(pu, restrict_box(ls.box, om.box, ls.particular).col(0));
    gs.u_p += zero_extend(mesh, d, i, up);
    for (int c = 0; c < ls.weighted_basis.cols(); ++c, ++col) {
      for (int l : om.internal)
        if (const double v = ls.weighted_basis(l, c); v != 0.0) trip.emplace_back(mesh.global_node(om.box, l), col, v);
      owner.push_back(i);
    }
  }
  SparseMatrix all(mesh.node_count(), col);
  all.setFromTriplets(trip.begin(), trip.end());
  const SparseMatrix kc = k * all;
  std::vector<Eigen::Triplet<double>> kept;
  int out_col = 0;
  for (int c = 0; c < col; ++c) {
    const double energy = all.col(c).dot(kc.col(c));
    if (std::sqrt(std::max(energy, 0.0)) <= 1e-13) {
      detail::warn("dropping coarse column " + std::to_string(c) + " of subdomain " + std::to_string(owner[c]) +
                   ": zero energy");
      ++gs.dropped_columns;
      continue;
    }
    for (SparseMatrix::InnerIterator it(all, c); it; ++it) kept.emplace_back(it.row(), out_col, it.value());
    gs.owner.push_back(owner[c]);
    ++out_col;
  }
  gs.basis.resize(mesh.node_count(), out_col);
  gs.basis.setFromTriplets(kept.begin(), kept.end());
  return gs;
}

struct GfemSolution {
  Vector u_p;
  SparseMatrix coarse_basis;
  DenseMatrix coarse_matrix;
  Vector coarse_rhs;
  Vector coefficients;
  Vector u_s;
  Vector u_G;
  int dropped_columns = 0;
  int dropped_pivots = 0;
};

/// Galerkin solve a(u_s, v) = F(v) - a(u_p, v) over span(basis), with
/// diagonal scaling and pivot dropping below 1e-12 of the largest pivot.
/// An empty basis gives u_s = 0.
inline GfemSolution coarse_solve(const SparseMatrix& k, const Vector& load, const Vector& u_p, const SparseMatrix& basis) {
  GfemSolution sol;
  sol.u_p = u_p;
  sol.coarse_basis = basis;
  const Eigen::Index nc = basis.cols();
  if (nc == 0) {
    detail::warn("coarse_solve: empty coarse space, u_G = u_p");
    sol.coarse_matrix = DenseMatrix(0, 0);
    sol.coarse_rhs = Vector(0);
    sol.coefficients = Vector(0);
    sol.u_s = Vector::Zero(u_p.size());
    sol.u_G = u_p;
    return sol;
  }
  const SparseMatrix kc = k * basis;
  sol.coarse_matrix = DenseMatrix(SparseMatrix(basis.transpose() * kc));
  sol.coarse_rhs = basis.transpose() * (load - k * u_p);
  Vector scale(nc);
  for (Eigen::Index c = 0; c < nc; ++c) {
    const double g = sol.coarse_matrix(c, c);
    scale[c] = g > 0.0 ? 1.0 / std::sqrt(g) : 0.0;
  }
  if (scale.maxCoeff() == 0.0) throw SolverError("coarse_solve: Galerkin matrix is numerically zero");
  const DenseMatrix gs = scale.asDiagonal() * sol.coarse_matrix * scale.asDiagonal();
  const PivotedCholesky chol(gs, 1e-12);
  sol.dropped_pivots = static_cast<int>(chol.dropped());
  if (sol.dropped_pivots > 0)
    detail::warn("coarse_solve: dropped " + std::to_string(sol.dropped_pivots) + " redundant coarse directions");
  sol.coefficients = scale.asDiagonal() * chol.solve(scale.asDiagonal() * sol.coarse_rhs);
  sol.u_s = basis * sol.coefficients;
  sol.u_G = sol.u_p + sol.u_s;
  return sol;
}

/// Local data of one subdomain that does not depend on n_loc.
struct SubdomainBuild {
  CellBox box_star;
  Vector particular;
  HarmonicBasis harmonic;
  WeightedHarmonic weighted;
  bool touches_dirichlet = false;
};

inline SubdomainBuild build_subdomain(const FineProblem& fine, const Decomposition& d, int i, int s_max) {
  const LocalProblem lp(fine.mesh, fine.coeff, d.omega_star.at(i));
  SubdomainBuild b;
  b.box_star = lp.box();
  b.touches_dirichlet = lp.touches_dirichlet();
  b.particular = particular_function(lp, fine.data);
  b.harmonic = steklov_basis(lp, s_max, i);
  b.weighted = weighted_harmonic(fine.mesh, fine.coeff, d, i, lp, b.harmonic);
  return b;
}

/// Multiscale spectral GFEM on one decomposition. The Steklov basis is built
/// once with s_max columns; solves for any s <= s_max and any n_loc reuse it.
class MsGfem {
 public:
  MsGfem(const FineProblem& fine, Decomposition d, int s_max, int threads = 1)
      : fine_(&fine), d_(std::move(d)), s_max_(s_max) {
    if (s_max <= 0) throw std::invalid_argument("MsGfem: s_max must be positive");
    builds_.resize(d_.size());
    parallel_for(d_.size(), threads, [&](int i) { builds_[i] = build_subdomain(fine, d_, i, s_max); });
  }

  const Decomposition& decomposition() const { return d_; }
  const std::vector<SubdomainBuild>& builds() const { return builds_; }
  int s_max() const { return s_max_; }

  std::vector<LocalEigen> eigenproblems(int s, int threads = 1) const {
    std::vector<LocalEigen> out(builds_.size());
    parallel_for(d_.size(), threads, [&](int i) { out[i] = local_eigenproblem(builds_[i].weighted, s); });
    return out;
  }

  std::vector<LocalSpace> local_spaces(const std::vector<LocalEigen>& eig, int n_loc) const {
    std::vector<LocalSpace> out;
    out.reserve(builds_.size());
    for (int i = 0; i < d_.size(); ++i) {
      const SubdomainBuild& b = builds_[i];
      out.push_back(make_local_space(i, b.box_star, b.particular, b.harmonic, b.weighted, eig[i], n_loc,
                                     b.touches_dirichlet));
    }
    return out;
  }

  GfemSolution solve(const std::vector<LocalSpace>& locals) const {
    const GlobalSpace gs = assemble_global(fine_->mesh, fine_->stiffness, d_, locals);
    GfemSolution sol = coarse_solve(fine_->stiffness, fine_->load, gs.u_p, gs.basis);
    sol.dropped_columns = gs.dropped_columns;
    return sol;
  }

  GfemSolution solve(int n_loc, int s) const {
    if (s > s_max_) throw std::invalid_argument("MsGfem::solve: s exceeds the prepared Steklov basis");
    return solve(local_spaces(eigenproblems(s), n_loc));
  }

 private:
  const FineProblem* fine_;
  Decomposition d_;
  int s_max_;
  std::vector<SubdomainBuild> builds_;
};

}  // namespace msgfem

#endif  // MSGFEM_GFEM_HPP
