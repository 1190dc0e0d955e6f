#ifndef MSGFEM_LINALG_HPP
#define MSGFEM_LINALG_HPP

// Numerical kernels: sparse SPD factorization with a residual contract,
// Schur complements onto boundary dof sets, a dense symmetric-definite
// generalized eigensolver that handles a singular right-hand matrix, and a
// rank-revealing Cholesky for possibly redundant Galerkin systems.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "msgfem/grid_fem.hpp"

namespace msgfem {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Entries (rows x cols) of a sparse matrix, reindexed 0.. in list order.
inline SparseMatrix extract(const SparseMatrix& k, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> row_map(k.rows(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) row_map[rows[i]] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (SparseMatrix::InnerIterator it(k, cols[j]); it; ++it)
      if (const int r = row_map[it.row()]; r >= 0) trip.emplace_back(r, static_cast<int>(j), it.value());
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

/// Sparse LDL^T of an SPD matrix. Every solve meets
/// |A x - b| <= 1e-10 |b|, with up to three steps of iterative refinement.
class SpdFactorization {
 public:
  static constexpr double kResidualTol = 1e-10;

  explicit SpdFactorization(SparseMatrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols()) throw std::invalid_argument("SpdFactorization: matrix is not square");
    if (a_.rows() == 0) return;
    ldlt_.compute(a_);
    if (ldlt_.info() != Eigen::Success) throw SolverError("SpdFactorization: sparse LDL^T failed (structurally singular)");
    const Vector& d = ldlt_.vectorD();
    for (Eigen::Index p = 0; p < d.size(); ++p) {
      if (!(d[p] > 0.0)) {
        const int original = ldlt_.permutationPinv().indices()[p];
        throw SolverError("SpdFactorization: matrix not positive definite, pivot " + std::to_string(d[p]) +
                          " at row " + std::to_string(original));
      }
    }
  }

  Eigen::Index size() const { return a_.rows(); }
  const SparseMatrix& matrix() const { return a_; }

  Vector solve(const Vector& b) const {
    DenseMatrix x = solve(DenseMatrix(b));
    return x.col(0);
  }

  DenseMatrix solve(const DenseMatrix& b) const {
    if (b.rows() != size()) throw std::invalid_argument("SpdFactorization::solve: dimension mismatch");
    if (size() == 0) return DenseMatrix(0, b.cols());
    DenseMatrix x = ldlt_.solve(b);
    for (int step = 0;; ++step) {
      const DenseMatrix r = b - a_ * x;
      bool ok = true;
      for (Eigen::Index c = 0; c < b.cols(); ++c)
        if (r.col(c).norm() > kResidualTol * b.col(c).norm()) ok = false;
      if (ok) return x;
      if (step == 3) {
        double worst = 0;
        for (Eigen::Index c = 0; c < b.cols(); ++c)
          worst = std::max(worst, r.col(c).norm() / std::max(b.col(c).norm(), 1e-300));
        throw SolverError("SpdFactorization::solve: relative residual " + std::to_string(worst) +
                          " above contract after " + std::to_string(step) + " refinement steps");
      }
      x += ldlt_.solve(r);
    }
  }

 private:
  SparseMatrix a_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

inline Vector spd_solve(const SparseMatrix& a, const Vector& b) { return SpdFactorization(a).solve(b); }

/// Dense S = K_BB - K_BI K_II^{-1} K_IB given a factorization of K_II.
inline DenseMatrix schur_complement(const SparseMatrix& k_bb, const SparseMatrix& k_ib, const SpdFactorization& k_ii) {
  DenseMatrix s = DenseMatrix(k_bb);
  if (k_ii.size() > 0 && k_ib.cols() > 0) {
    const DenseMatrix z = k_ii.solve(DenseMatrix(k_ib));
    s.noalias() -= k_ib.transpose() * z;
  }
  return 0.5 * (s + s.transpose());
}

inline DenseMatrix schur_complement(const SparseMatrix& k, const std::vector<int>& interior,
                                    const std::vector<int>& boundary) {
  return schur_complement(extract(k, boundary, boundary), extract(k, interior, boundary),
                          SpdFactorization(extract(k, interior, interior)));
}

/// S g without forming S.
inline Vector schur_apply(const SparseMatrix& k, const std::vector<int>& interior, const std::vector<int>& boundary,
                          const Vector& g) {
  if (g.size() != static_cast<Eigen::Index>(boundary.size()))
    throw std::invalid_argument("schur_apply: dimension mismatch");
  const SparseMatrix k_ib = extract(k, interior, boundary);
  Vector out = extract(k, boundary, boundary) * g;
  if (!interior.empty()) {
    const Vector y = SpdFactorization(extract(k, interior, interior)).solve(Vector(k_ib * g));
    out -= k_ib.transpose() * y;
  }
  return out;
}

struct EigPair {
  double value = 0;
  Vector vector;
  /// sqrt(x^T B x) of the returned vector.
  double b_norm = 0;
};

struct GevpResult {
  /// Finite pairs, eigenvalues nondecreasing, vectors B-orthonormal.
  std::vector<EigPair> pairs;
  /// Directions in the numerical nullspace of B (eigenvalue +infinity).
  int infinite_count = 0;

  int size() const { return static_cast<int>(pairs.size()); }
};

namespace detail {

inline void check_symmetric(const DenseMatrix& a, const char* name) {
  const double scale = a.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, std::numeric_limits<double>::min()))
    throw std::invalid_argument(std::string("sym_gevp: ") + name + " is not symmetric");
}

}  // namespace detail

/// Solves A x = lambda B x for symmetric A and symmetric PSD B, returning the
/// pairs with finite lambda, smallest first.
///
/// Eigenvalues of B below 1e-12 trace(B)/n define its numerical nullspace N;
/// those directions are reported as infinite. The finite vectors satisfy
/// N^T A x = 0, so the problem is first condensed onto range(B) through the
/// Schur complement of N^T A N. The condensed pencil (A_r, B_r) is reduced
/// with the Cholesky factor of A_r + sigma B_r and solved for
/// nu = 1/(lambda + sigma), which resolves the small eigenvalues to absolute
/// accuracy even when B_r is badly conditioned.
inline GevpResult sym_gevp(const DenseMatrix& a_in, const DenseMatrix& b_in) {
  const Eigen::Index n = a_in.rows();
  if (a_in.cols() != n || b_in.rows() != n || b_in.cols() != n)
    throw std::invalid_argument("sym_gevp: dimension mismatch");
  GevpResult out;
  if (n == 0) return out;
  detail::check_symmetric(a_in, "A");
  detail::check_symmetric(b_in, "B");
  const DenseMatrix a = 0.5 * (a_in + a_in.transpose());
  const DenseMatrix b = 0.5 * (b_in + b_in.transpose());

  const double trace_b = b.trace();
  if (!(trace_b > 0.0) || b.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("sym_gevp: B is numerically zero");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eb(b);
  if (eb.info() != Eigen::Success) throw SolverError("sym_gevp: eigendecomposition of B failed");
  const double tau = 1e-12 * trace_b / static_cast<double>(n);
  std::vector<Eigen::Index> range_idx, null_idx;
  for (Eigen::Index k = 0; k < n; ++k) (eb.eigenvalues()[k] > tau ? range_idx : null_idx).push_back(k);
  const auto r = static_cast<Eigen::Index>(range_idx.size());
  out.infinite_count = static_cast<int>(null_idx.size());
  if (r == 0) throw std::invalid_argument("sym_gevp: B is numerically zero");

  DenseMatrix q(n, r), nb(n, static_cast<Eigen::Index>(null_idx.size()));
  for (Eigen::Index k = 0; k < r; ++k) q.col(k) = eb.eigenvectors().col(range_idx[k]);
  for (std::size_t k = 0; k < null_idx.size(); ++k) nb.col(static_cast<Eigen::Index>(k)) = eb.eigenvectors().col(null_idx[k]);

  // Basis P of the finite subspace: P = Q - N (N^T A N)^+ N^T A Q.
  DenseMatrix p = q;
  if (nb.cols() > 0) {
    const DenseMatrix ann = nb.transpose() * a * nb;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> en(0.5 * (ann + ann.transpose()));
    const double cut = 1e-13 * std::max(en.eigenvalues().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    Vector inv = en.eigenvalues();
    for (Eigen::Index k = 0; k < inv.size(); ++k) inv[k] = std::abs(inv[k]) > cut ? 1.0 / inv[k] : 0.0;
    const DenseMatrix pinv = en.eigenvectors() * inv.asDiagonal() * en.eigenvectors().transpose();
    p -= nb * (pinv * (nb.transpose() * (a * q)));
  }
  DenseMatrix ar = p.transpose() * a * p;
  DenseMatrix br = p.transpose() * b * p;
  ar = 0.5 * (ar + ar.transpose());
  br = 0.5 * (br + br.transpose());

  const double sigma = ar.trace() > 0.0 ? ar.trace() / br.trace() : 1.0;
  Eigen::LLT<DenseMatrix> llt(ar + sigma * br);
  DenseMatrix y;
  Vector lambda(r);
  if (llt.info() == Eigen::Success) {
    const auto& l = llt.matrixL();
    DenseMatrix c = l.solve(l.solve(br).transpose());
    c = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<DenseMatrix> ec(c);
    if (ec.info() != Eigen::Success) throw SolverError("sym_gevp: reduced eigenproblem failed");
    y.resize(r, r);
    for (Eigen::Index k = 0; k < r; ++k) {
      const Eigen::Index src = r - 1 - k;  // largest nu first
      const double nu = ec.eigenvalues()[src];
      lambda[k] = nu > 0.0 ? 1.0 / nu - sigma : std::numeric_limits<double>::infinity();
      y.col(k) = llt.matrixU().solve(ec.eigenvectors().col(src));
    }
  } else {
    // A_r + sigma B_r not numerically definite (A_r indefinite): reduce with B_r.
    Eigen::SelfAdjointEigenSolver<DenseMatrix> ebr(br);
    const Vector isq = ebr.eigenvalues().cwiseMax(tau).cwiseSqrt().cwiseInverse();
    const DenseMatrix w = ebr.eigenvectors() * isq.asDiagonal();
    DenseMatrix c = w.transpose() * ar * w;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> ec(0.5 * (c + c.transpose()));
    lambda = ec.eigenvalues();
    y = w * ec.eigenvectors();
  }

  for (Eigen::Index k = 0; k < r; ++k) {
    if (!std::isfinite(lambda[k])) {
      ++out.infinite_count;
      continue;
    }
    EigPair pair;
    pair.value = lambda[k];
    pair.vector = p * y.col(k);
    const double bn = std::sqrt(std::max(pair.vector.dot(b * pair.vector), 0.0));
    if (bn > 0.0) pair.vector /= bn;
    pair.b_norm = std::sqrt(std::max(pair.vector.dot(b * pair.vector), 0.0));
    out.pairs.push_back(std::move(pair));
  }
  std::stable_sort(out.pairs.begin(), out.pairs.end(),
                   [](const EigPair& x, const EigPair& y2) { return x.value < y2.value; });
  return out;
}

/// Cholesky with diagonal pivoting that stops once the largest remaining
/// pivot falls below rel_drop * max diag(G). Dropped directions get a zero
/// coefficient in solve().
class PivotedCholesky {
 public:
  explicit PivotedCholesky(const DenseMatrix& g, double rel_drop = 1e-12) : n_(g.rows()) {
    if (g.cols() != n_) throw std::invalid_argument("PivotedCholesky: matrix is not square");
    if (n_ == 0) return;
    DenseMatrix w = 0.5 * (g + g.transpose());
    perm_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) perm_[i] = i;
    const double max_diag = w.diagonal().maxCoeff();
    if (!(max_diag > 0.0)) throw SolverError("PivotedCholesky: Galerkin matrix is numerically zero");
    const double tol = rel_drop * max_diag;
    Eigen::Index k = 0;
    for (; k < n_; ++k) {
      Eigen::Index piv = k;
      w.diagonal().tail(n_ - k).maxCoeff(&piv);
      piv += k;
      if (!(w(piv, piv) > tol)) break;
      if (piv != k) {
        w.row(k).swap(w.row(piv));
        w.col(k).swap(w.col(piv));
        std::swap(perm_[k], perm_[piv]);
      }
      const double d = std::sqrt(w(k, k));
      w(k, k) = d;
      w.col(k).tail(n_ - k - 1) /= d;
      const Eigen::Index rest = n_ - k - 1;
      if (rest > 0) {
        const Vector v = w.col(k).tail(rest);
        w.bottomRightCorner(rest, rest).noalias() -= v * v.transpose();
        w.row(k).tail(rest) = v.transpose();
      }
    }
    rank_ = k;
    l_ = w.topLeftCorner(rank_, rank_).template triangularView<Eigen::Lower>();
  }

  Eigen::Index rank() const { return rank_; }
  Eigen::Index dropped() const { return n_ - rank_; }

  Vector solve(const Vector& rhs) const {
    if (rhs.size() != n_) throw std::invalid_argument("PivotedCholesky::solve: dimension mismatch");
    Vector c = Vector::Zero(n_);
    if (rank_ == 0) return c;
    Vector rp(rank_);
    for (Eigen::Index i = 0; i < rank_; ++i) rp[i] = rhs[perm_[i]];
    const auto lower = l_.triangularView<Eigen::Lower>();
    const Vector y = lower.transpose().solve(lower.solve(rp));
    for (Eigen::Index i = 0; i < rank_; ++i) c[perm_[i]] = y[i];
    return c;
  }

 private:
  Eigen::Index n_ = 0;
  Eigen::Index rank_ = 0;
  std::vector<Eigen::Index> perm_;
  DenseMatrix l_;
};

}  // namespace msgfem

#endif  // MSGFEM_LINALG_HPP
