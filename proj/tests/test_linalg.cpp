#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "msgfem/coefficients.hpp"
#include "msgfem/decomposition.hpp"
#include "msgfem/linalg.hpp"
#include "oracles.hpp"

using namespace msgfem;

namespace {

SparseMatrix to_sparse(const DenseMatrix& d) { return d.sparseView(); }

}  // namespace

TEST(SpdSolve, IdentityAndDiagonal) {
  const Vector b = Vector::LinSpaced(7, -3.0, 4.0);
  const SparseMatrix eye = to_sparse(DenseMatrix::Identity(7, 7));
  EXPECT_LE((spd_solve(eye, b) - b).cwiseAbs().maxCoeff(), 1e-15);
  const SparseMatrix two = to_sparse(2.0 * DenseMatrix::Identity(7, 7));
  EXPECT_LE((spd_solve(two, Vector::Ones(7)) - Vector::Constant(7, 0.5)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpdSolve, RandomSpdResidual) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  DenseMatrix x(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) x(i, j) = nd(rng);
  const DenseMatrix a = x.transpose() * x + DenseMatrix::Identity(50, 50);
  const Vector b = oracle::random_vector(50, rng);
  const Vector sol = spd_solve(to_sparse(a), b);
  EXPECT_LE((a * sol - b).norm(), 1e-10 * b.norm());
}

TEST(SpdSolve, ReportsIndefinitePivot) {
  DenseMatrix a = DenseMatrix::Identity(4, 4);
  a(2, 2) = -1.0;
  try {
    SpdFactorization f(to_sparse(a));
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(SpdFactorization(to_sparse(DenseMatrix::Zero(3, 2))), std::invalid_argument);
}

TEST(SpdSolve, ConcurrentSolvesShareOneFactorization) {
  const GridMesh mesh(30, 30);
  const SparseMatrix k = assemble_stiffness(mesh, high_contrast_field(mesh));
  std::vector<int> free;
  for (int n = 0; n < mesh.node_count(); ++n)
    if (!mesh.is_dirichlet(n)) free.push_back(n);
  const SparseMatrix a = extract(k, free, free);
  const SpdFactorization f(a);
  std::vector<Vector> out(8);
  std::vector<std::jthread> pool;
  for (int t = 0; t < 8; ++t)
    pool.emplace_back([&, t] { out[t] = f.solve(Vector(Vector::Constant(a.rows(), t + 1.0))); });
  pool.clear();
  for (int t = 0; t < 8; ++t) EXPECT_LE((a * out[t] - Vector::Constant(a.rows(), t + 1.0)).norm(), 1e-10 * (t + 1.0) * std::sqrt(a.rows()));
}

TEST(Schur, ThreeNodeChain) {
  DenseMatrix k(3, 3);
  k << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  // eliminate the middle node of the chain tridiag(-1,2,-1) with the ends as boundary
  DenseMatrix chain(3, 3);
  chain << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  const DenseMatrix s = schur_complement(to_sparse(chain), {1}, {0, 2});
  DenseMatrix ref(2, 2);
  ref << 0.5, -0.5, -0.5, 0.5;
  EXPECT_LE((s - ref).cwiseAbs().maxCoeff(), 1e-15);
  // with the full tridiag(-1,2,-1) the hand elimination gives K_BB - 1/2 [[1,1],[1,1]]
  const DenseMatrix s2 = schur_complement(to_sparse(k), {1}, {0, 2});
  DenseMatrix ref2(2, 2);
  ref2 << 1.5, -0.5, -0.5, 1.5;
  EXPECT_LE((s2 - ref2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Schur, NoInteriorGivesKbb) {
  DenseMatrix k(2, 2);
  k << 3, -1, -1, 2;
  EXPECT_LE((schur_complement(to_sparse(k), {}, {0, 1}) - k).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((schur_apply(to_sparse(k), {}, {0, 1}, Vector::Ones(2)) - k * Vector::Ones(2)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Schur, ConstantOnNeumannPatchAndSymmetry) {
  const GridMesh mesh(12, 12);
  const CoefficientField c = high_contrast_field(mesh);
  const CellBox box{3, 9, 2, 10};
  const Subdomain sub = make_subdomain(mesh, box);
  const SparseMatrix k = assemble_stiffness(mesh, c, box);
  const Vector sg = schur_apply(k, sub.internal, sub.interface, Vector::Ones(sub.interface.size()));
  EXPECT_LE(sg.cwiseAbs().maxCoeff(), 1e-9 * max_abs(k));
  const DenseMatrix s = schur_complement(k, sub.internal, sub.interface);
  EXPECT_LE((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-10 * s.cwiseAbs().maxCoeff());
  std::mt19937_64 rng(9);
  const Vector g = oracle::random_vector(sub.interface.size(), rng);
  EXPECT_LE((s * g - schur_apply(k, sub.internal, sub.interface, g)).cwiseAbs().maxCoeff(), 1e-9 * max_abs(k));
  // positive semidefinite
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(s);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());
}

TEST(Gevp, DiagonalAgainstIdentity) {
  DenseMatrix a = DenseMatrix::Zero(3, 3);
  a.diagonal() << 1, 2, 3;
  const GevpResult r = sym_gevp(a, DenseMatrix::Identity(3, 3));
  ASSERT_EQ(r.size(), 3);
  EXPECT_EQ(r.infinite_count, 0);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(r.pairs[k].value, k + 1.0, 1e-12);
    EXPECT_NEAR(std::abs(r.pairs[k].vector[k]), 1.0, 1e-12);
    EXPECT_NEAR(r.pairs[k].b_norm, 1.0, 1e-12);
  }
}

TEST(Gevp, SingularB) {
  DenseMatrix b = DenseMatrix::Zero(2, 2);
  b(0, 0) = 1.0;
  const GevpResult r = sym_gevp(DenseMatrix::Identity(2, 2), b);
  ASSERT_EQ(r.size(), 1);
  EXPECT_EQ(r.infinite_count, 1);
  EXPECT_NEAR(r.pairs[0].value, 1.0, 1e-12);
  EXPECT_NEAR(std::abs(r.pairs[0].vector[0]), 1.0, 1e-12);
  EXPECT_NEAR(r.pairs[0].vector[1], 0.0, 1e-12);
}

TEST(Gevp, RandomPairResidualsOrthonormalityCompleteness) {
  std::mt19937_64 rng(17);
  const DenseMatrix a = oracle::random_spd(20, rng), b = oracle::random_spd(20, rng);
  const GevpResult r = sym_gevp(a, b);
  ASSERT_EQ(r.size() + r.infinite_count, 20);
  DenseMatrix x(20, r.size());
  for (int k = 0; k < r.size(); ++k) {
    const auto& p = r.pairs[k];
    EXPECT_LE((a * p.vector - p.value * b * p.vector).norm(), 1e-9 * (a.norm() + std::abs(p.value) * b.norm()));
    if (k > 0) EXPECT_LE(r.pairs[k - 1].value, p.value);
    x.col(k) = p.vector;
  }
  EXPECT_LE((x.transpose() * b * x - DenseMatrix::Identity(r.size(), r.size())).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Gevp, RankDeficientBCompleteness) {
  std::mt19937_64 rng(23);
  const DenseMatrix a = oracle::random_spd(15, rng);
  DenseMatrix f(15, 9);
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 9; ++j) f(i, j) = oracle::random_vector(1, rng)[0];
  const DenseMatrix b = f * f.transpose();
  const GevpResult r = sym_gevp(a, b);
  EXPECT_EQ(r.size(), 9);
  EXPECT_EQ(r.infinite_count, 6);
  for (const auto& p : r.pairs)
    EXPECT_LE((a * p.vector - p.value * b * p.vector).norm(), 1e-9 * (a.norm() + std::abs(p.value) * b.norm()));
}

TEST(Gevp, Errors) {
  DenseMatrix asym = DenseMatrix::Identity(2, 2);
  asym(0, 1) = 1.0;
  EXPECT_THROW(sym_gevp(asym, DenseMatrix::Identity(2, 2)), std::invalid_argument);
  EXPECT_THROW(sym_gevp(DenseMatrix::Identity(2, 2), DenseMatrix::Zero(2, 2)), std::invalid_argument);
  EXPECT_THROW(sym_gevp(DenseMatrix::Identity(2, 2), DenseMatrix::Identity(3, 3)), std::invalid_argument);
}

TEST(PivotedCholesky, DropsRedundantDirections) {
  std::mt19937_64 rng(31);
  DenseMatrix c(8, 5);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 5; ++j) c(i, j) = oracle::random_vector(1, rng)[0];
  DenseMatrix dup(8, 6);
  dup << c, c.col(2);  // duplicated column
  const DenseMatrix g = dup.transpose() * dup;
  const PivotedCholesky pc(g, 1e-12);
  EXPECT_EQ(pc.rank(), 5);
  EXPECT_EQ(pc.dropped(), 1);
  // the solution still solves the consistent system
  const Vector rhs = dup.transpose() * oracle::random_vector(8, rng);
  EXPECT_LE((g * pc.solve(rhs) - rhs).norm(), 1e-9 * rhs.norm());

  const DenseMatrix spd = oracle::random_spd(6, rng);
  const PivotedCholesky full(spd);
  EXPECT_EQ(full.dropped(), 0);
  const Vector b = Vector::Ones(6);
  EXPECT_LE((spd * full.solve(b) - b).norm(), 1e-12 * spd.norm());
  EXPECT_THROW(PivotedCholesky(DenseMatrix::Zero(3, 3)), SolverError);
}
