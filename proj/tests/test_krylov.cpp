#include "bosonlab/krylov.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bosonlab;

namespace {

Mat random_hermitian(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(nd(rng), nd(rng));
  return Mat(0.5 * (A + A.adjoint()));
}

Vec random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = cplx(nd(rng), nd(rng));
  return x;
}

SparseHermitian to_sparse(const Mat& A) {
  SparseHermitian S(A.rows());
  std::vector<std::pair<std::int32_t, cplx>> row;
  for (int i = 0; i < A.rows(); ++i) {
    row.clear();
    for (int j = 0; j < A.cols(); ++j)
      if (A(i, j) != cplx(0)) row.emplace_back(j, A(i, j));
    S.append_row(row);
  }
  S.finalize();
  return S;
}

Vec dense_expm(const Mat& A, double tau, const Vec& x) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  Vec phase(A.rows());
  for (int i = 0; i < A.rows(); ++i)
    phase[i] = std::exp(cplx(0.0, -tau * es.eigenvalues()[i]));
  return es.eigenvectors() * (phase.asDiagonal() * (es.eigenvectors().adjoint() * x));
}

}  // namespace

TEST(SparseHermitian, RoundTripAndDuplicateMerge) {
  SparseHermitian S(3);
  std::vector<std::pair<std::int32_t, cplx>> row;
  row = {{1, cplx(2, 0)}, {0, cplx(1, 0)}, {1, cplx(0, 1)}};  // unsorted + duplicate
  S.append_row(row);
  row = {{1, cplx(5, 0)}};
  S.append_row(row);
  row = {};
  S.append_row(row);
  S.finalize();
  Mat D = S.dense();
  EXPECT_EQ(S.nnz(), 3);
  EXPECT_EQ(D(0, 0), cplx(1, 0));
  EXPECT_EQ(D(0, 1), cplx(2, 1));
  EXPECT_EQ(D(1, 1), cplx(5, 0));
  EXPECT_EQ(D(2, 2), cplx(0, 0));
}

TEST(SparseHermitian, ApplyMatchesDense) {
  Mat A = random_hermitian(17, 3);
  SparseHermitian S = to_sparse(A);
  Vec x = random_vec(17, 4);
  Vec y(17);
  S.apply(x, y);
  EXPECT_NEAR((y - A * x).norm(), 0.0, 1e-12);
  EXPECT_GE(S.gershgorin_bound(), A.cwiseAbs().rowwise().sum().maxCoeff() - 1e-12);
}

TEST(ExpmMultiply, MatchesDenseEigensolve) {
  const int n = 60;
  Mat A = random_hermitian(n, 7);
  Vec x = random_vec(n, 8);
  SparseHermitian S = to_sparse(A);
  KrylovStats st;
  Vec y = expm_multiply(S, 0.7, x, {}, &st);
  Vec ref = dense_expm(A, 0.7, x);
  EXPECT_NEAR((y - ref).norm() / ref.norm(), 0.0, 1e-9);
  EXPECT_GE(st.substeps, 1);
  EXPECT_GT(st.matvecs, 0);
  // unitarity of the propagator
  EXPECT_NEAR(y.norm(), x.norm(), 1e-10 * x.norm());
}

TEST(ExpmMultiply, PauliOracle) {
  // e^{-i tau sx} (1, 0) = (cos tau, -i sin tau)
  Mat sx(2, 2);
  sx << 0, 1, 1, 0;
  Vec x(2);
  x << 1, 0;
  Vec y = expm_multiply(DenseHermitian(sx), 0.3, x);
  EXPECT_NEAR(std::abs(y[0] - cplx(std::cos(0.3), 0.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(y[1] - cplx(0.0, -std::sin(0.3))), 0.0, 1e-12);
}

TEST(ExpmMultiply, BackwardUndoesForward) {
  const int n = 40;
  Mat A = random_hermitian(n, 21);
  Vec x = random_vec(n, 22);
  DenseHermitian D(A);
  Vec y = expm_multiply(D, 1.3, x);
  Vec back = expm_multiply(D, -1.3, y);
  EXPECT_NEAR((back - x).norm() / x.norm(), 0.0, 1e-9);
}

TEST(ExpmMultiply, EigenvectorBreakdownIsExact) {
  // x an exact eigenvector: one Lanczos step, exact phase
  const int n = 25;
  Mat A = random_hermitian(n, 31);
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  Vec x = es.eigenvectors().col(3);
  const double lam = es.eigenvalues()[3];
  KrylovStats st;
  Vec y = expm_multiply(DenseHermitian(A), 2.0, x, {}, &st);
  EXPECT_NEAR((y - std::exp(cplx(0, -2.0 * lam)) * x).norm(), 0.0, 1e-10);
  EXPECT_DOUBLE_EQ(st.est_error, 0.0);  // happy breakdown: no reported error
}

TEST(ExpmMultiply, LongTimeSubstepping) {
  const int n = 30;
  Mat A = 20.0 * random_hermitian(n, 41);  // force many substeps
  Vec x = random_vec(n, 42);
  KrylovOptions opt;
  opt.max_dim = 12;
  KrylovStats st;
  Vec y = expm_multiply(DenseHermitian(A), 3.0, x, opt, &st);
  Vec ref = dense_expm(A, 3.0, x);
  EXPECT_GT(st.substeps, 1);
  EXPECT_NEAR((y - ref).norm() / ref.norm(), 0.0, 1e-7);
  EXPECT_LE(st.est_error, 10.0 * opt.tol);
}

TEST(ExpmMultiply, TauZeroIsIdentity) {
  Mat A = random_hermitian(9, 51);
  Vec x = random_vec(9, 52);
  Vec y = expm_multiply(DenseHermitian(A), 0.0, x);
  EXPECT_EQ((y - x).norm(), 0.0);
}

TEST(ExpmMultiply, RejectsBadArguments) {
  Mat A = random_hermitian(5, 61);
  Vec x = random_vec(4, 62);
  EXPECT_THROW(expm_multiply(DenseHermitian(A), 1.0, x), config_error);
  KrylovOptions opt;
  opt.max_dim = 1;
  Vec x5 = random_vec(5, 63);
  EXPECT_THROW(expm_multiply(DenseHermitian(A), 1.0, x5, opt), config_error);
}
