#include "bosonlab/exact.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bosonlab;

namespace {

std::mt19937_64 rng(777);

Orbital random_orbital(const Grid1D& g) {
  std::normal_distribution<double> nd;
  Vec c(g.M);
  for (int i = 0; i < g.M; ++i) c[i] = cplx(nd(rng), nd(rng));
  return Orbital(g, c);
}

FockVector random_sector_state(BasisPtr b, int sector) {
  std::normal_distribution<double> nd;
  FockVector v = FockVector::zero(b);
  for (index_t i = b->sector_begin(sector); i < b->sector_end(sector); ++i)
    v.amp[i] = cplx(nd(rng), nd(rng));
  v.amp /= v.amp.norm();
  return v;
}

// eigensolve oracle for e^{-iHt} v, viable only for tiny bases
Vec dense_propagate(const Mat& H, const Vec& v, double t) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  Vec w = es.eigenvectors().adjoint() * v;
  for (int i = 0; i < w.size(); ++i) w[i] *= std::exp(cplx(0, -es.eigenvalues()[i] * t));
  return es.eigenvectors() * w;
}

struct Model {
  Grid1D g;
  PairPotential V;
  RVec W;
  Model(int M, double h, double v0, double w0)
      : g(M, h),
        V(PairPotential::from_profile(g, [&](double d) { return v0 * std::exp(-d * d); })),
        W(RVec::Zero(M)) {
    for (int i = 0; i < M; ++i) W[i] = w0 * std::cos(2.0 * M_PI * g.x(i) / g.length());
  }
};

}  // namespace

TEST(Hamiltonian, HermitianAndSectorPreserving) {
  Model s(3, 0.6, 0.8, 0.3);
  auto b = std::make_shared<FockBasis>(3, 4);
  SparseHermitian H = build_hamiltonian(*b, s.g, s.V, s.W, 2.0);
  Mat D = H.dense();
  EXPECT_LE((D - D.adjoint()).norm(), 1e-12 * D.norm());
  for (index_t j = 0; j < b->dim(); ++j)
    for (index_t i = 0; i < b->dim(); ++i)
      if (b->total(i) != b->total(j)) EXPECT_EQ(D(i, j), cplx(0, 0));
}

TEST(Hamiltonian, SingleParticleReducesToOneBody) {
  Model s(4, 0.5, 1.2, 0.4);
  auto b = std::make_shared<FockBasis>(4, 1);
  SparseHermitian H = build_hamiltonian(*b, s.g, s.V, s.W, 1.0);

  Orbital phi = normalized(random_orbital(s.g));
  FockVector psi = product_state(b, phi, 1);
  FockVector out = propagate(H, psi, 0.9);

  // the one-particle sector sees only kinetic + external terms
  Mat Hob = kinetic_matrix(s.g).cast<cplx>();
  Hob += s.W.cast<cplx>().asDiagonal();
  std::array<std::uint8_t, 4> unit{};
  Vec c0(4), ct(4);
  for (int i = 0; i < 4; ++i) {
    unit.fill(0);
    unit[i] = 1;
    c0[i] = psi.amp[b->index_of(unit)];
  }
  Vec oracle = dense_propagate(Hob, c0, 0.9);
  for (int i = 0; i < 4; ++i) {
    unit.fill(0);
    unit[i] = 1;
    ct[i] = out.amp[b->index_of(unit)];
  }
  EXPECT_LE((ct - oracle).norm(), 1e-9);
}

TEST(Propagate, MatchesDenseOracle) {
  Model s(2, 0.7, 1.5, 0.2);
  auto b = std::make_shared<FockBasis>(2, 2);
  SparseHermitian H = build_hamiltonian(*b, s.g, s.V, s.W, 2.0);

  FockVector psi = random_sector_state(b, 2);
  FockVector out = propagate(H, psi, 1.3);
  Vec oracle = dense_propagate(H.dense(), psi.amp, 1.3);
  EXPECT_LE((out.amp - oracle).norm(), 1e-9);
}

TEST(Propagate, ConservesNormAndEnergy) {
  Model s(2, 0.8, 0.9, 0.5);
  auto b = std::make_shared<FockBasis>(2, 3);
  SparseHermitian H = build_hamiltonian(*b, s.g, s.V, s.W, 3.0);

  FockVector psi = random_sector_state(b, 3);
  Vec w(b->dim());
  H.apply(psi.amp, w);
  const double e0 = std::real(inner(psi, FockVector(b, w)));
  FockVector out = propagate(H, psi, 0.7);
  H.apply(out.amp, w);
  const double e1 = std::real(inner(out, FockVector(b, w)));
  EXPECT_NEAR(out.norm(), 1.0, 1e-10);
  EXPECT_NEAR(e1, e0, 1e-9 * std::max(1.0, std::abs(e0)));
}

TEST(ReducedDensity, ProductStateGivesRankOne) {
  Grid1D g(3, 0.5);
  Orbital phi = normalized(random_orbital(g));
  auto b = std::make_shared<FockBasis>(3, 4);
  FockVector psi = product_state(b, phi, 4);

  Mat g1 = reduced_density_1(psi);
  EXPECT_NEAR(std::abs(g1.trace()), 1.0, 1e-12);
  EXPECT_LE((g1 - g1.adjoint()).norm(), 1e-12);
  EXPECT_LE(trace_norm_distance(g1, rank_one_density(phi)), 1e-10);
}

TEST(ReducedDensity, PartialTraceOfTwoBodyGivesOneBody) {
  auto b = std::make_shared<FockBasis>(3, 3);
  FockVector psi = random_sector_state(b, 3);

  Mat g1 = reduced_density_1(psi);
  Mat g2 = reduced_density_2(psi);
  const int M = 3;
  Mat traced = Mat::Zero(M, M);
  for (int x = 0; x < M; ++x)
    for (int y = 0; y < M; ++y)
      for (int w = 0; w < M; ++w) traced(x, y) += g2(x * M + w, y * M + w);
  EXPECT_LE((traced - g1).norm(), 1e-12);
}

TEST(Bbgky, ResidualQuartersWithTimestep) {
  Model s(2, 0.9, 1.1, 0.0);
  auto b = std::make_shared<FockBasis>(2, 2);
  const double N = 2.0;
  SparseHermitian Hs = build_hamiltonian(*b, s.g, s.V, s.W, N);
  Mat H = Hs.dense();
  RMat T = kinetic_matrix(s.g);

  Orbital phi = normalized(Orbital(s.g, (Vec(2) << cplx(1.0, 0.3), cplx(0.4, -0.2)).finished()));
  FockVector psi0 = product_state(b, phi, 2);
  const double t = 0.3;

  auto residual_at = [&](double dt) {
    Vec minus = dense_propagate(H, psi0.amp, t - dt);
    Vec mid = dense_propagate(H, psi0.amp, t);
    Vec plus = dense_propagate(H, psi0.amp, t + dt);
    Mat g1m = reduced_density_1(FockVector(b, minus));
    Mat g1 = reduced_density_1(FockVector(b, mid));
    Mat g1p = reduced_density_1(FockVector(b, plus));
    Mat g2 = reduced_density_2(FockVector(b, mid));
    return bbgky_residual_1(g1m, g1, g1p, g2, T, s.V, N, dt);
  };

  BbgkyResidual coarse = residual_at(1e-2);
  BbgkyResidual fine = residual_at(5e-3);
  EXPECT_GT(coarse.rhs_norm, 1e-3);  // dynamics actually moving
  EXPECT_LE(coarse.residual, 1e-3 * coarse.rhs_norm);
  EXPECT_NEAR(coarse.residual / fine.residual, 4.0, 0.8);
}

TEST(FluctuationSeries, VanishesAtTimeZero) {
  Model s(2, 1.0, 0.6, 0.0);
  const double N = 2.0;
  Orbital phi = normalized(random_orbital(s.g));
  auto b = std::make_shared<FockBasis>(2, adequate_cutoff(N));
  SparseHermitian H = build_hamiltonian(*b, s.g, s.V, s.W, N);

  auto traj = [&](double) { return phi; };
  std::vector<double> nums = fluctuation_number_series(H, b, traj, N, {0.0});
  ASSERT_EQ(nums.size(), 1u);
  EXPECT_LE(nums[0], 1e-8);
}
