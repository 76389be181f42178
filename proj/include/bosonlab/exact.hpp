#pragma once
// Exact many-body dynamics on the truncated Fock space.
//
// Hamiltonian (unit-CCR ladder operators):
//   H = sum_ij (-Lap_h)_ij a_i^dag a_j  +  sum_i W_i n_i
//       + (1/2N) sum_uv V(u-v) a_u^dag a_v^dag a_v a_u.
// The interaction is diagonal in the occupation basis; restricted to the
// N-particle sector this is the mean-field Hamiltonian
// sum_j (-Lap_h + W)_j + (1/N) sum_{i<j} V(x_i - x_j), and coherent-state
// expectation values reproduce the h-weighted Hartree convolution.

#include "bosonlab/fock.hpp"
#include "bosonlab/krylov.hpp"
#include "bosonlab/lattice.hpp"

#include <functional>

namespace bosonlab {

// W_ext may be empty (no external potential)
inline SparseHermitian build_hamiltonian(const FockBasis& B, const Grid1D& grid,
                                         const PairPotential& V, const RVec& W_ext,
                                         double coupling_N) {
  require(grid.M == B.modes(), "build_hamiltonian: mode count mismatch");
  require(V.grid == grid, "build_hamiltonian: potential grid mismatch");
  require(W_ext.size() == 0 || W_ext.size() == grid.M,
          "build_hamiltonian: external potential size mismatch");
  require(coupling_N > 0, "build_hamiltonian: coupling N must be positive");
  const RMat T = kinetic_matrix(grid);
  const int M = grid.M;
  const double lam = 0.5 / coupling_N;

  SparseHermitian H(B.dim());
  std::vector<std::pair<std::int32_t, cplx>> row;
  for (index_t idx = 0; idx < B.dim(); ++idx) {
    row.clear();
    const std::uint8_t* n = B.occ(idx);
    double diag = 0.0;
    for (int i = 0; i < M; ++i) {
      if (n[i] == 0) continue;
      diag += T(i, i) * n[i];
      if (W_ext.size()) diag += W_ext[i] * n[i];
      diag += lam * V.v[0] * double(n[i]) * (n[i] - 1);
      for (int j = 0; j < M; ++j)
        if (j != i && n[j]) diag += lam * V(i, j) * double(n[i]) * n[j];
    }
    row.emplace_back(static_cast<std::int32_t>(idx), diag);
    // hopping a_i^dag a_j, i != j: column idx + e_j - e_i, needs n_i >= 1
    for (int i = 0; i < M; ++i) {
      if (n[i] == 0) continue;
      for (int j = 0; j < M; ++j) {
        if (j == i || T(i, j) == 0.0) continue;
        const index_t mid = B.shifted_index(idx, i, -1);
        const index_t src = B.shifted_index(mid, j, +1);
        row.emplace_back(static_cast<std::int32_t>(src),
                         T(i, j) * std::sqrt(double(n[i])) * std::sqrt(double(n[j] + 1)));
      }
    }
    H.append_row(row);
  }
  H.finalize();
  return H;
}

inline FockVector propagate(const SparseHermitian& H, const FockVector& v, double t,
                            const KrylovOptions& opt = {}) {
  return FockVector(v.basis, expm_multiply(H, t, v.amp, opt));
}

// Gamma^(1)(x;y) = <a_y^dag a_x> / <N>, plain matrix trace 1
inline Mat reduced_density_1(const FockVector& v) {
  const int M = v.basis->modes();
  std::vector<FockVector> low;
  low.reserve(M);
  for (int x = 0; x < M; ++x) low.push_back(apply_lower(v, x));
  Mat G(M, M);
  double tr = 0.0;
  for (int x = 0; x < M; ++x) {
    for (int y = 0; y < M; ++y) G(x, y) = low[y].amp.dot(low[x].amp);
    tr += G(x, x).real();
  }
  if (tr <= 1e-14) throw numeric_error("reduced_density_1: no particle content");
  return G / tr;
}

// Gamma^(2)[(x1,x2),(y1,y2)] = <a_{y1}^dag a_{y2}^dag a_{x2} a_{x1}> / <N(N-1)>,
// indices flattened as x1*M + x2; plain matrix trace 1
inline Mat reduced_density_2(const FockVector& v) {
  const int M = v.basis->modes();
  std::vector<FockVector> low;
  low.reserve(M * M);
  for (int x1 = 0; x1 < M; ++x1) {
    FockVector first = apply_lower(v, x1);
    for (int x2 = 0; x2 < M; ++x2) low.push_back(apply_lower(first, x2));
  }
  Mat G(M * M, M * M);
  double tr = 0.0;
  for (int I = 0; I < M * M; ++I) {
    for (int J = 0; J < M * M; ++J) G(I, J) = low[J].amp.dot(low[I].amp);
    tr += G(I, I).real();
  }
  if (tr <= 1e-12) throw numeric_error("reduced_density_2: fewer than two particles");
  return G / tr;
}

// projector onto phi as a trace-one density matrix, P = h * phi phi^dag
inline Mat rank_one_density(const Orbital& phi) {
  return phi.grid.h * (phi.c * phi.c.adjoint());
}

// sum of |eigenvalues| of the Hermitian difference A - B
inline double trace_norm_distance(const Mat& A, const Mat& B) {
  require(A.rows() == B.rows() && A.cols() == B.cols(), "trace_norm_distance: shape mismatch");
  Mat C = A - B;
  const double scale = 1.0 + A.cwiseAbs().maxCoeff() + B.cwiseAbs().maxCoeff();
  if ((C - C.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw numeric_error("trace_norm_distance: inputs are not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (C + C.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

struct BbgkyResidual {
  double residual = 0.0;  // Frobenius norm of the defect
  double fd_norm = 0.0;   // norm of the centered time derivative
  double rhs_norm = 0.0;  // norm of the commutator + collision side
};

// Defect of the first hierarchy equation on a sector-pure trajectory:
//   d/dt gamma1 = -i ( [T, gamma1] + ((N-1)/N) * C ),
//   C(x,y) = sum_v (V(x-v) - V(y-v)) * gamma2[(x,v),(y,v)],
// with the centered 3-point derivative from gamma1 at t -/+ dt.
inline BbgkyResidual bbgky_residual_1(const Mat& g1_minus, const Mat& g1_mid, const Mat& g1_plus,
                                      const Mat& g2_mid, const RMat& T, const PairPotential& V,
                                      double N, double dt) {
  const int M = T.rows();
  require(g1_mid.rows() == M && g2_mid.rows() == M * M, "bbgky_residual_1: shape mismatch");
  require(dt > 0, "bbgky_residual_1: dt must be positive");
  Mat fd = (g1_plus - g1_minus) / (2.0 * dt);
  Mat comm = T.cast<cplx>() * g1_mid - g1_mid * T.cast<cplx>();
  Mat coll(M, M);
  for (int x = 0; x < M; ++x)
    for (int y = 0; y < M; ++y) {
      cplx acc = 0.0;
      for (int v = 0; v < M; ++v)
        acc += (V(x, v) - V(y, v)) * g2_mid(x * M + v, y * M + v);
      coll(x, y) = acc;
    }
  Mat rhs = cplx(0, -1) * (comm + ((N - 1.0) / N) * coll);
  BbgkyResidual r;
  r.residual = (fd - rhs).norm();
  r.fd_norm = fd.norm();
  r.rhs_norm = rhs.norm();
  return r;
}

// <N> in the fluctuation frame: W(sqrt(N) phi_t)^* e^{-iHt} W(sqrt(N) phi_0) Omega,
// evaluated at the requested times (nondecreasing, starting at >= 0)
inline std::vector<double> fluctuation_number_series(
    const SparseHermitian& H, BasisPtr basis, const std::function<Orbital(double)>& phi_of_t,
    double N, const std::vector<double>& times, const KrylovOptions& opt = {}) {
  require(!times.empty(), "fluctuation_number_series: empty time grid");
  const double sqn = std::sqrt(N);
  auto scaled = [&](const Orbital& o, double s) { return Orbital(o.grid, s * o.c); };
  FockVector psi = weyl_apply(FockVector::vacuum(basis), scaled(phi_of_t(0.0), sqn), opt);
  std::vector<double> out;
  out.reserve(times.size());
  double t_cur = 0.0;
  for (double t : times) {
    require(t >= t_cur, "fluctuation_number_series: times must be nondecreasing");
    if (t > t_cur) {
      psi = propagate(H, psi, t - t_cur, opt);
      t_cur = t;
    }
    FockVector fluct = weyl_apply(psi, scaled(phi_of_t(t), -sqn), opt);
    out.push_back(number_expectation(fluct));
  }
  return out;
}

}  // namespace bosonlab
