#pragma once
// Quadratic (Bogoliubov) fluctuation dynamics around a mean-field trajectory.
//
// The generator at time t is built from phi_t:
//   D = -Lap_h + diag(V * |phi|^2 + W_ext) + X,  X(x,y) = h V(x-y) phi(x) conj(phi(y)),
//   B(x,y) = h V(x-y) conj(phi(x)) conj(phi(y)),
// D Hermitian, B symmetric. The classical flow theta(t;s) on pairs (f, g)
// solves i d/dt theta = theta A(t) with A = [[D, -conj(B)], [B, -conj(D)]],
// theta(s;s) = 1. A satisfies A^dag S = S A with S = diag(1, -1), so the flow
// preserves theta^dag S theta = S; it also preserves the pairing block
// structure theta = [[U, conj(W)], [W, conj(U)]].
//
// On Fock space the same data defines
//   L(t) = sum D_ij a_i^dag a_j + (1/2) sum (conj(B)_ij a_i^dag a_j^dag + B_ij a_i a_j),
// and the two are linked by U(t;s) A(f,g) U(t;s)^* = A(theta(t;s)(f,g)) for
// the field A(f,g) = a(f) + a^*(conj(g)).

#include "bosonlab/fock.hpp"
#include "bosonlab/krylov.hpp"
#include "bosonlab/lattice.hpp"
#include "bosonlab/meanfield.hpp"

#include <utility>

namespace bosonlab {

struct QuadraticGenerator {
  Mat D;  // Hermitian one-body block
  Mat B;  // symmetric pairing block
};

inline QuadraticGenerator bogoliubov_generator(const Orbital& phi, const PairPotential& V,
                                               const RVec& W_ext) {
  const Grid1D& g = phi.grid;
  require(V.grid == g, "bogoliubov_generator: potential grid mismatch");
  require(W_ext.size() == 0 || W_ext.size() == g.M, "bogoliubov_generator: W_ext size mismatch");
  const int M = g.M;
  QuadraticGenerator gen;
  gen.D = kinetic_matrix(g).cast<cplx>();
  const RVec conv = convolve(V, RVec(phi.c.cwiseAbs2()));
  for (int i = 0; i < M; ++i) gen.D(i, i) += conv[i] + (W_ext.size() ? W_ext[i] : 0.0);
  gen.B.resize(M, M);
  for (int x = 0; x < M; ++x)
    for (int y = 0; y < M; ++y) {
      const double vxy = g.h * V(x, y);
      gen.D(x, y) += vxy * phi.c[x] * std::conj(phi.c[y]);
      gen.B(x, y) = vxy * std::conj(phi.c[x]) * std::conj(phi.c[y]);
    }
  return gen;
}

inline Mat assemble_flow_matrix(const QuadraticGenerator& gen) {
  const int M = gen.D.rows();
  Mat A(2 * M, 2 * M);
  A.topLeftCorner(M, M) = gen.D;
  A.topRightCorner(M, M) = -gen.B.conjugate();
  A.bottomLeftCorner(M, M) = gen.B;
  A.bottomRightCorner(M, M) = -gen.D.conjugate();
  return A;
}

// theta(t;s) solving theta' = -i A(t) theta by classical RK4; phi_t
// interpolated from the trajectory
inline Mat theta_evolve(const Trajectory& traj, const PairPotential& V, const RVec& W_ext,
                        double s, double t, double dt) {
  require(t >= s, "theta_evolve: forward propagation only");
  require(dt > 0.0, "theta_evolve: dt > 0 required");
  const int M = traj.grid.M;
  Mat theta = Mat::Identity(2 * M, 2 * M);
  if (t == s) return theta;
  const int steps = std::max(1, static_cast<int>(std::ceil((t - s) / dt - 1e-12)));
  const double step = (t - s) / steps;
  auto A_at = [&](double tau) {
    return assemble_flow_matrix(bogoliubov_generator(traj.at(tau), V, W_ext));
  };
  const cplx mi(0.0, -1.0);
  for (int k = 0; k < steps; ++k) {
    const double tau = s + k * step;
    const Mat A1 = A_at(tau), A2 = A_at(tau + 0.5 * step), A4 = A_at(tau + step);
    const Mat k1 = mi * (A1 * theta);
    const Mat k2 = mi * (A2 * (theta + 0.5 * step * k1));
    const Mat k3 = mi * (A2 * (theta + 0.5 * step * k2));
    const Mat k4 = mi * (A4 * (theta + step * k3));
    theta += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return theta;
}

// free flow (V = 0, W = 0): blockdiag(e^{-itK}, e^{+itK}) with K = -Lap_h
inline Mat theta_free(const Grid1D& g, double t) {
  Eigen::SelfAdjointEigenSolver<RMat> es(kinetic_matrix(g));
  Vec up(g.M), dn(g.M);
  for (int i = 0; i < g.M; ++i) {
    up[i] = std::exp(cplx(0.0, -t * es.eigenvalues()[i]));
    dn[i] = std::conj(up[i]);
  }
  const Mat Q = es.eigenvectors().cast<cplx>();
  Mat theta = Mat::Zero(2 * g.M, 2 * g.M);
  theta.topLeftCorner(g.M, g.M) = Q * up.asDiagonal() * Q.transpose();
  theta.bottomRightCorner(g.M, g.M) = Q * dn.asDiagonal() * Q.transpose();
  return theta;
}

inline Mat symplectic_form(int M) {
  Mat S = Mat::Identity(2 * M, 2 * M);
  S.bottomRightCorner(M, M) *= -1.0;
  return S;
}

// || theta^dag S theta - S ||_F, conserved quantity of the flow
inline double symplectic_defect(const Mat& theta) {
  const int M = theta.rows() / 2;
  const Mat S = symplectic_form(M);
  return (theta.adjoint() * S * theta - S).norm();
}

// || theta - [[U, conj(W)], [W, conj(U)]] ||_F for the named blocks
inline double pairing_structure_defect(const Mat& theta) {
  const int M = theta.rows() / 2;
  double d2 = 0.0;
  d2 += (theta.topRightCorner(M, M) - theta.bottomLeftCorner(M, M).conjugate()).squaredNorm();
  d2 += (theta.bottomRightCorner(M, M) - theta.topLeftCorner(M, M).conjugate()).squaredNorm();
  return std::sqrt(d2);
}

// symplectic inverse theta^{-1} = S theta^dag S (exact once theta^dag S theta = S)
inline Mat theta_inverse(const Mat& theta) {
  const int M = theta.rows() / 2;
  const Mat S = symplectic_form(M);
  return S * theta.adjoint() * S;
}

// matrix hyperbolic pair for a (bare) kernel k:
//   cosh_k = sum_n (k conj(k))^n / (2n)!,   sinh_k = sum_n (k conj(k))^n k / (2n+1)!
inline std::pair<Mat, Mat> cosh_sinh(const Mat& k) {
  require(k.rows() == k.cols(), "cosh_sinh: square kernel required");
  const int M = k.rows();
  const Mat P = k * k.conjugate();
  Mat C = Mat::Identity(M, M), S = k;
  Mat tc = Mat::Identity(M, M), ts = k;
  for (int n = 1; n <= 300; ++n) {
    tc = tc * P / (double(2 * n - 1) * double(2 * n));
    ts = P * ts / (double(2 * n) * double(2 * n + 1));
    C += tc;
    S += ts;
    const double tn = tc.norm() + ts.norm();
    if (!std::isfinite(tn)) throw numeric_error("cosh_sinh: series diverged");
    if (tn <= 1e-16 * (C.norm() + S.norm())) return {C, S};
  }
  throw numeric_error("cosh_sinh: series did not converge in 300 terms");
}

// L(t) on the truncated Fock space; pair terms leaving the cutoff are dropped,
// so callers must leave sector headroom above the occupied states
inline SparseHermitian build_quadratic_hamiltonian(const FockBasis& B,
                                                   const QuadraticGenerator& gen) {
  const int M = B.modes();
  require(gen.D.rows() == M && gen.B.rows() == M, "build_quadratic_hamiltonian: size mismatch");
  SparseHermitian L(B.dim());
  std::vector<std::pair<std::int32_t, cplx>> row;
  for (index_t idx = 0; idx < B.dim(); ++idx) {
    row.clear();
    const std::uint8_t* n = B.occ(idx);
    // one-body: <idx| a_i^dag a_j |idx + e_j - e_i>
    cplx diag = 0.0;
    for (int i = 0; i < M; ++i) {
      if (n[i]) diag += gen.D(i, i) * double(n[i]);
      for (int j = 0; j < M; ++j) {
        if (j == i || n[i] == 0 || gen.D(i, j) == cplx(0)) continue;
        const index_t src = B.shifted_index(B.shifted_index(idx, i, -1), j, +1);
        row.emplace_back(static_cast<std::int32_t>(src),
                         gen.D(i, j) * std::sqrt(double(n[i])) * std::sqrt(double(n[j] + 1)));
      }
    }
    row.emplace_back(static_cast<std::int32_t>(idx), diag);
    // pair creation (1/2) conj(B)_ij a_i^dag a_j^dag: column idx - e_i - e_j
    for (int i = 0; i < M; ++i) {
      if (n[i] == 0) continue;
      for (int j = 0; j < M; ++j) {
        if (gen.B(i, j) == cplx(0)) continue;
        double amp;
        index_t src;
        if (i == j) {
          if (n[i] < 2) continue;
          amp = std::sqrt(double(n[i]) * double(n[i] - 1));
          src = B.shifted_index(B.shifted_index(idx, i, -1), i, -1);
        } else {
          if (n[j] == 0) continue;
          amp = std::sqrt(double(n[i])) * std::sqrt(double(n[j]));
          src = B.shifted_index(B.shifted_index(idx, i, -1), j, -1);
        }
        row.emplace_back(static_cast<std::int32_t>(src),
                         0.5 * std::conj(gen.B(i, j)) * amp);
      }
    }
    // pair annihilation (1/2) B_ij a_i a_j: column idx + e_i + e_j (if inside)
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j < M; ++j) {
        if (gen.B(i, j) == cplx(0)) continue;
        double amp;
        index_t src;
        if (i == j) {
          src = B.shifted_index(idx, i, +1);
          if (src >= 0) src = B.shifted_index(src, i, +1);
          amp = std::sqrt(double(n[i] + 2) * double(n[i] + 1));
        } else {
          src = B.shifted_index(idx, i, +1);
          if (src >= 0) src = B.shifted_index(src, j, +1);
          amp = std::sqrt(double(n[i] + 1)) * std::sqrt(double(n[j] + 1));
        }
        if (src < 0) continue;  // truncated away
        row.emplace_back(static_cast<std::int32_t>(src), 0.5 * gen.B(i, j) * amp);
      }
    }
    L.append_row(row);
  }
  L.finalize();
  return L;
}

// midpoint-Magnus propagation of psi under L(t) from t0 to t1 (t1 >= t0)
inline FockVector quadratic_evolve(const FockVector& psi0, const Trajectory& traj,
                                   const PairPotential& V, const RVec& W_ext, double t0, double t1,
                                   double dt, const KrylovOptions& kopt = {}) {
  require(t1 >= t0, "quadratic_evolve: forward propagation only");
  require(dt > 0.0, "quadratic_evolve: dt > 0 required");
  FockVector psi = psi0;
  if (t1 == t0) return psi;
  const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt - 1e-12)));
  const double step = (t1 - t0) / steps;
  for (int k = 0; k < steps; ++k) {
    const double mid = t0 + (k + 0.5) * step;
    const auto gen = bogoliubov_generator(traj.at(mid), V, W_ext);
    const SparseHermitian L = build_quadratic_hamiltonian(*psi.basis, gen);
    psi.amp = expm_multiply(L, step, psi.amp, kopt);
  }
  return psi;
}

// field operator A(f, g) = a(f) + a^*(conj(g)) applied to psi
inline FockVector apply_field_pair(const FockVector& psi, const Orbital& f, const Orbital& g) {
  FockVector out = apply_smeared_lower(psi, f);
  out.amp += apply_smeared_raise(psi, Orbital(g.grid, g.c.conjugate())).amp;
  return out;
}

// relative defect of U A(f,g) psi = A(theta (f,g)) U psi at time t, starting
// from s = 0; one number per test state
inline double verify_bogoliubov_action(const FockVector& psi, const Orbital& f, const Orbital& g,
                                       const Trajectory& traj, const PairPotential& V,
                                       const RVec& W_ext, double t, double dt,
                                       const KrylovOptions& kopt = {}) {
  const Grid1D& grid = traj.grid;
  const int M = grid.M;
  const Mat theta = theta_evolve(traj, V, W_ext, 0.0, t, dt);
  Vec fg(2 * M);
  fg.head(M) = f.c;
  fg.tail(M) = g.c;
  const Vec mapped = theta * fg;
  const Orbital ft(grid, mapped.head(M));
  const Orbital gt(grid, mapped.tail(M));

  const FockVector rhs0 = apply_field_pair(psi, f, g);
  const double ref = rhs0.norm();
  if (ref <= 1e-14) throw numeric_error("verify_bogoliubov_action: field annihilates test state");
  const FockVector rhs = quadratic_evolve(rhs0, traj, V, W_ext, 0.0, t, dt, kopt);
  const FockVector psi_t = quadratic_evolve(psi, traj, V, W_ext, 0.0, t, dt, kopt);
  const FockVector lhs = apply_field_pair(psi_t, ft, gt);
  return (lhs.amp - rhs.amp).norm() / ref;
}

// Variance of the fluctuation observable in the Bogoliubov frame:
//   q = O phi_t, (u, .) = theta^{-1}(q, conj(q)), (p, .) = theta^{-1}(phi_t, conj(phi_t)),
//   sigma^2 = ||u||_h^2 - (Re<u, p>_h)^2 / ||p||_h^2.
// At t = 0 this is the one-particle variance <phi, O^2 phi> - <phi, O phi>^2;
// it vanishes identically for O = 1.
inline double clt_variance(const Mat& theta, const Mat& O, const Orbital& phi_t) {
  const Grid1D& g = phi_t.grid;
  const int M = g.M;
  require(theta.rows() == 2 * M && O.rows() == M, "clt_variance: size mismatch");
  const Mat inv = theta_inverse(theta);
  const Vec q = O * phi_t.c;
  Vec pq(2 * M), pp(2 * M);
  pq.head(M) = q;
  pq.tail(M) = q.conjugate();
  pp.head(M) = phi_t.c;
  pp.tail(M) = phi_t.c.conjugate();
  const Vec uu = inv * pq;
  const Vec vv = inv * pp;
  const Vec u = uu.head(M), p = vv.head(M);
  const double u2 = g.h * u.squaredNorm();
  const double p2 = g.h * p.squaredNorm();
  if (p2 <= 1e-14) throw numeric_error("clt_variance: degenerate reference pair");
  const double cross = (g.h * u.dot(p)).real();
  return std::max(0.0, u2 - cross * cross / p2);
}

}  // namespace bosonlab
