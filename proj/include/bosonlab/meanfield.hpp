#pragma once
// Mean-field (Hartree / Gross-Pitaevskii) dynamics and ground states.
//
// Evolution uses Strang splitting: exact kinetic half-steps through the
// eigendecomposition of -Lap_h, and an exact pointwise phase for the
// density-dependent potential (the density is invariant under that phase,
// so the nonlinear substep commits no splitting error of its own).

#include "bosonlab/lattice.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace bosonlab {

// maps the site density |phi|^2 to the self-consistent potential
using DensityPotential = std::function<RVec(const RVec&)>;

struct MeanFieldOptions {
  double dt = 1e-3;
};

// orbital samples on a uniform time grid; linear interpolation in between
struct Trajectory {
  Grid1D grid;
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Vec> nodes;

  Trajectory(const Grid1D& g, double t0_, double dt_) : grid(g), t0(t0_), dt(dt_) {}

  double t_end() const { return t0 + dt * (static_cast<double>(nodes.size()) - 1.0); }

  Orbital at(double t) const {
    require(nodes.size() >= 1, "Trajectory: empty");
    if (nodes.size() == 1) return Orbital(grid, nodes[0]);
    const double tol = 1e-9 * (1.0 + std::abs(t_end()));
    require(t >= t0 - tol && t <= t_end() + tol, "Trajectory: time outside stored range");
    double s = (t - t0) / dt;
    s = std::min(std::max(s, 0.0), static_cast<double>(nodes.size() - 1));
    const int k = std::min(static_cast<int>(s), static_cast<int>(nodes.size()) - 2);
    const double w = s - k;
    return Orbital(grid, (1.0 - w) * nodes[k] + w * nodes[k + 1]);
  }
};

// i d/dt phi = -Lap_h phi + pot(|phi|^2) phi, from t0 = 0 to t_final
inline Trajectory evolve_mean_field(const Orbital& phi0, double t_final,
                                    const DensityPotential& pot,
                                    const MeanFieldOptions& opt = {}) {
  require(opt.dt > 0.0, "evolve_mean_field: dt > 0 required");
  require(t_final >= 0.0, "evolve_mean_field: t_final >= 0 required");
  const Grid1D& g = phi0.grid;
  const int steps = std::max(1, static_cast<int>(std::ceil(t_final / opt.dt - 1e-12)));
  const double dt = t_final > 0.0 ? t_final / steps : opt.dt;

  Eigen::SelfAdjointEigenSolver<RMat> es(kinetic_matrix(g));
  if (es.info() != Eigen::Success) throw numeric_error("evolve_mean_field: kinetic eigensolve failed");
  Vec phase(g.M);
  for (int i = 0; i < g.M; ++i) phase[i] = std::exp(cplx(0.0, -0.5 * dt * es.eigenvalues()[i]));
  const Mat K_half =
      es.eigenvectors().cast<cplx>() * phase.asDiagonal() * es.eigenvectors().transpose().cast<cplx>();

  Trajectory traj(g, 0.0, dt);
  traj.nodes.reserve(steps + 1);
  traj.nodes.push_back(phi0.c);
  if (t_final == 0.0) return traj;

  Vec c = phi0.c;
  for (int s = 0; s < steps; ++s) {
    c = K_half * c;
    const RVec rho = c.cwiseAbs2();
    const RVec u = pot(rho);
    for (int i = 0; i < g.M; ++i) c[i] *= std::exp(cplx(0.0, -dt * u[i]));
    c = K_half * c;
    traj.nodes.push_back(c);
  }
  return traj;
}

inline Trajectory hartree_evolve(const Orbital& phi0, const PairPotential& V, const RVec& W_ext,
                                 double t_final, const MeanFieldOptions& opt = {}) {
  require(V.grid == phi0.grid, "hartree_evolve: potential grid mismatch");
  require(W_ext.size() == 0 || W_ext.size() == phi0.grid.M, "hartree_evolve: W_ext size mismatch");
  DensityPotential pot = [&V, &W_ext](const RVec& rho) {
    RVec u = convolve(V, rho);
    if (W_ext.size()) u += W_ext;
    return u;
  };
  return evolve_mean_field(phi0, t_final, pot, opt);
}

inline Trajectory gp_evolve(const Orbital& phi0, double mu, const RVec& W_ext, double t_final,
                            const MeanFieldOptions& opt = {}) {
  require(W_ext.size() == 0 || W_ext.size() == phi0.grid.M, "gp_evolve: W_ext size mismatch");
  DensityPotential pot = [mu, &W_ext](const RVec& rho) {
    RVec u = mu * rho;
    if (W_ext.size()) u += W_ext;
    return u;
  };
  return evolve_mean_field(phi0, t_final, pot, opt);
}

// h * sum_i |phi_{i+1} - phi_i|^2 / h^2, consistent with kinetic_matrix by
// summation by parts on the periodic grid
inline double kinetic_energy(const Orbital& phi) {
  const int M = phi.grid.M;
  double acc = 0.0;
  for (int i = 0; i < M; ++i) {
    const int ip = (i + 1 == M) ? 0 : i + 1;
    acc += std::norm(phi.c[ip] - phi.c[i]);
  }
  return acc / phi.grid.h;
}

// E[phi] = <phi, -Lap phi> + <phi, W phi> + (1/2) <|phi|^2, V * |phi|^2>
inline double hartree_energy(const Orbital& phi, const PairPotential& V, const RVec& W_ext) {
  const RVec rho = phi.c.cwiseAbs2();
  double e = kinetic_energy(phi);
  if (W_ext.size()) e += phi.grid.h * rho.dot(W_ext);
  e += 0.5 * phi.grid.h * rho.dot(convolve(V, rho));
  return e;
}

// E[phi] = <phi, -Lap phi> + <phi, W phi> + (mu/2) h sum |phi|^4
inline double gp_energy(const Orbital& phi, double mu, const RVec& W_ext) {
  const RVec rho = phi.c.cwiseAbs2();
  double e = kinetic_energy(phi);
  if (W_ext.size()) e += phi.grid.h * rho.dot(W_ext);
  e += 0.5 * mu * phi.grid.h * rho.squaredNorm();
  return e;
}

struct MinimizeOptions {
  double tol = 1e-10;   // residual norm ||(H_phi - lambda) phi||_h
  int max_iter = 20000;
  double step0 = 0.1;
};

struct MinimizeResult {
  Orbital phi;
  double energy = 0.0;
  double lambda = 0.0;    // Lagrange multiplier (chemical potential)
  double residual = 0.0;  // ||(-Lap + W + mu |phi|^2) phi - lambda phi||_h
  int iterations = 0;
  bool converged = false;
  std::vector<double> energy_trace;  // energy after each accepted step
};

// Minimize the GP energy over the unit sphere ||phi||_h = 1 by projected
// gradient descent with Armijo backtracking. With mu = 0 this converges to
// the lowest eigenpair of -Lap_h + diag(W_ext).
inline MinimizeResult gp_minimize(const Orbital& guess, double mu, const RVec& W_ext,
                                  const MinimizeOptions& opt = {}) {
  const Grid1D& g = guess.grid;
  require(mu >= 0.0, "gp_minimize: defocusing sign mu >= 0 expected");
  require(W_ext.size() == 0 || W_ext.size() == g.M, "gp_minimize: W_ext size mismatch");
  const RMat T = kinetic_matrix(g);

  auto grad_op = [&](const Vec& c) {  // (-Lap + W + mu |c|^2) c
    Vec out = T.cast<cplx>() * c;
    for (int i = 0; i < g.M; ++i) {
      double u = mu * std::norm(c[i]);
      if (W_ext.size()) u += W_ext[i];
      out[i] += u * c[i];
    }
    return out;
  };

  MinimizeResult res{normalized(guess)};
  res.energy = gp_energy(res.phi, mu, W_ext);
  res.energy_trace.push_back(res.energy);

  double step = opt.step0;
  for (int it = 0; it < opt.max_iter; ++it) {
    const Vec& c = res.phi.c;
    const Vec Hc = grad_op(c);
    const double lambda = (g.h * c.dot(Hc)).real();
    const Vec r = Hc - lambda * c;  // gradient projected onto the sphere tangent
    const double rnorm = std::sqrt(g.h) * r.norm();
    res.lambda = lambda;
    res.residual = rnorm;
    res.iterations = it;
    if (rnorm <= opt.tol) {
      res.converged = true;
      break;
    }
    // Armijo backtracking on the constrained energy, while the expected
    // decrement is still resolvable in double precision
    bool accepted = false;
    const double resolution =
        8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(res.energy));
    if (1e-4 * step * rnorm * rnorm > resolution) {
      for (int bt = 0; bt < 60; ++bt) {
        Orbital trial = normalized(Orbital(g, c - step * r));
        const double e_trial = gp_energy(trial, mu, W_ext);
        if (e_trial <= res.energy - 1e-4 * step * rnorm * rnorm) {
          res.phi = std::move(trial);
          res.energy = e_trial;
          res.energy_trace.push_back(e_trial);
          step *= 1.2;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
    }
    if (!accepted) {
      // energy differences are below rounding; descend on the residual norm,
      // which stays accurate down to machine scale
      for (int bt = 0; bt < 60 && step > 1e-18; ++bt) {
        Orbital trial = normalized(Orbital(g, c - step * r));
        const Vec Ht = grad_op(trial.c);
        const double lt = (g.h * trial.c.dot(Ht)).real();
        const double rt = std::sqrt(g.h) * (Ht - lt * trial.c).norm();
        if (rt < (1.0 - 1e-3) * rnorm) {
          res.phi = std::move(trial);
          step *= 1.2;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
    }
    if (!accepted) {
      // no direction makes resolvable progress: numerically stationary
      res.converged = rnorm <= 100.0 * opt.tol;
      break;
    }
  }
  res.energy = gp_energy(res.phi, mu, W_ext);
  return res;
}

}  // namespace bosonlab
