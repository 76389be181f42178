#pragma once
// 1D periodic lattice with grid weight h.
//
// Convention used throughout the library: every L^2 quantity carries the
// measure weight h, i.e. <f,g> = h * sum_i conj(f_i) g_i and
// (V * rho)_i = h * sum_j v_{i-j} rho_j, so continuum identities hold
// verbatim on the lattice without stray h factors.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bosonlab {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// Precondition/configuration violations; the CLI maps these to exit code 2.
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failures (non-convergence, truncation budget exceeded, ...);
// the CLI maps these to exit code 3.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw config_error(what);
}

struct Grid1D {
  int M;     // number of sites, >= 2
  double h;  // spacing, > 0

  Grid1D(int M_, double h_) : M(M_), h(h_) {
    require(M >= 2, "Grid1D: M >= 2 required");
    require(h > 0.0, "Grid1D: h > 0 required");
  }

  double length() const { return M * h; }
  int wrap(int i) const {
    int r = i % M;
    return r < 0 ? r + M : r;
  }
  double x(int i) const { return wrap(i) * h; }
  // ring distance between sites, in physical units
  double dist(int i, int j) const {
    int d = std::abs(wrap(i) - wrap(j));
    d = std::min(d, M - d);
    return d * h;
  }
  bool operator==(const Grid1D& o) const { return M == o.M && h == o.h; }
};

// Even pair potential sampled per displacement: v(d), d = 0..M-1, with
// v(d) == v(M-d).
struct PairPotential {
  Grid1D grid;
  RVec v;

  PairPotential(const Grid1D& g, RVec samples) : grid(g), v(std::move(samples)) {
    require(v.size() == grid.M, "PairPotential: need one sample per displacement");
    const double scale = 1.0 + v.cwiseAbs().maxCoeff();
    for (int d = 1; d < grid.M; ++d)
      require(std::abs(v[d] - v[grid.M - d]) <= 1e-12 * scale,
              "PairPotential: samples must be even, v(d) == v(M-d)");
  }

  // sample a radial profile at ring distances
  static PairPotential from_profile(const Grid1D& g, const std::function<double(double)>& f) {
    RVec s(g.M);
    for (int d = 0; d < g.M; ++d) s[d] = f(g.dist(0, d));
    return PairPotential(g, std::move(s));
  }

  double operator()(int i, int j) const { return v[grid.wrap(i - j)]; }
  // integral of V over the ring
  double mass() const { return grid.h * v.sum(); }
};

struct Orbital {
  Grid1D grid;
  Vec c;

  Orbital(const Grid1D& g, Vec amps) : grid(g), c(std::move(amps)) {
    require(c.size() == grid.M, "Orbital: need one amplitude per site");
  }
  static Orbital zero(const Grid1D& g) { return Orbital(g, Vec::Zero(g.M)); }
};

inline cplx l2_inner(const Orbital& a, const Orbital& b) {
  require(a.grid == b.grid, "l2_inner: grids differ");
  return a.grid.h * a.c.dot(b.c);  // Eigen dot conjugates the left factor
}

inline double l2_norm(const Orbital& a) { return std::sqrt(a.grid.h) * a.c.norm(); }

inline Orbital normalized(const Orbital& a) {
  const double n = l2_norm(a);
  require(n > 0.0, "normalized: zero orbital");
  return Orbital(a.grid, a.c / n);
}

// (-Lap_h f)_i = (2 f_i - f_{i+1} - f_{i-1}) / h^2, periodic
inline Orbital laplacian_apply(const Orbital& f) {
  const int M = f.grid.M;
  const double ih2 = 1.0 / (f.grid.h * f.grid.h);
  Vec out(M);
  for (int i = 0; i < M; ++i) {
    const int ip = (i + 1 == M) ? 0 : i + 1;
    const int im = (i == 0) ? M - 1 : i - 1;
    out[i] = (2.0 * f.c[i] - f.c[ip] - f.c[im]) * ih2;
  }
  return Orbital(f.grid, std::move(out));
}

// dense matrix of -Lap_h in the plain coefficient convention
inline RMat kinetic_matrix(const Grid1D& g) {
  const double ih2 = 1.0 / (g.h * g.h);
  RMat T = RMat::Zero(g.M, g.M);
  for (int i = 0; i < g.M; ++i) {
    const int ip = (i + 1 == g.M) ? 0 : i + 1;
    const int im = (i == 0) ? g.M - 1 : i - 1;
    T(i, i) += 2.0 * ih2;
    T(i, ip) -= ih2;
    T(i, im) -= ih2;
  }
  return T;
}

// eigenvalue of -Lap_h on the plane wave with wavenumber k_m = 2*pi*m/L
inline double laplacian_eigenvalue(const Grid1D& g, int m) {
  const double k = 2.0 * M_PI * m / g.length();
  return (2.0 / (g.h * g.h)) * (1.0 - std::cos(k * g.h));
}

// normalized plane wave, |phi| = 1 in the h-weighted norm
inline Orbital plane_wave(const Grid1D& g, int m) {
  Vec c(g.M);
  const double k = 2.0 * M_PI * m / g.length();
  const double amp = 1.0 / std::sqrt(g.length());
  for (int i = 0; i < g.M; ++i) c[i] = amp * std::exp(cplx(0.0, k * g.x(i)));
  return Orbital(g, std::move(c));
}

// (V * rho)_i = h * sum_j v_{i-j} rho_j
template <class Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> convolve(const PairPotential& V,
                                               const Eigen::Vector<Scalar, Eigen::Dynamic>& rho) {
  const int M = V.grid.M;
  require(static_cast<int>(rho.size()) == M, "convolve: size mismatch");
  Eigen::Vector<Scalar, Eigen::Dynamic> out(M);
  for (int i = 0; i < M; ++i) {
    Scalar acc{};
    for (int j = 0; j < M; ++j) acc += V.v[V.grid.wrap(i - j)] * rho[j];
    out[i] = V.grid.h * acc;
  }
  return out;
}

}  // namespace bosonlab
