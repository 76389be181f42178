#pragma once
// Zero-energy two-body scattering on the half line.
//
// Solves u'' = (1/2) V(r) u with u(0) = 0, u'(0) = 1. Outside the range of a
// repulsive potential u is exactly linear, u(r) = alpha (r - a0), which
// defines the scattering length a0 and the asymptotic slope alpha. The same
// pass accumulates int V u r dr (for the identity 8 pi a0 = (4 pi / alpha)
// int V u r dr) and int V r^2 dr (the Born coupling b0 = 4 pi int V r^2 dr).

#include "bosonlab/lattice.hpp"

#include <array>
#include <functional>
#include <vector>

namespace bosonlab {

struct RadialPotential {
  std::function<double(double)> V;
  double range;  // radius beyond which V is (numerically) negligible

  static RadialPotential soft_sphere(double v0, double R) {
    require(R > 0.0, "soft_sphere: R > 0 required");
    return {[v0, R](double r) { return r < R ? v0 : 0.0; }, R};
  }

  // N^2 V(N r): same scattering problem with lengths shrunk by 1/N
  RadialPotential scaled(double N) const {
    require(N > 0.0, "RadialPotential::scaled: N > 0 required");
    auto base = V;
    return {[base, N](double r) { return N * N * base(N * r); }, range / N};
  }
};

// a0 = R (1 - tanh(kappa R) / (kappa R)), kappa = sqrt(v0 / 2)
inline double soft_sphere_a0(double v0, double R) {
  require(v0 > 0.0 && R > 0.0, "soft_sphere_a0: positive barrier expected");
  const double k = std::sqrt(0.5 * v0);
  return R * (1.0 - std::tanh(k * R) / (k * R));
}

struct ScatteringOptions {
  double r_max = 0.0;  // 0: choose 25 * range automatically
  double rtol = 1e-10;
  double atol = 1e-14;
  double fit_frac = 0.5;  // tail window starts at max(2 range, fit_frac * r_max)
};

namespace detail {

// cubic Hermite interpolation over accepted (r, u, u') integration nodes
inline double hermite_at(const std::vector<std::array<double, 3>>& nodes, double r) {
  std::size_t lo = 0, hi = nodes.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (nodes[mid][0] <= r ? lo : hi) = mid;
  }
  const double r0 = nodes[lo][0], r1 = nodes[hi][0], dh = r1 - r0;
  if (dh <= 0.0) return nodes[lo][1];
  const double s = (r - r0) / dh;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * nodes[lo][1] + dh * h10 * nodes[lo][2] + h01 * nodes[hi][1] +
         dh * h11 * nodes[hi][2];
}

}  // namespace detail

struct ScatteringResult {
  double a0 = 0.0;
  double alpha = 0.0;  // asymptotic slope of u
  double g = 0.0;      // 8 pi a0
  double b0 = 0.0;     // 4 pi int V r^2 dr; b0 >= g for repulsive V
  double identity_residual = 0.0;
  double a0_error = 0.0;
  double r_max = 0.0;

  // accepted integration nodes: radius, u, u'
  std::vector<std::array<double, 3>> nodes;

  double u_at(double r) const {
    require(r >= 0.0, "u_at: r >= 0 required");
    if (r >= r_max) return alpha * (r - a0);  // exact linear continuation
    return detail::hermite_at(nodes, r);
  }

  // f = u / (alpha r), the zero-energy wave profile with f -> 1 at infinity
  double f(double r) const {
    if (r <= 0.0) return nodes.empty() ? 1.0 / alpha : nodes.front()[2] / alpha;
    if (r >= r_max) return 1.0 - a0 / r;
    return u_at(r) / (alpha * r);
  }

  double omega(double r) const { return 1.0 - f(r); }
};

namespace detail {

// Dormand-Prince 5(4); state y = (u, u', int V u r, int V r^2)
struct Dopri {
  const std::function<double(double)>& V;
  double rtol, atol;

  using Y = Eigen::Vector4d;

  Y rhs(double r, const Y& y) const {
    const double v = V(r);
    return Y(y[1], 0.5 * v * y[0], v * y[0] * r, v * r * r);
  }

  // integrate from r0 to r1, recording accepted nodes (r, u, u')
  void run(double r0, double r1, Y& y, std::vector<std::array<double, 3>>& nodes) const {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    double r = r0;
    double h = std::max(1e-12, (r1 - r0) / 100.0);
    Y k1 = rhs(r, y);
    int rejects_in_row = 0;
    while (r < r1) {
      const bool last = h >= r1 - r;
      if (last) h = r1 - r;
      const Y k2 = rhs(r + c2 * h, y + h * (1.0 / 5) * k1);
      const Y k3 = rhs(r + c3 * h, y + h * ((3.0 / 40) * k1 + (9.0 / 40) * k2));
      const Y k4 = rhs(r + c4 * h, y + h * ((44.0 / 45) * k1 - (56.0 / 15) * k2 + (32.0 / 9) * k3));
      const Y k5 = rhs(r + c5 * h, y + h * ((19372.0 / 6561) * k1 - (25360.0 / 2187) * k2 +
                                            (64448.0 / 6561) * k3 - (212.0 / 729) * k4));
      const Y k6 = rhs(r + h, y + h * ((9017.0 / 3168) * k1 - (355.0 / 33) * k2 +
                                       (46732.0 / 5247) * k3 + (49.0 / 176) * k4 -
                                       (5103.0 / 18656) * k5));
      const Y y5 = y + h * ((35.0 / 384) * k1 + (500.0 / 1113) * k3 + (125.0 / 192) * k4 -
                            (2187.0 / 6784) * k5 + (11.0 / 84) * k6);
      const Y k7 = rhs(r + h, y5);
      const Y err = h * ((71.0 / 57600) * k1 - (71.0 / 16695) * k3 + (71.0 / 1920) * k4 -
                         (17253.0 / 339200) * k5 + (22.0 / 525) * k6 - (1.0 / 40) * k7);
      double e2 = 0.0;
      for (int i = 0; i < 4; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
        e2 += (err[i] / sc) * (err[i] / sc);
      }
      const double enorm = std::sqrt(e2 / 4.0);
      if (enorm <= 1.0) {
        r = last ? r1 : r + h;  // land on the endpoint exactly
        y = y5;
        k1 = k7;  // first-same-as-last
        nodes.push_back({r, y[0], y[1]});
        rejects_in_row = 0;
      } else if (++rejects_in_row > 60) {
        throw numeric_error("scattering_solve: step size underflow");
      }
      const double fac = 0.9 * std::pow(std::max(enorm, 1e-10), -0.2);
      h *= std::min(5.0, std::max(0.2, fac));
      if (r < r1 && h < 1e-14 * std::max(1.0, std::abs(r)))
        throw numeric_error("scattering_solve: step size underflow");
    }
  }
};

}  // namespace detail

inline ScatteringResult scattering_solve(const RadialPotential& pot,
                                         const ScatteringOptions& opt = {}) {
  require(pot.range > 0.0, "scattering_solve: potential range must be positive");
  ScatteringResult res;
  res.r_max = opt.r_max > 0.0 ? opt.r_max : 25.0 * pot.range;
  require(res.r_max > 2.0 * pot.range, "scattering_solve: r_max must exceed twice the range");

  detail::Dopri integ{pot.V, opt.rtol, opt.atol};
  detail::Dopri::Y y(0.0, 1.0, 0.0, 0.0);
  res.nodes.push_back({0.0, 0.0, 1.0});
  // split at the range so a potential edge lands on a step boundary
  integ.run(0.0, pot.range, y, res.nodes);
  integ.run(pot.range, res.r_max, y, res.nodes);

  // least-squares line u = alpha (r - a0) over dense samples of the tail window
  const double r_lo = std::max(2.0 * pot.range, opt.fit_frac * res.r_max);
  const int npts = 64;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> xs(npts), ys(npts);
  for (int i = 0; i < npts; ++i) {
    xs[i] = r_lo + (res.r_max - r_lo) * (i + 0.5) / npts;
    ys[i] = detail::hermite_at(res.nodes, xs[i]);
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = npts * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw numeric_error("scattering_solve: degenerate tail fit");
  res.alpha = (npts * sxy - sx * sy) / denom;
  const double intercept = (sy - res.alpha * sx) / npts;
  if (std::abs(res.alpha) < 1e-300) throw numeric_error("scattering_solve: vanishing slope");
  res.a0 = -intercept / res.alpha;
  res.g = 8.0 * M_PI * res.a0;
  res.b0 = 4.0 * M_PI * y[3];

  // fit scatter around the line, folded into the error estimate
  double ss = 0.0;
  for (int i = 0; i < npts; ++i) {
    const double d = ys[i] - res.alpha * (xs[i] - res.a0);
    ss += d * d;
  }
  const double sigma = std::sqrt(ss / npts) / std::abs(res.alpha);
  res.a0_error = sigma + 100.0 * opt.rtol * (1.0 + std::abs(res.a0));

  const double rhs_identity = 4.0 * M_PI * y[2] / res.alpha;
  res.identity_residual = std::abs(res.g - rhs_identity) / std::max(std::abs(res.g), 1e-300);
  return res;
}

// pair correlation kernel k(x, y) = -N w(N dist(x, y)) phi(x) phi(y) with
// w = 1 - f from the two-body problem; symmetric, ready for a squeeze kernel
inline Mat correlation_kernel(const ScatteringResult& sol, const Orbital& phi, double N) {
  require(N > 0.0, "correlation_kernel: N > 0 required");
  const int M = phi.grid.M;
  Mat k(M, M);
  for (int x = 0; x < M; ++x)
    for (int y = 0; y < M; ++y)
      k(x, y) = -N * sol.omega(N * phi.grid.dist(x, y)) * phi.c[x] * phi.c[y];
  return k;
}

}  // namespace bosonlab
