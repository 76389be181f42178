#pragma once
// Experiment drivers behind the command-line tool: flat key = value configs,
// deterministic CSV/JSON output, and one pass/fail gate per run.
//
// Exit-code contract (enforced by run_guarded): 0 success, 1 the run's
// acceptance gate failed, 2 config error, 3 numeric failure.

#include "bosonlab/bogoliubov.hpp"
#include "bosonlab/exact.hpp"
#include "bosonlab/fock.hpp"
#include "bosonlab/lattice.hpp"
#include "bosonlab/meanfield.hpp"
#include "bosonlab/scattering.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace bosonlab {

// ---------------------------------------------------------------- config ---

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline double parse_number(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing junk");
    return x;
  } catch (const std::exception&) {
    throw config_error("config key '" + key + "': cannot parse number from '" + s + "'");
  }
}

inline long long parse_integer(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing junk");
    return x;
  } catch (const std::exception&) {
    throw config_error("config key '" + key + "': cannot parse integer from '" + s + "'");
  }
}

}  // namespace detail

// raw key = value pairs, '#' starts a comment, one pair per line
struct Config {
  std::map<std::string, std::string> values;

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw config_error(path + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string val = detail::trim(line.substr(eq + 1));
      if (key.empty()) throw config_error(path + ":" + std::to_string(lineno) + ": empty key");
      if (!cfg.values.emplace(key, val).second)
        throw config_error(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return cfg;
  }

  // command-line override, later wins
  void set(const std::string& key, const std::string& val) { values[key] = val; }

  void set_kv(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw config_error("--set expects key=value, got '" + kv + "'");
    set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
};

// typed access with defaults; tracks which keys were consumed so that finish()
// can reject unknown ones, and records the resolved values for the summary
class ConfigView {
 public:
  explicit ConfigView(const Config& cfg) : cfg_(cfg) {}

  std::string text(const std::string& key, const std::string& def) {
    const auto it = cfg_.values.find(key);
    const std::string v = it == cfg_.values.end() ? def : it->second;
    note(key, v);
    return v;
  }

  double number(const std::string& key, double def) {
    const auto it = cfg_.values.find(key);
    const double v = it == cfg_.values.end() ? def : detail::parse_number(key, it->second);
    note(key, format_number(v));
    return v;
  }

  int integer(const std::string& key, long long def) {
    const auto it = cfg_.values.find(key);
    const long long v = it == cfg_.values.end() ? def : detail::parse_integer(key, it->second);
    note(key, std::to_string(v));
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, bool def) {
    const auto it = cfg_.values.find(key);
    if (it == cfg_.values.end()) {
      note(key, def ? "true" : "false");
      return def;
    }
    const std::string& s = it->second;
    if (s == "true" || s == "1") {
      note(key, "true");
      return true;
    }
    if (s == "false" || s == "0") {
      note(key, "false");
      return false;
    }
    throw config_error("config key '" + key + "': expected true/false, got '" + s + "'");
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
    const auto it = cfg_.values.find(key);
    std::vector<double> v;
    if (it == cfg_.values.end()) {
      v = def;
    } else {
      for (const auto& tok : detail::split(it->second, ','))
        if (!tok.empty()) v.push_back(detail::parse_number(key, tok));
    }
    std::string joined;
    for (std::size_t i = 0; i < v.size(); ++i)
      joined += (i ? "," : "") + format_number(v[i]);
    note(key, joined);
    return v;
  }

  std::vector<int> integers(const std::string& key, const std::vector<int>& def) {
    const auto it = cfg_.values.find(key);
    std::vector<int> v;
    if (it == cfg_.values.end()) {
      v = def;
    } else {
      for (const auto& tok : detail::split(it->second, ','))
        if (!tok.empty()) v.push_back(static_cast<int>(detail::parse_integer(key, tok)));
    }
    std::string joined;
    for (std::size_t i = 0; i < v.size(); ++i)
      joined += (i ? "," : "") + std::to_string(v[i]);
    note(key, joined);
    return v;
  }

  // every config key must have been consumed by one of the getters
  void finish() const {
    for (const auto& [key, val] : cfg_.values)
      if (!seen_.count(key)) throw config_error("unknown config key: " + key);
  }

  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  static std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

  void note(const std::string& key, const std::string& val) {
    seen_.insert(key);
    resolved_[key] = val;
  }

  const Config& cfg_;
  std::set<std::string> seen_;
  std::map<std::string, std::string> resolved_;
};

// ------------------------------------------------------------- utilities ---

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}

  double uniform(double a, double b) {
    return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(gen);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
  cplx complex_normal() { return cplx(normal(), normal()) / std::sqrt(2.0); }

  Vec complex_vector(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = complex_normal();
    return v;
  }
};

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double halfwidth95 = 0.0;  // t-quantile * stderr
  int n = 0;
};

// least squares y = intercept + slope * x with a 95% half-width on the slope
inline RateFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_line: need >= 2 points");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw numeric_error("fit_line: degenerate abscissae");
  RateFit f;
  f.n = n;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  if (n > 2) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ss += r * r;
    }
    f.stderr_slope = std::sqrt(ss / (n - 2) / (sxx - sx * sx / n));
    static const double tq[] = {12.706, 4.303, 3.182, 2.776, 2.571,
                                2.447,  2.365, 2.306, 2.262, 2.228};
    const int dof = n - 2;
    f.halfwidth95 = (dof <= 10 ? tq[dof - 1] : 2.0) * f.stderr_slope;
  }
  return f;
}

inline RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0, "fit_loglog: positive data required");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov distance between a discrete law (atoms value -> prob) and a
// centered normal with standard deviation sigma; total mass is renormalized
inline double kolmogorov_distance_to_normal(std::vector<std::pair<double, double>> atoms,
                                            double sigma) {
  require(sigma > 0.0, "kolmogorov_distance_to_normal: sigma > 0 required");
  require(!atoms.empty(), "kolmogorov_distance_to_normal: empty law");
  std::sort(atoms.begin(), atoms.end());
  double mass = 0.0;
  for (const auto& [s, p] : atoms) mass += p;
  if (mass <= 1e-12) throw numeric_error("kolmogorov_distance_to_normal: zero mass");
  double cum = 0.0, dist = 0.0;
  std::size_t i = 0;
  while (i < atoms.size()) {
    const double s = atoms[i].first;
    double p = 0.0;
    while (i < atoms.size() && atoms[i].first == s) p += atoms[i++].second;
    const double target = normal_cdf(s / sigma);
    dist = std::max(dist, std::abs(cum / mass - target));
    cum += p;
    dist = std::max(dist, std::abs(cum / mass - target));
  }
  return dist;
}

// ------------------------------------------------------------------- I/O ---

inline std::string csv_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12e", x);
  return buf;
}

inline std::string csv_int(long long n) { return std::to_string(n); }

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw numeric_error("cannot open output file: " + path);
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// minimal line plot, one polyline per series; log axes are handled by caller
// passing transformed coordinates
inline void write_svg_plot(const std::string& path, const std::string& title,
                           const std::vector<std::vector<std::pair<double, double>>>& series) {
  std::ofstream out(path);
  if (!out) throw numeric_error("cannot open output file: " + path);
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double W = 480, H = 320, L = 60, R = 20, T = 30, B = 40;
  auto mx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto my = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << W / 2 << "' y='18' text-anchor='middle' font-size='13'>" << title
      << "</text>\n";
  out << "<rect x='" << L << "' y='" << T << "' width='" << W - L - R << "' height='"
      << H - T - B << "' fill='none' stroke='black'/>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    out << "<polyline fill='none' stroke='" << colors[k % 5] << "' stroke-width='1.5' points='";
    for (const auto& [x, y] : series[k]) out << mx(x) << ',' << my(y) << ' ';
    out << "'/>\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x0);
  out << "<text x='" << L << "' y='" << H - B + 16 << "' font-size='11'>" << buf << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", x1);
  out << "<text x='" << W - R << "' y='" << H - B + 16 << "' text-anchor='end' font-size='11'>"
      << buf << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", y0);
  out << "<text x='" << L - 4 << "' y='" << H - B << "' text-anchor='end' font-size='11'>" << buf
      << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", y1);
  out << "<text x='" << L - 4 << "' y='" << T + 10 << "' text-anchor='end' font-size='11'>" << buf
      << "</text>\n";
  out << "</svg>\n";
}

inline void write_summary(const std::string& out_dir, const std::string& command,
                          const ConfigView& cv, bool pass, const nlohmann::json& metrics,
                          double seconds) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = cv.resolved();
  j["pass"] = pass;
  j["metrics"] = metrics;
  j["seconds"] = seconds;
  std::ofstream out(out_dir + "/summary.json");
  if (!out) throw numeric_error("cannot open output file: " + out_dir + "/summary.json");
  out << j.dump(2) << '\n';
}

// ----------------------------------------------------------- model pieces ---

// periodic Gaussian bump profile, v(d) = v0 exp(-d^2 / (2 sigma^2))
inline PairPotential gaussian_potential(const Grid1D& g, double v0, double sigma) {
  require(sigma > 0.0, "gaussian_potential: sigma > 0 required");
  return PairPotential::from_profile(
      g, [&](double d) { return v0 * std::exp(-0.5 * d * d / (sigma * sigma)); });
}

// same shape rescaled so that h * sum v = mass
inline PairPotential gaussian_potential_with_mass(const Grid1D& g, double mass, double sigma) {
  PairPotential raw = gaussian_potential(g, 1.0, sigma);
  const double m0 = raw.mass();
  require(m0 > 0.0, "gaussian_potential_with_mass: degenerate profile");
  return PairPotential(g, RVec(raw.v * (mass / m0)));
}

// normalized single-bump orbital 1 + amp cos(2 pi x / L)
inline Orbital cosine_bump(const Grid1D& g, double amp) {
  Vec c(g.M);
  for (int i = 0; i < g.M; ++i) c[i] = 1.0 + amp * std::cos(2.0 * M_PI * g.x(i) / g.length());
  return normalized(Orbital(g, std::move(c)));
}

// external well wamp * (1 - cos(2 pi x / L)) / 2, minimum at the origin
inline RVec cosine_well(const Grid1D& g, double wamp) {
  if (wamp == 0.0) return RVec();
  RVec w(g.M);
  for (int i = 0; i < g.M; ++i)
    w[i] = 0.5 * wamp * (1.0 - std::cos(2.0 * M_PI * g.x(i) / g.length()));
  return w;
}

// diagonal observable profiles for the fluctuation statistics
inline RVec observable_profile(const Grid1D& g, const std::string& name) {
  RVec o(g.M);
  for (int i = 0; i < g.M; ++i) {
    const double x = g.x(i);
    if (name == "cos")
      o[i] = std::cos(2.0 * M_PI * x / g.length());
    else if (name == "sin")
      o[i] = std::sin(2.0 * M_PI * x / g.length());
    else if (name == "half")
      o[i] = (i < g.M / 2) ? 1.0 : 0.0;
    else
      throw config_error("unknown observable profile: " + name);
  }
  return o;
}

// --------------------------------------------------------------- drivers ---

namespace detail {

inline void ensure_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw numeric_error("cannot create output directory: " + out_dir);
}

}  // namespace detail

// mean-field convergence: trace-norm distance of the one-particle reduced
// density from the Hartree projector, as a function of the particle number
inline int run_converge(const Config& cfg, const std::string& out_dir) {
  Stopwatch total;
  detail::ensure_dir(out_dir);
  ConfigView cv(cfg);
  const int M = cv.integer("M", 4);
  const double h = cv.number("h", 1.0);
  const auto N_list = cv.integers("N_list", {4, 8, 16, 32});
  const double t_final = cv.number("t_final", 0.5);
  const double dt = cv.number("dt", 1e-3);
  const double v0 = cv.number("v0", 0.5);
  const double vsigma = cv.number("vsigma", 1.0);
  const double wamp = cv.number("wamp", 0.0);
  const double phi_amp = cv.number("phi_amp", 0.4);
  KrylovOptions kopt;
  kopt.tol = cv.number("krylov_tol", 1e-10);
  kopt.max_dim = cv.integer("krylov_dim", 40);
  const double rate_min = cv.number("rate_min", -1.3);
  const double rate_max = cv.number("rate_max", -0.7);
  const bool plot = cv.boolean("plot", false);
  cv.integer("seed", 1);  // unused here; accepted for interface uniformity
  cv.finish();
  require(!N_list.empty(), "run_converge: N_list must be nonempty");

  const Grid1D grid(M, h);
  const PairPotential V = gaussian_potential(grid, v0, vsigma);
  const RVec W = cosine_well(grid, wamp);
  const Orbital phi0 = cosine_bump(grid, phi_amp);
  const Trajectory traj = hartree_evolve(phi0, V, W, t_final, {dt});
  const Mat target = rank_one_density(traj.at(t_final));

  CsvWriter csv(out_dir + "/converge.csv", {"N", "dim", "distance", "seconds"});
  std::vector<double> Ns, errs;
  for (const int N : N_list) {
    Stopwatch sw;
    auto basis = std::make_shared<FockBasis>(M, adequate_cutoff(N));
    const SparseHermitian H = build_hamiltonian(*basis, grid, V, W, N);
    FockVector psi = coherent_state(basis, Orbital(grid, std::sqrt(double(N)) * phi0.c));
    psi = propagate(H, psi, t_final, kopt);
    const double err = trace_norm_distance(reduced_density_1(psi), target);
    csv.row({csv_int(N), csv_int(basis->dim()), csv_num(err), csv_num(sw.seconds())});
    Ns.push_back(N);
    errs.push_back(err);
    std::cout << "converge: N=" << N << " dim=" << basis->dim() << " distance=" << err << " ("
              << csv_num(sw.seconds()) << " s)\n";
  }

  bool pass = true;
  nlohmann::json metrics;
  metrics["N"] = Ns;
  metrics["distance"] = errs;
  if (Ns.size() >= 2) {
    const RateFit fit = fit_loglog(Ns, errs);
    metrics["slope"] = fit.slope;
    metrics["slope_halfwidth95"] = fit.halfwidth95;
    pass = fit.slope >= rate_min && fit.slope <= rate_max;
    std::cout << "converge: slope=" << fit.slope << " (+-" << fit.halfwidth95 << "), gate ["
              << rate_min << ", " << rate_max << "] => " << (pass ? "pass" : "FAIL") << "\n";
  }
  if (plot) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < Ns.size(); ++i)
      pts.emplace_back(std::log10(Ns[i]), std::log10(errs[i]));
    write_svg_plot(out_dir + "/converge.svg", "log10 distance vs log10 N", {pts});
  }
  write_summary(out_dir, "converge", cv, pass, metrics, total.seconds());
  return pass ? 0 : 1;
}

// fluctuation growth: expected particle number of the coherent-frame state
// at the listed times, compared across particle numbers
inline int run_fluct(const Config& cfg, const std::string& out_dir) {
  Stopwatch total;
  detail::ensure_dir(out_dir);
  ConfigView cv(cfg);
  const int M = cv.integer("M", 4);
  const double h = cv.number("h", 1.0);
  const auto N_list = cv.integers("N_list", {16, 32});
  const auto t_list = cv.numbers("t_list", {0.0, 0.25, 0.5});
  const double dt = cv.number("dt", 1e-3);
  const double v0 = cv.number("v0", 0.5);
  const double vsigma = cv.number("vsigma", 1.0);
  const double wamp = cv.number("wamp", 0.0);
  const double phi_amp = cv.number("phi_amp", 0.4);
  KrylovOptions kopt;
  kopt.tol = cv.number("krylov_tol", 1e-10);
  kopt.max_dim = cv.integer("krylov_dim", 40);
  const double rel_spread_max = cv.number("rel_spread_max", 0.5);
  const bool plot = cv.boolean("plot", false);
  cv.integer("seed", 1);
  cv.finish();
  require(N_list.size() >= 2, "run_fluct: need at least two particle numbers");
  require(!t_list.empty() && t_list.front() >= 0.0, "run_fluct: bad time list");

  const Grid1D grid(M, h);
  const PairPotential V = gaussian_potential(grid, v0, vsigma);
  const RVec W = cosine_well(grid, wamp);
  const Orbital phi0 = cosine_bump(grid, phi_amp);
  const double t_final = t_list.back();
  const Trajectory traj = hartree_evolve(phi0, V, W, t_final, {dt});

  CsvWriter csv(out_dir + "/fluct.csv", {"N", "t", "n_fluct", "seconds"});
  std::map<int, std::vector<double>> series;
  for (const int N : N_list) {
    Stopwatch sw;
    auto basis = std::make_shared<FockBasis>(M, adequate_cutoff(N));
    const SparseHermitian H = build_hamiltonian(*basis, grid, V, W, N);
    const auto ns = fluctuation_number_series(
        H, basis, [&](double t) { return traj.at(t); }, N, t_list, kopt);
    const double secs = sw.seconds();
    for (std::size_t i = 0; i < t_list.size(); ++i)
      csv.row({csv_int(N), csv_num(t_list[i]), csv_num(ns[i]), csv_num(secs)});
    series[N] = ns;
    std::cout << "fluct: N=" << N << " n_fluct(t=" << t_list.back() << ")=" << ns.back() << " ("
              << csv_num(secs) << " s)\n";
  }

  // gate: at each positive time, the spread across N stays below the bound
  bool pass = true;
  std::vector<double> spreads;
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    if (t_list[i] <= 0.0) continue;
    double lo = 1e300, hi = 0.0;
    for (const int N : N_list) {
      lo = std::min(lo, series[N][i]);
      hi = std::max(hi, series[N][i]);
    }
    const double spread = hi > 1e-12 ? (hi - lo) / hi : 0.0;
    spreads.push_back(spread);
    if (spread > rel_spread_max) pass = false;
  }
  nlohmann::json metrics;
  metrics["t"] = t_list;
  for (const int N : N_list) metrics["n_fluct_N" + std::to_string(N)] = series[N];
  metrics["rel_spread"] = spreads;
  std::cout << "fluct: max rel spread="
            << (spreads.empty() ? 0.0 : *std::max_element(spreads.begin(), spreads.end()))
            << ", gate <= " << rel_spread_max << " => " << (pass ? "pass" : "FAIL") << "\n";
  if (plot) {
    std::vector<std::vector<std::pair<double, double>>> ss;
    for (const int N : N_list) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t i = 0; i < t_list.size(); ++i) pts.emplace_back(t_list[i], series[N][i]);
      ss.push_back(std::move(pts));
    }
    write_svg_plot(out_dir + "/fluct.svg", "fluctuation number vs time", ss);
  }
  write_summary(out_dir, "fluct", cv, pass, metrics, total.seconds());
  return pass ? 0 : 1;
}

// central limit statistics of a one-body observable in a product state
inline int run_clt(const Config& cfg, const std::string& out_dir) {
  Stopwatch total;
  detail::ensure_dir(out_dir);
  ConfigView cv(cfg);
  const int M = cv.integer("M", 4);
  const double h = cv.number("h", 1.0);
  const auto N_list = cv.integers("N_list", {4, 8});
  const double t = cv.number("t", 0.25);
  const double dt = cv.number("dt", 1e-3);
  const double v0 = cv.number("v0", 0.5);
  const double vsigma = cv.number("vsigma", 1.0);
  const double wamp = cv.number("wamp", 0.0);
  const double phi_amp = cv.number("phi_amp", 0.4);
  const std::string obs = cv.text("obs", "cos");
  KrylovOptions kopt;
  kopt.tol = cv.number("krylov_tol", 1e-10);
  kopt.max_dim = cv.integer("krylov_dim", 40);
  const bool plot = cv.boolean("plot", false);
  cv.integer("seed", 1);
  cv.finish();
  require(N_list.size() >= 2, "run_clt: need at least two particle numbers");

  const Grid1D grid(M, h);
  const PairPotential V = gaussian_potential(grid, v0, vsigma);
  const RVec W = cosine_well(grid, wamp);
  const Orbital phi0 = cosine_bump(grid, phi_amp);
  const Trajectory traj = hartree_evolve(phi0, V, W, std::max(t, 1e-9), {dt});
  const Orbital phi_t = traj.at(t);
  const RVec o = observable_profile(grid, obs);
  const Mat O = o.cast<cplx>().asDiagonal();

  const Mat theta = theta_evolve(traj, V, W, 0.0, t, dt);
  const double sigma = std::sqrt(clt_variance(theta, O, phi_t));
  const double o_mean = (grid.h * phi_t.c.dot(O * phi_t.c)).real();

  CsvWriter csv(out_dir + "/clt.csv", {"N", "sigma_pred", "kolmogorov", "seconds"});
  std::vector<double> dists;
  for (const int N : N_list) {
    Stopwatch sw;
    auto basis = std::make_shared<FockBasis>(M, N);  // sector N is conserved
    const SparseHermitian H = build_hamiltonian(*basis, grid, V, W, N);
    FockVector psi = product_state(basis, phi0, N);
    psi = propagate(H, psi, t, kopt);
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(basis->sector_end(N) - basis->sector_begin(N));
    for (index_t idx = basis->sector_begin(N); idx < basis->sector_end(N); ++idx) {
      const double p = std::norm(psi.amp[idx]);
      const std::uint8_t* n = basis->occ(idx);
      double s = 0.0;
      for (int x = 0; x < M; ++x) s += n[x] * o[x];
      atoms.emplace_back((s - N * o_mean) / std::sqrt(double(N)), p);
    }
    const double dist = kolmogorov_distance_to_normal(std::move(atoms), sigma);
    csv.row({csv_int(N), csv_num(sigma), csv_num(dist), csv_num(sw.seconds())});
    dists.push_back(dist);
    std::cout << "clt: N=" << N << " kolmogorov=" << dist << " (sigma_pred=" << sigma << ")\n";
  }

  bool pass = true;
  for (std::size_t i = 1; i < dists.size(); ++i)
    if (!(dists[i] < dists[i - 1])) pass = false;
  nlohmann::json metrics;
  metrics["N"] = N_list;
  metrics["kolmogorov"] = dists;
  metrics["sigma_pred"] = sigma;
  metrics["observable_mean"] = o_mean;
  std::cout << "clt: monotone decrease in N => " << (pass ? "pass" : "FAIL") << "\n";
  if (plot) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < dists.size(); ++i) pts.emplace_back(N_list[i], dists[i]);
    write_svg_plot(out_dir + "/clt.svg", "Kolmogorov distance vs N", {pts});
  }
  write_summary(out_dir, "clt", cv, pass, metrics, total.seconds());
  return pass ? 0 : 1;
}

// Hartree -> GP: sup distance between the two flows as the kernel narrows
inline int run_gp(const Config& cfg, const std::string& out_dir) {
  Stopwatch total;
  detail::ensure_dir(out_dir);
  ConfigView cv(cfg);
  const int M = cv.integer("M", 32);
  const double h = cv.number("h", 0.25);
  const auto widths = cv.numbers("widths", {0.4, 0.2, 0.1});  // fractions of L
  const double mass = cv.number("mass", 1.0);
  const double t_final = cv.number("t_final", 1.0);
  const double dt = cv.number("dt", 1e-3);
  const double wamp = cv.number("wamp", 0.0);
  const double phi_amp = cv.number("phi_amp", 0.4);
  const bool plot = cv.boolean("plot", false);
  cv.integer("seed", 1);
  cv.finish();
  require(widths.size() >= 2, "run_gp: need at least two widths");

  const Grid1D grid(M, h);
  const RVec W = cosine_well(grid, wamp);
  const Orbital phi0 = cosine_bump(grid, phi_amp);
  const Trajectory gp = gp_evolve(phi0, mass, W, t_final, {dt});

  CsvWriter csv(out_dir + "/gp.csv", {"width", "sigma", "sup_distance"});
  std::vector<double> dists;
  for (const double w : widths) {
    require(w > 0.0, "run_gp: widths must be positive");
    const double sigma = w * grid.length();
    const PairPotential V = gaussian_potential_with_mass(grid, mass, sigma);
    const Trajectory ha = hartree_evolve(phi0, V, W, t_final, {dt});
    double sup = 0.0;
    for (std::size_t k = 0; k < ha.nodes.size(); ++k)
      sup = std::max(sup, std::sqrt(grid.h) * (ha.nodes[k] - gp.nodes[k]).norm());
    csv.row({csv_num(w), csv_num(sigma), csv_num(sup)});
    dists.push_back(sup);
    std::cout << "gp: width=" << w << " L -> sup distance=" << sup << "\n";
  }

  bool pass = true;
  for (std::size_t i = 1; i < dists.size(); ++i)
    if (!(dists[i] < dists[i - 1])) pass = false;
  nlohmann::json metrics;
  metrics["widths"] = widths;
  metrics["sup_distance"] = dists;
  std::cout << "gp: monotone decrease with narrowing kernel => " << (pass ? "pass" : "FAIL")
            << "\n";
  if (plot) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < widths.size(); ++i)
      pts.emplace_back(std::log10(widths[i]), std::log10(std::max(dists[i], 1e-300)));
    write_svg_plot(out_dir + "/gp.svg", "log10 sup distance vs log10 width", {pts});
  }
  write_summary(out_dir, "gp", cv, pass, metrics, total.seconds());
  return pass ? 0 : 1;
}

// GP energy minimization across couplings
inline int run_minimize(const Config& cfg, const std::string& out_dir) {
  Stopwatch total;
  detail::ensure_dir(out_dir);
  ConfigView cv(cfg);
  const int M = cv.integer("M", 32);
  const double h = cv.number("h", 0.25);
  const auto mu_list = cv.numbers("mu_list", {0.0, 1.0, 5.0});
  const double wamp = cv.number("wamp", 1.0);
  MinimizeOptions mopt;
  mopt.tol = cv.number("tol", 1e-10);
  mopt.max_iter = cv.integer("max_iter", 20000);
  mopt.step0 = cv.number("step0", 0.1);
  const bool plot = cv.boolean("plot", false);
  cv.integer("seed", 1);
  cv.finish();
  require(!mu_list.empty(), "run_minimize: mu_list must be nonempty");

  const Grid1D grid(M, h);
  const RVec W = cosine_well(grid, wamp);
  const Orbital guess = normalized(Orbital(grid, Vec::Ones(M)));

  CsvWriter csv(out_dir + "/minimize.csv",
                {"mu", "energy", "lambda", "residual", "iterations", "converged"});
  CsvWriter trace(out_dir + "/minimize_trace.csv", {"mu", "step", "energy"});
  bool pass = true;
  std::vector<double> energies;
  std::vector<std::vector<std::pair<double, double>>> plots;
  for (const double mu : mu_list) {
    const MinimizeResult res = gp_minimize(guess, mu, W, mopt);
    csv.row({csv_num(mu), csv_num(res.energy), csv_num(res.lambda), csv_num(res.residual),
             csv_int(res.iterations), csv_int(res.converged ? 1 : 0)});
    const std::size_t stride = std::max<std::size_t>(1, res.energy_trace.size() / 512);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < res.energy_trace.size(); ++k)
      if (k % stride == 0 || k + 1 == res.energy_trace.size()) {
        trace.row({csv_num(mu), csv_int(k), csv_num(res.energy_trace[k])});
        pts.emplace_back(double(k), res.energy_trace[k]);
      }
    plots.push_back(std::move(pts));
    bool monotone = true;
    for (std::size_t k = 1; k < res.energy_trace.size(); ++k)
      if (res.energy_trace[k] > res.energy_trace[k - 1] + 1e-14) monotone = false;
    if (!res.converged || !monotone) pass = false;
    energies.push_back(res.energy);
    std::cout << "minimize: mu=" << mu << " energy=" << res.energy << " lambda=" << res.lambda
              << " iters=" << res.iterations << (res.converged ? "" : " (NOT CONVERGED)") << "\n";
  }
  for (std::size_t i = 1; i < energies.size(); ++i)
    if (energies[i] < energies[i - 1] - 1e-12) pass = false;  // energy grows with coupling
  nlohmann::json metrics;
  metrics["mu"] = mu_list;
  metrics["energy"] = energies;
  std::cout << "minimize: converged, monotone traces, energy nondecreasing in mu => "
            << (pass ? "pass" : "FAIL") << "\n";
  if (plot) write_svg_plot(out_dir + "/minimize.svg", "energy vs accepted step", plots);
  write_summary(out_dir, "minimize", cv, pass, metrics, total.seconds());
  return pass ? 0 : 1;
}

// two-body scattering: closed-form check, sum-rule identity, and the
// 1/N resolution scaling of the scattering length
inline int run_scatter(const Config& cfg, const std::string& out_dir) {
  Stopwatch total;
  detail::ensure_dir(out_dir);
  ConfigView cv(cfg);
  const std::string profile = cv.text("profile", "soft_sphere");
  const double v0 = cv.number("v0", 8.0);
  const double R = cv.number("R", 1.0);
  const double rmax_factor = cv.number("rmax_factor", 25.0);
  ScatteringOptions sopt;
  sopt.rtol = cv.number("rtol", 1e-10);
  sopt.atol = cv.number("atol", 1e-14);
  const auto scales = cv.numbers("scale_list", {1.0, 4.0, 16.0});
  const double id_tol = cv.number("identity_tol", 1e-6);
  const double scale_tol = cv.number("scale_tol", 1e-8);
  const bool plot = cv.boolean("plot", false);
  cv.integer("seed", 1);
  cv.finish();
  require(!scales.empty() && scales.front() == 1.0, "run_scatter: scale_list must start at 1");

  RadialPotential pot;
  if (profile == "soft_sphere") {
    pot = RadialPotential::soft_sphere(v0, R);
  } else if (profile == "gaussian") {
    pot = {[v0, R](double r) { return v0 * std::exp(-0.5 * r * r / (R * R)); }, 8.0 * R};
  } else {
    throw config_error("unknown potential profile: " + profile);
  }

  CsvWriter csv(out_dir + "/scatter.csv",
                {"scale", "a0", "alpha", "g", "b0", "identity_residual", "a0_error"});
  bool pass = true;
  double a0_base = 0.0;
  double worst_scaling = 0.0;
  for (const double s : scales) {
    ScatteringOptions so = sopt;
    so.r_max = rmax_factor * pot.range / s;
    const ScatteringResult r = scattering_solve(pot.scaled(s), so);
    csv.row({csv_num(s), csv_num(r.a0), csv_num(r.alpha), csv_num(r.g), csv_num(r.b0),
             csv_num(r.identity_residual), csv_num(r.a0_error)});
    if (s == 1.0) a0_base = r.a0;
    if (r.identity_residual > id_tol) pass = false;
    if (!(r.g < r.b0)) pass = false;  // strict Born inequality for repulsive V
    if (s != 1.0) {
      const double mismatch = std::abs(s * r.a0 - a0_base) / std::abs(a0_base);
      worst_scaling = std::max(worst_scaling, mismatch);
      if (mismatch > scale_tol) pass = false;
    }
    std::cout << "scatter: scale=" << s << " a0=" << r.a0 << " identity=" << r.identity_residual
              << "\n";
  }
  nlohmann::json metrics;
  metrics["a0"] = a0_base;
  metrics["worst_scaling_mismatch"] = worst_scaling;
  if (profile == "soft_sphere") {
    const double exact = soft_sphere_a0(v0, R);
    const double rel = std::abs(a0_base - exact) / exact;
    metrics["closed_form_rel_error"] = rel;
    if (rel > id_tol) pass = false;
    std::cout << "scatter: closed form rel error=" << rel << "\n";
  }
  std::cout << "scatter: gates => " << (pass ? "pass" : "FAIL") << "\n";
  if (plot) {
    // wave profile f(r) for the base potential
    ScatteringOptions so = sopt;
    so.r_max = rmax_factor * pot.range;
    const ScatteringResult r = scattering_solve(pot, so);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 200; ++i) {
      const double x = r.r_max * i / 200.0;
      pts.emplace_back(x, r.f(x));
    }
    write_svg_plot(out_dir + "/scatter.svg", "zero-energy profile f(r)", {pts});
  }
  write_summary(out_dir, "scatter", cv, pass, metrics, total.seconds());
  return pass ? 0 : 1;
}

// maps library exceptions onto the exit-code contract
inline int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace bosonlab
