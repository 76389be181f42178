#include "bosonlab/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace bosonlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  fs::path p = fs::temp_directory_path() / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, ParsesFileWithCommentsAndLists) {
  fs::path dir = fresh_dir("bosonlab_cfg");
  {
    std::ofstream out(dir / "a.cfg");
    out << "# run parameters\n";
    out << "M = 6\n";
    out << "t_final = 0.25   \n";
    out << "\n";
    out << "N_list = 2, 4, 8\n";
    out << "label = tiny run\n";
  }
  Config cfg = Config::from_file((dir / "a.cfg").string());
  ConfigView cv(cfg);
  EXPECT_EQ(cv.integer("M", 0), 6);
  EXPECT_NEAR(cv.number("t_final", 0.0), 0.25, 1e-15);
  EXPECT_EQ(cv.integers("N_list", {}), (std::vector<int>{2, 4, 8}));
  EXPECT_EQ(cv.text("label", ""), "tiny run");
  EXPECT_NO_THROW(cv.finish());
}

TEST(Config, RejectsMalformedInput) {
  fs::path dir = fresh_dir("bosonlab_cfg_bad");
  {
    std::ofstream out(dir / "dup.cfg");
    out << "M = 2\nM = 3\n";
  }
  EXPECT_THROW(Config::from_file((dir / "dup.cfg").string()), config_error);
  {
    std::ofstream out(dir / "noeq.cfg");
    out << "M 2\n";
  }
  EXPECT_THROW(Config::from_file((dir / "noeq.cfg").string()), config_error);

  Config cfg;
  cfg.set("M", "abc");
  ConfigView cv(cfg);
  EXPECT_THROW(cv.integer("M", 1), config_error);

  Config cfg2;
  cfg2.set("stray", "1");
  ConfigView cv2(cfg2);
  cv2.integer("M", 4);
  EXPECT_THROW(cv2.finish(), config_error);  // unconsumed key
}

TEST(Config, CommandLineOverridesUseKeyEqualsValue) {
  Config cfg;
  cfg.set_kv("dt=0.5");
  cfg.set_kv("mode = fast");
  ConfigView cv(cfg);
  EXPECT_NEAR(cv.number("dt", 0.0), 0.5, 1e-15);
  EXPECT_EQ(cv.text("mode", ""), "fast");
  EXPECT_THROW(cfg.set_kv("broken"), config_error);
}

TEST(Fitting, RecoversExactPowerLaw) {
  std::vector<double> x{1, 2, 4, 8, 16}, y;
  for (double v : x) y.push_back(3.2 * std::pow(v, -1.5));
  RateFit f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, -1.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.2), 1e-12);
  EXPECT_LE(f.halfwidth95, 1e-10);
}

TEST(Kolmogorov, MeasuresDistanceToStandardNormal) {
  // point mass at the median is off by exactly one half
  EXPECT_NEAR(kolmogorov_distance_to_normal({{0.0, 1.0}}, 1.0), 0.5, 1e-15);

  // fine discretization of the normal law converges in Kolmogorov metric
  std::vector<std::pair<double, double>> atoms;
  const double step = 0.05;
  for (double s = -6.0; s <= 6.0; s += step) {
    const double p = normal_cdf(s + 0.5 * step) - normal_cdf(s - 0.5 * step);
    atoms.emplace_back(s, p);
  }
  EXPECT_LE(kolmogorov_distance_to_normal(atoms, 1.0), 0.02);
  // mismatched scale is visible
  EXPECT_GE(kolmogorov_distance_to_normal(atoms, 2.0), 0.1);
}

TEST(Csv, FormatsNumbersDeterministically) {
  EXPECT_EQ(csv_num(1.0 / 3.0), "3.333333333333e-01");
  EXPECT_EQ(csv_num(-0.0), "-0.000000000000e+00");
  EXPECT_EQ(csv_int(-12), "-12");

  fs::path dir = fresh_dir("bosonlab_csv");
  {
    CsvWriter w((dir / "t.csv").string(), {"a", "b"});
    w.row({csv_num(1.5), csv_int(2)});
  }
  EXPECT_EQ(slurp(dir / "t.csv"), "a,b\n1.500000000000e+00,2\n");
}

TEST(Guarded, MapsExceptionsToExitCodes) {
  EXPECT_EQ(run_guarded([] { return 7; }), 7);
  EXPECT_EQ(run_guarded([]() -> int { throw config_error("bad"); }), 2);
  EXPECT_EQ(run_guarded([]() -> int { throw numeric_error("worse"); }), 3);
}

TEST(Drivers, ScatterProducesPassingSummary) {
  fs::path dir = fresh_dir("bosonlab_run_scatter");
  Config cfg;
  int rc = run_scatter(cfg, dir.string());
  EXPECT_EQ(rc, 0);

  auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(j["command"], "scatter");
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_GT(j["metrics"]["a0"].get<double>(), 0.0);
  EXPECT_LE(j["metrics"]["closed_form_rel_error"].get<double>(), 1e-6);

  const std::string csv = slurp(dir / "scatter.csv");
  EXPECT_NE(csv.find("scale,a0,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);  // header + three scales
}

TEST(Drivers, MinimizeHonorsGates) {
  fs::path dir = fresh_dir("bosonlab_run_minimize");
  Config cfg;
  cfg.set("M", "16");
  cfg.set("h", "0.5");
  EXPECT_EQ(run_minimize(cfg, dir.string()), 0);
  auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_TRUE(j["pass"].get<bool>());
}

TEST(Drivers, CltSmokeOnTinySystem) {
  fs::path dir = fresh_dir("bosonlab_run_clt");
  Config cfg;
  cfg.set("M", "2");
  cfg.set("N_list", "2, 4");
  cfg.set("t", "0.1");
  int rc = run_clt(cfg, dir.string());
  auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  ASSERT_TRUE(j["metrics"].contains("kolmogorov"));
  // tiny systems need not satisfy the monotone gate; the contract is exit 0/1
  EXPECT_TRUE(rc == 0 || rc == 1);
}

TEST(Drivers, ConvergeSmokeOnTinySystem) {
  fs::path dir = fresh_dir("bosonlab_run_converge");
  Config cfg;
  cfg.set("M", "3");
  cfg.set("h", "0.7");
  cfg.set("N_list", "1, 2");
  cfg.set("t_final", "0.1");
  cfg.set("rate_min", "-5");
  cfg.set("rate_max", "5");
  EXPECT_EQ(run_converge(cfg, dir.string()), 0);
  const std::string csv = slurp(dir / "converge.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Drivers, GpComparesKernelWidths) {
  fs::path dir = fresh_dir("bosonlab_run_gp");
  Config cfg;
  cfg.set("M", "16");
  cfg.set("h", "0.25");
  cfg.set("t_final", "0.4");
  int rc = run_gp(cfg, dir.string());
  EXPECT_TRUE(rc == 0 || rc == 1);
  auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  ASSERT_TRUE(j["metrics"].contains("sup_distance"));
}

TEST(Drivers, RejectUnknownConfigKeys) {
  fs::path dir = fresh_dir("bosonlab_run_badkey");
  Config cfg;
  cfg.set("no_such_knob", "1");
  EXPECT_EQ(run_guarded([&] { return run_scatter(cfg, dir.string()); }), 2);
}
