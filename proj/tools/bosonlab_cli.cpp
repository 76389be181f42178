// Command-line front end: one subcommand per experiment driver.
//
// Exit codes: 0 success, 1 acceptance gate failed, 2 config error,
// 3 numeric failure.

#include "bosonlab/harness.hpp"

#include "CLI11.hpp"

#include <string>
#include <vector>

namespace {

struct DriverEntry {
  const char* name;
  const char* description;
  int (*run)(const bosonlab::Config&, const std::string&);
};

constexpr DriverEntry kDrivers[] = {
    {"converge", "mean-field convergence of the one-particle reduced density",
     &bosonlab::run_converge},
    {"fluct", "growth of the fluctuation particle number across N", &bosonlab::run_fluct},
    {"clt", "central limit statistics of a one-body observable", &bosonlab::run_clt},
    {"gp", "Hartree vs Gross-Pitaevskii under kernel narrowing", &bosonlab::run_gp},
    {"minimize", "Gross-Pitaevskii ground states by projected gradient", &bosonlab::run_minimize},
    {"scatter", "zero-energy two-body scattering toolbox", &bosonlab::run_scatter},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bosonlab: a lattice laboratory for mean-field limits of Bose gases"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string seed;
  std::vector<std::string> overrides;

  const DriverEntry* chosen = nullptr;
  for (const auto& entry : kDrivers) {
    CLI::App* sub = app.add_subcommand(entry.name, entry.description);
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--out", out_dir, "output directory (created if missing)");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--set", overrides, "override a config entry, key=value")
        ->take_all()
        ->expected(-1);
    sub->callback([&chosen, &entry] { chosen = &entry; });
  }

  CLI11_PARSE(app, argc, argv);

  return bosonlab::run_guarded([&] {
    bosonlab::Config cfg;
    if (!config_path.empty()) cfg = bosonlab::Config::from_file(config_path);
    for (const auto& kv : overrides) cfg.set_kv(kv);
    if (!seed.empty()) cfg.set("seed", seed);
    return chosen->run(cfg, out_dir);
  });
}
