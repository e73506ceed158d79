#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfglab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mfglab: state-constrained mean field game laboratory"};
  app.require_subcommand(1);

  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "execute a scenario pipeline");
  run->add_option("config", run_config, "path to a scenario config (JSON)")->required();

  std::string probe_config, panel;
  std::optional<double> t_flag;
  std::vector<double> x_flag;
  double rmin = std::pow(2.0, -9), rmax = std::pow(2.0, -3);
  CLI::App* probe = app.add_subcommand("probe", "run a single verification panel");
  probe->add_option("config", probe_config, "path to a scenario config (JSON)")->required();
  probe->add_option("panel", panel,
                    "semiconcavity|sensitivity|superdiff|hjb|continuity|lambda-plus")
      ->required();
  double t_val = -1.0;
  probe->add_option("--t", t_val, "probe time");
  probe->add_option("--x", x_flag, "probe point coordinates")->expected(1, 2);
  probe->add_option("--rmin", rmin, "smallest sweep radius");
  probe->add_option("--rmax", rmax, "largest sweep radius");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      mfglab::RunConfig cfg = mfglab::load_config(run_config);
      return mfglab::run_pipeline(cfg);
    }
    mfglab::RunConfig cfg = mfglab::load_config(probe_config);
    if (t_val >= 0.0) t_flag = t_val;
    std::optional<mfglab::Vec> x;
    if (x_flag.size() == 1) x = mfglab::Vec(x_flag[0]);
    if (x_flag.size() == 2) x = mfglab::Vec(x_flag[0], x_flag[1]);
    return mfglab::run_probe(cfg, panel, t_flag, x, rmin, rmax);
  } catch (const mfglab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
