#include "cavity/cli.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "cavity/commands.hpp"
#include "cavity/config.hpp"
#include "cavity/errors.hpp"

namespace cavity {

namespace {

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate and analyse work statistics of a continuously monitored driven cavity"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  app.add_option("--config", config_path, "key = value configuration file");
  bool quick = false;
  app.add_flag("--quick", quick, "n_traj = 2000 and doubled acceptance tolerances");

  std::map<std::string, std::string> values;
  for (const auto& key : config_keys()) {
    if (key == "quick") continue;
    std::string names = "--" + dashed(key);
    if (key == "output_dir") names += ",--out";
    app.add_option(names, values[key], "config key '" + key + "'");
  }

  auto* simulate = app.add_subcommand("simulate", "write work_samples.csv (and trajectories.csv)");
  auto* analyze = app.add_subcommand("analyze", "write report.json, crooks_points.csv, histogram.csv");
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  auto* figures = app.add_subcommand("figures", "write the fig*.csv datasets");
  for (auto* sub : {simulate, analyze, verify, figures}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return kExitIo;
  }

  RunConfig config;
  try {
    std::vector<Setting> file;
    if (config_path) file = read_config_file(*config_path);
    std::vector<Setting> flags;
    for (const auto& key : config_keys()) {
      if (key == "quick") continue;
      if (app.count("--" + dashed(key)) > 0) flags.push_back({key, values[key], 0});
    }
    if (quick) flags.push_back({"quick", "true", 0});
    config = parse_config(file, flags);
  } catch (const std::exception& e) {
    err << "config: " << e.what() << '\n';
    return kExitIo;
  }

  if (*simulate) return cmd_simulate(config, err);
  if (*analyze) return cmd_analyze(config, err);
  if (*figures) return cmd_figures(config, err);
  return cmd_verify(config, out);
}

}  // namespace cavity
