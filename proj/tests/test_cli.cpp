#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cavity/cli.hpp"
#include "cavity/commands.hpp"
#include "cavity/config.hpp"
#include "cavity/errors.hpp"
#include "cavity/figures.hpp"
#include "cavity/io.hpp"

using namespace cavity;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cavity_thermo_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t line_count(const fs::path& path) {
  const std::string text = read_text(path);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

RunConfig small_config(const fs::path& dir, std::size_t n = 400) {
  RunConfig c;
  c.output_dir = dir;
  c.integrator.dt = 1e-2;
  c.ensemble.n_traj = n;
  c.ensemble.workers = 1;
  return c;
}

}  // namespace

TEST_CASE("empty configuration yields the defaults", "[config]") {
  const RunConfig c = parse_config(parse_config_text(""), {});
  CHECK(c.params.hbar == 1.0);
  CHECK(c.params.omega == 1.0);
  CHECK(c.params.g == 1.0);
  CHECK(c.params.gamma == 2.0);
  CHECK(c.params.nbar == 1.0);
  CHECK(c.params.eta == 1.0);
  CHECK(c.tau == 10.0);
  CHECK(c.sigma == 2.0);
  CHECK(c.ramp_centre() == 5.0);
  CHECK(c.integrator.dt == 1e-3);
  CHECK(c.ensemble.n_traj == 20000);
  CHECK(c.ensemble.master_seed == 42);
  CHECK(c.emits("samples"));
  CHECK_FALSE(c.emits("trajectories"));
}

TEST_CASE("config file syntax", "[config]") {
  const auto settings = parse_config_text(
      "# cavity run\n"
      "\n"
      "nbar = 2   # warmer bath\n"
      "  shape=step\n"
      "directions = forward\n"
      "emit = samples, trajectories\n"
      "tau = 8\n");
  REQUIRE(settings.size() == 5);
  CHECK(settings[0].key == "nbar");
  CHECK(settings[0].value == "2");
  CHECK(settings[0].line == 3);
  const RunConfig c = parse_config(settings, {});
  CHECK(c.params.nbar == 2.0);
  CHECK(c.shape == RampShape::step);
  CHECK(c.ensemble.run_forward);
  CHECK_FALSE(c.ensemble.run_backward);
  CHECK(c.emits("trajectories"));
  CHECK(c.ramp_centre() == 4.0);
}

TEST_CASE("malformed values name the key and line", "[config]") {
  try {
    parse_config(parse_config_text("g = 1\n\ngamma = fast\n"), {});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.key() == "gamma");
    CHECK(e.line() == 3);
  }
  try {
    parse_config_text("nbar = 1\ntemperature = 3\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.key() == "temperature");
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_config_text("just words\n"), ParseError);
  CHECK_THROWS_AS(parse_config(parse_config_text("n_traj = -5\n"), {}), ParseError);
  CHECK_THROWS_AS(parse_config(parse_config_text("quick = maybe\n"), {}), ParseError);
}

TEST_CASE("out-of-range values fail validation", "[config]") {
  CHECK_THROWS_AS(parse_config(parse_config_text("eta = 1.5\n"), {}), ConfigError);
  CHECK_THROWS_AS(parse_config({}, {{"eta", "0", 0}}), ConfigError);
  CHECK_THROWS_AS(parse_config({}, {{"dt", "0", 0}}), ConfigError);
  CHECK_THROWS_AS(parse_config({}, {{"tau", "-1", 0}}), ConfigError);
  CHECK_THROWS_AS(parse_config({}, {{"n_traj", "1", 0}}), ConfigError);
  CHECK_THROWS_AS(parse_config({}, {{"emit", "pictures", 0}}), ConfigError);
  CHECK_THROWS_AS(parse_config({}, {{"scheme", "milstein", 0}}), ConfigError);
}

TEST_CASE("flags override file values", "[config]") {
  const auto file = parse_config_text("nbar = 1\nseed = 7\n");
  const RunConfig c = parse_config(file, {{"nbar", "0", 0}});
  CHECK(c.params.nbar == 0.0);
  CHECK(c.ensemble.master_seed == 7);
}

TEST_CASE("quick mode shrinks the ensemble unless n_traj is explicit", "[config]") {
  CHECK(parse_config({}, {{"quick", "true", 0}}).ensemble.n_traj == 2000);
  CHECK(parse_config({}, {{"quick", "true", 0}, {"n_traj", "500", 0}}).ensemble.n_traj == 500);
  CHECK(parse_config(parse_config_text("n_traj = 300\n"), {{"quick", "true", 0}}).ensemble.n_traj == 300);
}

TEST_CASE("every config key is accepted", "[config]") {
  RunConfig c;
  for (const auto& key : config_keys()) {
    std::string value = "1";
    if (key == "shape") value = "sigmoid";
    else if (key == "scheme") value = "euler_maruyama";
    else if (key == "directions") value = "forward,backward";
    else if (key == "initial_condition") value = "point";
    else if (key == "output_dir" || key == "samples") value = "somewhere";
    else if (key == "emit") value = "report";
    else if (key == "quick") value = "false";
    else if (key == "eta") value = "0.5";
    CHECK_NOTHROW(apply_setting(c, key, value));
  }
  CHECK_THROWS_AS(apply_setting(c, "colour", "red"), ConfigError);
}

TEST_CASE("work samples round trip exactly", "[io]") {
  const fs::path dir = scratch("roundtrip");
  const std::vector<WorkSample> samples{{Direction::forward, 0, 0.1},
                                        {Direction::forward, 1, -3.141592653589793},
                                        {Direction::backward, 0, 1e-300},
                                        {Direction::backward, 1, 12345.678901234567}};
  write_work_samples(dir / "w.csv", samples);
  CHECK(read_text(dir / "w.csv").starts_with("traj_id,direction,W\n0,forward,0.1\n"));
  const auto back = read_work_samples(dir / "w.csv");
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].work == samples[i].work);
    CHECK(back[i].direction == samples[i].direction);
    CHECK(back[i].traj_id == samples[i].traj_id);
  }
}

TEST_CASE("schema violations name the offending column", "[io]") {
  const fs::path dir = scratch("schema");
  const auto expect_column = [&](const std::string& text, const std::string& column) {
    write_text(dir / "bad.csv", text);
    try {
      read_work_samples(dir / "bad.csv");
      FAIL("expected a schema error for " + column);
    } catch (const SchemaError& e) {
      CHECK(e.column() == column);
    }
  };
  expect_column("traj_id,direction,Work\n0,forward,1.0\n", "Work");
  expect_column("traj_id,direction\n0,forward\n", "W");
  expect_column("traj_id,direction,W,extra\n0,forward,1,2\n", "extra");
  expect_column("traj_id,direction,W\n0,forward,abc\n", "W");
  expect_column("traj_id,direction,W\nx,forward,1\n", "traj_id");
  expect_column("traj_id,direction,W\n0,upward,1\n", "direction");
  expect_column("traj_id,direction,W\n0,forward\n", "W");
  expect_column("traj_id,direction,W\n0,forward,nan\n", "W");
  CHECK_THROWS_AS(read_work_samples(dir / "missing.csv"), IoError);
}

TEST_CASE("simulate writes the requested rows deterministically", "[cli]") {
  const fs::path dir = scratch("simulate");
  RunConfig c = small_config(dir, 10);
  c.emit.insert("trajectories");
  std::ostringstream log;
  REQUIRE(cmd_simulate(c, log) == kExitOk);
  CHECK(line_count(dir / "work_samples.csv") == 1 + 20);
  CHECK(line_count(dir / "trajectories.csv") == 1 + 2 * 10 * 11);
  const std::string first = read_text(dir / "work_samples.csv");
  REQUIRE(cmd_simulate(c, log) == kExitOk);
  CHECK(read_text(dir / "work_samples.csv") == first);
  CHECK_NOTHROW(read_csv(dir / "trajectories.csv", kTrajectoryColumns));
}

TEST_CASE("analyze writes the report and its companions", "[cli]") {
  const fs::path dir = scratch("analyze");
  const RunConfig c = small_config(dir, 4000);
  std::ostringstream log;
  REQUIRE(cmd_simulate(c, log) == kExitOk);
  REQUIRE(cmd_analyze(c, log) == kExitOk);

  const auto report = nlohmann::json::parse(read_text(dir / "report.json"));
  for (const char* key : {"params", "beta_eff_analytic", "beta_hat", "beta_hat_stderr",
                          "delta_F_analytic", "delta_F_hat", "mean_W_F", "var_W_F",
                          "sigma_avg_analytic", "sigma_avg_kl", "fisher_info", "cramer_rao_bound",
                          "tur_margin", "info_margin", "n_traj", "seed"}) {
    CHECK(report.contains(key));
  }
  CHECK_THAT(report["beta_eff_analytic"].get<double>(), WithinAbs(2.0 / 3.0, 1e-15));
  const double df = report["delta_F_hat"].get<double>();
  CHECK(df > -0.7);
  CHECK(df < -0.3);
  CHECK(report["n_traj"] == 4000);
  CHECK(report["seed"] == 42);
  CHECK(report["params"]["nbar"] == 1.0);

  const CsvTable points = read_csv(dir / "crooks_points.csv", kCrooksPointsColumns);
  CHECK(points.rows.size() == report["diagnostics"]["crooks_bins"].get<std::size_t>());
  const CsvTable hist = read_csv(dir / "histogram.csv", kHistogramColumns);
  CHECK(hist.rows.size() % 2 == 0);
}

TEST_CASE("analyze reports schema errors with exit code 2", "[cli]") {
  const fs::path dir = scratch("analyze_bad");
  write_text(dir / "work_samples.csv", "traj_id,dir,W\n0,forward,1\n");
  std::ostringstream log;
  CHECK(cmd_analyze(small_config(dir), log) == kExitIo);
  CHECK_THAT(log.str(), ContainsSubstring("'dir'"));
  fs::remove(dir / "work_samples.csv");
  CHECK(cmd_analyze(small_config(dir), log) == kExitIo);
}

TEST_CASE("simulate maps I/O failure and divergence to exit codes", "[cli]") {
  const fs::path dir = scratch("exit_codes");
  write_text(dir / "occupied", "a file, not a directory");
  std::ostringstream log;
  CHECK(cmd_simulate(small_config(dir / "occupied" / "out"), log) == kExitIo);

  RunConfig wild = small_config(dir / "wild", 4);
  wild.params.gamma = 100.0;
  wild.integrator.dt = 1.0;
  wild.tau = 1000.0;
  std::ostringstream wild_log;
  CHECK(cmd_simulate(wild, wild_log) == kExitDiverged);
  CHECK_THAT(wild_log.str(), ContainsSubstring("warning"));
  CHECK_THAT(wild_log.str(), ContainsSubstring("diverged"));
}

TEST_CASE("figures writes every documented dataset", "[cli]") {
  const fs::path dir = scratch("figures");
  RunConfig c = small_config(dir, 2000);
  c.export_trajectories = 3;
  std::ostringstream log;
  REQUIRE(cmd_figures(c, log) == kExitOk);

  const CsvTable wigner = read_csv(dir / "fig1_wigner.csv", kWignerColumns);
  std::size_t best = 0;
  for (std::size_t r = 0; r < wigner.rows.size(); ++r) {
    if (wigner.rows[r][0] == "final" && wigner.number(r, "density") > wigner.number(best, "density")) best = r;
  }
  CHECK_THAT(wigner.number(best, "q"), WithinAbs(1.0, 1e-12));

  const CsvTable cycle = read_csv(dir / "fig1_cycle.csv", kCycleColumns);
  CHECK(cycle.rows.size() == 2 * 11);
  const CsvTable traj = read_csv(dir / "fig2_trajectories.csv", kFigTrajectoryColumns);
  CHECK(traj.rows.size() == 2 * 3 * 11);
  const CsvTable paths = read_csv(dir / "fig3_workpaths.csv", kWorkPathColumns);
  CHECK(paths.rows.size() == traj.rows.size());
  const CsvTable hist = read_csv(dir / "fig3_hist.csv", kFigHistColumns);
  CHECK_FALSE(hist.rows.empty());
  const CsvTable crooks = read_csv(dir / "fig4_crooks.csv", kFigCrooksColumns);
  const auto report = nlohmann::json::parse(read_text(dir / "report.json"));
  // The fitted column is the report's regression line.
  const double w0 = crooks.number(0, "W");
  CHECK_THAT(crooks.number(0, "fit"),
             WithinAbs(report["beta_hat"].get<double>() * (w0 - report["delta_F_hat"].get<double>()), 1e-9));
  const CsvTable ineq = read_csv(dir / "fig5_inequality.csv", kInequalityColumns);
  CHECK(ineq.rows.size() == 3 * 3 * 60);

  // The same seed reproduces the figure data byte for byte.
  const std::string first = read_text(dir / "fig1_cycle.csv");
  REQUIRE(cmd_figures(c, log) == kExitOk);
  CHECK(read_text(dir / "fig1_cycle.csv") == first);
}

TEST_CASE("command line parsing and dispatch", "[cli]") {
  const fs::path dir = scratch("cli");
  std::ostringstream out, err;
  CHECK(run_cli({"--help"}, out, err) == kExitOk);
  CHECK_THAT(out.str(), ContainsSubstring("simulate"));
  CHECK(run_cli({}, out, err) == kExitIo);
  CHECK(run_cli({"simulate", "--bogus"}, out, err) == kExitIo);
  CHECK(run_cli({"simulate", "--config", (dir / "nope.cfg").string()}, out, err) == kExitIo);
  CHECK(run_cli({"simulate", "--eta", "1.5", "--out", dir.string()}, out, err) == kExitIo);

  write_text(dir / "run.cfg", "nbar = 1\ndt = 0.01\nn_traj = 50\n");
  const std::string out_dir = (dir / "out").string();
  REQUIRE(run_cli({"simulate", "--config", (dir / "run.cfg").string(), "--n-traj", "10", "--nbar", "0",
                   "--out", out_dir, "--workers", "2"},
                  out, err) == kExitOk);
  CHECK(line_count(dir / "out" / "work_samples.csv") == 21);

  // Global flags before the subcommand work too.
  REQUIRE(run_cli({"--out", out_dir, "--dt", "0.01", "--n-traj", "12", "--seed", "3", "simulate"}, out, err) ==
          kExitOk);
  CHECK(line_count(dir / "out" / "work_samples.csv") == 25);
}
