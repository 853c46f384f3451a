#include "cavity/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cavity/commands.hpp"
#include "cavity/errors.hpp"
#include "cavity/figures.hpp"

namespace cavity {

namespace {

using json = nlohmann::json;

std::string fmt(double value, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const std::filesystem::path& path) { return json::parse(slurp(path)); }

/// Names of fields that are null (non-finite when written) or non-finite.
void collect_non_finite(const json& node, const std::string& prefix, std::vector<std::string>& bad) {
  if (node.is_object()) {
    for (const auto& [key, value] : node.items()) collect_non_finite(value, prefix + key + ".", bad);
  } else if (node.is_null() || (node.is_number_float() && !std::isfinite(node.get<double>()))) {
    bad.push_back(prefix.substr(0, prefix.size() - 1));
  }
}

void run_step(std::ostream& log, const std::string& label,
              const std::function<int(std::ostream&)>& body) {
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream messages;
  const int code = body(messages);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log << "  " << label << " (" << fmt(secs, 3) << " s)\n";
  if (code != kExitOk) {
    std::string text = messages.str();
    while (!text.empty() && text.back() == '\n') text.pop_back();
    throw std::runtime_error(label + " exited with code " + std::to_string(code) + ": " + text);
  }
}

struct Context {
  RunConfig config;
  double k = 1.0;  // tolerance multiplier
  std::filesystem::path scratch;
  std::ostream* log = nullptr;
};

CriterionResult flat_variance(const Context& ctx) {
  const RunConfig& c = ctx.config;
  IntegratorConfig integ = c.integrator;
  integ.record_stride = 1;
  const EstimateIntegrator integrator(c.params, c.protocols().forward, integ);
  NoiseStream stream(c.ensemble.master_seed, 0, NoiseChannel::forward);
  const double target = q_variance(c.params);
  double worst = 0.0;
  integrator.run(stream, 0.0, [&](std::size_t, const TrajectoryState& s) {
    worst = std::max(worst, std::abs(s.q_var - target));
  });
  const double tol = 1e-9 * ctx.k;
  return {1, "flat conditional variance", worst < tol,
          "max |dq2 - " + fmt(target) + "| = " + fmt(worst, 3) + " (tol " + fmt(tol, 2) + ")"};
}

CriterionResult deterministic_mean(const Context& ctx) {
  const RunConfig& c = ctx.config;
  IntegratorConfig integ = c.integrator;
  integ.record_stride = 10;
  double worst = 0.0;
  for (const auto& protocol : {c.protocols().forward, c.protocols().backward}) {
    const EstimateIntegrator integrator(c.params, protocol, integ);
    NoiseStream stream(c.ensemble.master_seed, 1, channel_for(protocol.direction));
    double max_err = 0.0;
    double scale = 0.0;
    integrator.run(stream, initial_mean_q(c.params, protocol), [&](std::size_t, const TrajectoryState& s) {
      const double exact = mean_q(c.params, protocol, s.t);
      max_err = std::max(max_err, std::abs(s.q_mean - exact));
      scale = std::max(scale, std::abs(exact));
    });
    worst = std::max(worst, scale > 0.0 ? max_err / scale : max_err);
  }
  const double tol = 1e-6 * ctx.k;
  return {2, "deterministic conditional mean", worst < tol,
          "max relative deviation from quadrature " + fmt(worst, 3) + " over both protocols (tol " +
              fmt(tol, 2) + ")"};
}

CriterionResult work_mean(const Context& ctx, const ThermoReport& r) {
  const RunConfig& c = ctx.config;
  const double diff = std::abs(r.mean_W_F - r.mean_work_analytic);
  const double limit = 3.0 * ctx.k * r.se_W_F;
  RampProtocol flat{RampShape::constant, 1.0, 2.5, 5.0, Direction::forward};
  const double g = c.params.g, gamma = c.params.gamma;
  const double closed = 2.0 * g * g / gamma * (5.0 - 2.0 / gamma * (1.0 - std::exp(-gamma * 2.5)));
  const double quad = mean_work(c.params, flat);
  const double closed_err = std::abs(quad - closed);
  const double closed_tol = 1e-6 * ctx.k;
  const bool pass = diff <= limit && closed_err < closed_tol;
  return {3, "work mean", pass,
          "mean_F=" + fmt(r.mean_W_F, 6) + " vs quadrature " + fmt(r.mean_work_analytic, 6) +
              " (|diff| " + fmt(diff, 3) + ", limit " + fmt(limit, 3) + "); constant-drive tau=5: " +
              fmt(quad, 8) + " vs closed form " + fmt(closed, 8) + " (err " + fmt(closed_err, 2) + ")"};
}

CriterionResult work_variance(const Context& ctx, const ThermoReport& r) {
  const PhysicalParams& p = ctx.config.params;
  const double ratio = r.var_W_F / (p.hbar * p.omega * p.noise_factor() / p.eta * r.mean_W_F);
  const double half = 0.05 * ctx.k;
  return {4, "work variance", std::abs(ratio - 1.0) <= half,
          "var_F / (hbar omega L / eta * mean_F) = " + fmt(ratio, 5) + " (allowed [" +
              fmt(1.0 - half, 3) + ", " + fmt(1.0 + half, 3) + "])"};
}

CriterionResult gaussianity(const Context& ctx, const WorkEnsemble& ensemble, const ThermoReport& r) {
  const PhysicalParams& p = ctx.config.params;
  const double mean = r.mean_work_analytic;
  const double d = ks_statistic(ensemble.get(Direction::forward).work,
                                [&](double w) { return work_cdf(p, mean, w); });
  const double tol = 0.02 * ctx.k;
  return {5, "Gaussian work distribution", d < tol,
          "KS distance to the Gaussian work law " + fmt(d, 4) + " (tol " + fmt(tol, 2) + ")"};
}

CriterionResult crooks_slope(const Context& ctx, const json& report) {
  const PhysicalParams& p = ctx.config.params;
  const double beta = report.at("beta_eff_analytic").get<double>();
  const double beta_hat = report.at("beta_hat").get<double>();
  const double stderr_ = report.at("beta_hat_stderr").get<double>();
  const double rel = std::abs(beta_hat / beta - 1.0);
  const double tol = 0.05 * ctx.k;
  const ProtocolPair protocols = ctx.config.protocols();
  const double mu_f = mean_work(p, protocols.forward);
  const double mu_b = mean_work(p, protocols.backward);
  const double predicted = (mu_f + mu_b) * p.eta / (p.hbar * p.omega * p.noise_factor() * mu_f);
  return {6, "Crooks slope", rel < tol,
          "beta_hat=" + fmt(beta_hat, 5) + " +/- " + fmt(stderr_, 2) + " vs beta_eff=" + fmt(beta, 5) +
              " (rel " + fmt(100.0 * rel, 3) + "%, tol " + fmt(100.0 * tol, 2) +
              "%); equal-variance Gaussian prediction (mu_F+mu_B)/s_F^2 = " + fmt(predicted, 5)};
}

CriterionResult free_energy(const Context& ctx, const json& report) {
  const double target = report.at("delta_F_analytic").get<double>();
  const double hat = report.at("delta_F_hat").get<double>();
  const double tol = 0.1 * ctx.k;
  return {7, "free energy", std::abs(hat - target) <= tol,
          "delta_F_hat=" + fmt(hat, 5) + " vs " + fmt(target, 4) + " (tol " + fmt(tol, 2) + ")"};
}

CriterionResult entropy_consistency(const Context& ctx, const json& report) {
  const double analytic = report.at("sigma_avg_analytic").get<double>();
  const double kl = report.at("sigma_avg_kl").get<double>();
  const auto& diag = report.at("diagnostics");
  const double rel = std::abs(kl / analytic - 1.0);
  const double tol = 0.1 * ctx.k;
  return {8, "entropy production consistency", rel < tol,
          "sigma_avg_kl=" + fmt(kl, 5) + " vs beta_eff(W_F - delta_F)=" + fmt(analytic, 5) + " (rel " +
              fmt(100.0 * rel, 3) + "%, tol " + fmt(100.0 * tol, 2) + "%); histogram coverage " +
              fmt(diag.at("kl_coverage").get<double>(), 3) + ", Gaussian-fit KL " +
              fmt(diag.at("sigma_avg_kl_gaussian").get<double>(), 5)};
}

CriterionResult zero_temperature(const Context& ctx) {
  RunConfig c = ctx.config;
  c.params.nbar = 0.0;
  c.output_dir = ctx.scratch / "nbar0";
  c.samples_path.reset();
  c.emit = {"samples", "report", "crooks", "histograms"};
  run_step(*ctx.log, "simulate n_bar=0", [&](std::ostream& o) { return cmd_simulate(c, o); });
  run_step(*ctx.log, "analyze n_bar=0", [&](std::ostream& o) { return cmd_analyze(c, o); });
  const json report = read_json(c.output_dir / "report.json");
  std::vector<std::string> bad;
  collect_non_finite(report, "", bad);
  const double beta = report.at("beta_eff_analytic").is_number() ? report["beta_eff_analytic"].get<double>() : NAN;
  const double beta_hat = report.at("beta_hat").is_number() ? report["beta_hat"].get<double>() : NAN;
  const double rel = std::abs(beta_hat / beta - 1.0);
  const double tol = 0.05 * ctx.k;
  std::string detail = "beta_hat=" + fmt(beta_hat, 5) + " vs beta_eff=" + fmt(beta, 4) + " (rel " +
                       fmt(100.0 * rel, 3) + "%, tol " + fmt(100.0 * tol, 2) + "%)";
  if (report.contains("sigma_avg_kl") && report.contains("fisher_info")) {
    detail += "; sigma_avg_kl=" + report["sigma_avg_kl"].dump() + ", fisher_info=" + report["fisher_info"].dump();
  }
  detail += bad.empty() ? "; all report fields finite" : "; non-finite fields:";
  for (const auto& b : bad) detail += " " + b;
  return {9, "zero temperature", bad.empty() && rel < tol, detail};
}

CriterionResult inequalities(const Context& ctx, const json& report) {
  std::mt19937_64 rng(ctx.config.ensemble.master_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0;
  double min_tur = INFINITY, min_cr = INFINITY, min_info = INFINITY;
  constexpr int kPoints = 100;
  for (int i = 0; i < kPoints; ++i) {
    PhysicalParams p;
    p.eta = 0.05 + 0.95 * u(rng);
    p.nbar = 5.0 * u(rng);
    p.g = 0.2 + 1.8 * u(rng);
    p.gamma = 0.5 + 3.5 * u(rng);
    p.omega = 0.5 + 1.5 * u(rng);
    const double tau = 2.0 + 18.0 * u(rng);
    const double sigma = 0.5 + 3.5 * u(rng);
    const RampProtocol protocol{RampShape::sigmoid, sigma, 0.5 * tau, tau, Direction::forward};
    const double w = mean_work(p, protocol);
    const double beta = beta_eff(p);
    const double sigma_avg = beta * (w - delta_F(p));
    const double var_w = p.hbar * p.omega * p.noise_factor() * w / p.eta;
    const FisherInfo fi = fisher_information(beta, w, var_w);
    const double tur = tur_check(beta, w, var_w, sigma_avg).margin;
    const double cr = fi.value - fi.cramer_rao_bound;
    const double info = information_inequality(fi.value, sigma_avg, beta);
    min_tur = std::min(min_tur, tur);
    min_cr = std::min(min_cr, cr);
    min_info = std::min(min_info, info);
    if (!(tur >= 0.0 && cr >= 0.0 && info >= 0.0)) ++violations;
  }
  const double mc_tur = report.at("tur_margin").get<double>();
  const double mc_info = report.at("info_margin").get<double>();
  const double mc_cr = report.at("fisher_info").get<double>() - report.at("cramer_rao_bound").get<double>();
  const bool mc_ok = mc_tur >= 0.0 && mc_info >= 0.0 && mc_cr >= 0.0;
  return {10, "inequality suite", violations == 0 && mc_ok,
          std::to_string(violations) + " violations on " + std::to_string(kPoints) +
              "-point grid (min margins TUR " + fmt(min_tur, 3) + ", CR " + fmt(min_cr, 3) + ", info " +
              fmt(min_info, 3) + "); Monte Carlo run: TUR " + fmt(mc_tur, 4) + ", CR " + fmt(mc_cr, 4) +
              ", info " + fmt(mc_info, 4)};
}

CriterionResult ness_balance(const Context& ctx) {
  const PhysicalParams& p = ctx.config.params;
  const EnergyFlows ness = energy_flows(p, 1.0, steady_state_q(p));
  const double balance = std::abs(ness.power + ness.heat);

  RunConfig c = ctx.config;
  c.output_dir = ctx.scratch / "figures";
  c.samples_path.reset();
  run_step(*ctx.log, "figures", [&](std::ostream& o) { return cmd_figures(c, o); });
  const CsvTable cycle = read_csv(c.output_dir / "fig1_cycle.csv", kCycleColumns);
  const std::size_t dir_col = cycle.column("direction");
  std::optional<std::size_t> last;
  for (std::size_t r = 0; r < cycle.rows.size(); ++r) {
    if (cycle.rows[r][dir_col] == "forward") last = r;
  }
  if (!last) throw MissingData("fig1_cycle.csv has no forward rows");
  const double power = cycle.number(*last, "power");
  const double heat = cycle.number(*last, "heat");
  const double power_an = cycle.number(*last, "power_analytic");
  const double heat_an = cycle.number(*last, "heat_analytic");
  const double tol = 0.02 * ctx.k;
  const double power_err = std::abs(power / ness.power - 1.0);
  const double heat_err = std::abs(heat / ness.heat - 1.0);
  return {11, "NESS balance", balance < 1e-9 * ctx.k && power_err < tol && heat_err < tol,
          "|power + heat| at steady state " + fmt(balance, 2) + "; fig1_cycle forward end (" +
              fmt(power, 5) + ", " + fmt(heat, 5) + ") vs (" + fmt(ness.power, 3) + ", " +
              fmt(ness.heat, 3) + ") (rel " + fmt(100.0 * power_err, 3) + "%, " +
              fmt(100.0 * heat_err, 3) + "%, tol " + fmt(100.0 * tol, 2) + "%); analytic end (" +
              fmt(power_an, 5) + ", " + fmt(heat_an, 5) + ")"};
}

CriterionResult determinism(const std::vector<std::filesystem::path>& dirs,
                            const std::vector<unsigned>& workers) {
  const std::string reference = slurp(dirs.front() / "work_samples.csv");
  std::string detail = "work_samples.csv (" + std::to_string(reference.size()) + " bytes) with workers";
  bool pass = !reference.empty() && dirs.size() == workers.size();
  if (dirs.size() != workers.size()) detail = "only " + std::to_string(dirs.size()) + " of the runs completed; " + detail;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const bool same = slurp(dirs[i] / "work_samples.csv") == reference;
    pass = pass && same;
    detail += " " + std::to_string(workers[i]) + (same ? "=" : "!=");
  }
  return {12, "determinism", pass, detail + (pass ? " byte-identical" : " differ")};
}

CriterionResult weak_convergence(const Context& ctx) {
  RunConfig coarse = ctx.config;
  coarse.ensemble.run_backward = false;
  coarse.ensemble.run_forward = true;
  coarse.integrator.noise_substeps = 2;
  RunConfig fine = coarse;
  fine.integrator.dt = 0.5 * coarse.integrator.dt;
  fine.integrator.noise_substeps = 1;
  WorkEnsemble a, b;
  run_step(*ctx.log, "forward ensemble at dt", [&](std::ostream&) {
    a = simulate_ensemble(coarse);
    return kExitOk;
  });
  run_step(*ctx.log, "forward ensemble at dt/2", [&](std::ostream&) {
    b = simulate_ensemble(fine);
    return kExitOk;
  });
  const DirectionSummary sa = summarize(a.get(Direction::forward));
  const DirectionSummary sb = summarize(b.get(Direction::forward));
  const double diff = std::abs(sa.mean - sb.mean);
  const double limit = ctx.k * sa.std_error;
  return {13, "weak convergence", diff < limit,
          "mean_F(dt)=" + fmt(sa.mean, 6) + ", mean_F(dt/2)=" + fmt(sb.mean, 6) + " (|diff| " +
              fmt(diff, 3) + ", one SE " + fmt(limit, 3) + ", shared Brownian paths)"};
}

template <class Fn>
CriterionResult attempt(int id, const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {id, name, false, std::string("error: ") + e.what()};
  }
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const RunConfig& config, std::ostream& log) {
  Context ctx;
  ctx.config = config;
  ctx.config.samples_path.reset();
  ctx.k = config.quick ? 2.0 : 1.0;
  ctx.scratch = config.output_dir / "verify";
  ctx.log = &log;
  std::filesystem::create_directories(ctx.scratch);

  log << "acceptance: n_traj=" << config.ensemble.n_traj << ", seed=" << config.ensemble.master_seed
      << ", dt=" << config.integrator.dt << (config.quick ? ", quick mode (tolerances x2)" : "")
      << '\n';

  std::vector<CriterionResult> results;
  results.push_back(attempt(1, "flat conditional variance", [&] { return flat_variance(ctx); }));
  results.push_back(attempt(2, "deterministic conditional mean", [&] { return deterministic_mean(ctx); }));

  // Main Monte Carlo run through the file pipeline, repeated for criterion 12.
  const std::vector<unsigned> workers{1, 2, 8};
  std::vector<std::filesystem::path> dirs;
  std::optional<std::string> pipeline_error;
  try {
    for (unsigned w : workers) {
      RunConfig c = ctx.config;
      c.ensemble.workers = w;
      c.output_dir = ctx.scratch / ("workers" + std::to_string(w));
      c.emit = {"samples", "report", "crooks", "histograms"};
          run_step(log, "simulate with " + std::to_string(w) + " worker(s)", [&](std::ostream& o) { return cmd_simulate(c, o); });
      if (dirs.empty()) run_step(log, "analyze", [&](std::ostream& o) { return cmd_analyze(c, o); });
      dirs.push_back(c.output_dir);
    }
  } catch (const std::exception& e) {
    pipeline_error = e.what();
  }

  const auto main_run = [&]<class Fn>(int id, const std::string& name, Fn&& fn) {
    if (dirs.empty()) return CriterionResult{id, name, false, "error: " + pipeline_error.value_or("no run")};
    return attempt(id, name, std::forward<Fn>(fn));
  };

  std::optional<WorkEnsemble> ensemble;
  std::optional<ThermoReport> report;
  json report_json;
  if (!dirs.empty()) {
    try {
      const auto samples = read_work_samples(dirs.front() / "work_samples.csv");
      ensemble = ensemble_from_samples(samples);
      report = analyze_samples(ctx.config, samples).report;
      report_json = read_json(dirs.front() / "report.json");
    } catch (const std::exception& e) {
      pipeline_error = e.what();
      dirs.clear();
    }
  }

  results.push_back(main_run(3, "work mean", [&] { return work_mean(ctx, *report); }));
  results.push_back(main_run(4, "work variance", [&] { return work_variance(ctx, *report); }));
  results.push_back(main_run(5, "Gaussian work distribution", [&] { return gaussianity(ctx, *ensemble, *report); }));
  results.push_back(main_run(6, "Crooks slope", [&] { return crooks_slope(ctx, report_json); }));
  results.push_back(main_run(7, "free energy", [&] { return free_energy(ctx, report_json); }));
  results.push_back(main_run(8, "entropy production consistency", [&] { return entropy_consistency(ctx, report_json); }));
  results.push_back(attempt(9, "zero temperature", [&] { return zero_temperature(ctx); }));
  results.push_back(main_run(10, "inequality suite", [&] { return inequalities(ctx, report_json); }));
  results.push_back(attempt(11, "NESS balance", [&] { return ness_balance(ctx); }));
  results.push_back(main_run(12, "determinism", [&] { return determinism(dirs, workers); }));
  results.push_back(attempt(13, "weak convergence", [&] { return weak_convergence(ctx); }));
  return results;
}

std::string format_result(const CriterionResult& r) {
  return std::string(r.pass ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name + ": " +
         r.detail;
}

}  // namespace cavity
