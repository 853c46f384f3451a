#include "cavity/commands.hpp"

#include <cmath>
#include <filesystem>
#include <ostream>

#include "cavity/acceptance.hpp"
#include "cavity/errors.hpp"
#include "cavity/figures.hpp"

namespace cavity {

namespace {

template <class Body>
int guarded(std::ostream& log, std::string_view command, Body&& body) {
  try {
    return body();
  } catch (const IntegrationDiverged& e) {
    log << command << ": " << e.what() << '\n';
    return kExitDiverged;
  } catch (const SchemaError& e) {
    log << command << ": schema error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    log << command << ": " << e.what() << '\n';
    return kExitIo;
  }
}

void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void warn_if_unstable(const RunConfig& config, std::ostream& log) {
  if (auto warning = stability_warning(config.params, config.integrator)) {
    log << "warning: " << *warning << '\n';
  }
}

}  // namespace

WorkEnsemble simulate_ensemble(const RunConfig& config, bool track_mean_path) {
  EnsembleConfig ensemble = config.ensemble;
  ensemble.retain_samples = true;
  ensemble.track_mean_path = track_mean_path;
  return run_ensemble(config.params, config.protocols(), ensemble, config.integrator);
}

std::vector<TrajectoryRow> export_trajectories(const RunConfig& config, Direction direction,
                                               std::size_t count) {
  const ProtocolPair protocols = config.protocols();
  const RampProtocol& protocol =
      direction == Direction::forward ? protocols.forward : protocols.backward;
  const EstimateIntegrator integrator(config.params, protocol, config.integrator,
                                      config.ensemble.burn_in);
  std::vector<TrajectoryRow> rows;
  count = std::min(count, config.ensemble.n_traj);
  rows.reserve(count * integrator.n_records());
  for (std::size_t id = 0; id < count; ++id) {
    NoiseStream stream(config.ensemble.master_seed, id, channel_for(direction));
    const double x0 = draw_initial_x(config.params, protocol, config.ensemble.initial, stream);
    integrator.run_work_only(stream, x0, [&](std::size_t, const TrajectoryState& s) {
      rows.push_back({id, direction, s.t, lambda_at(protocol, s.t), s.x, s.work});
    });
  }
  return rows;
}

AnalysisResult analyze_samples(const RunConfig& config, std::span<const WorkSample> samples) {
  const WorkEnsemble ensemble = ensemble_from_samples(samples);
  AnalysisResult out;
  out.crooks = crooks_analysis(ensemble);
  out.report = analyze(config.params, config.protocols().forward, ensemble, out.crooks);
  return out;
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
  return guarded(log, "simulate", [&] {
    config.validate();
    warn_if_unstable(config, log);
    prepare_output_dir(config.output_dir);
    const WorkEnsemble ensemble = simulate_ensemble(config);
    const auto samples = ensemble.samples();
    write_work_samples(config.output_dir / "work_samples.csv", samples);
    if (config.emits("trajectories")) {
      std::vector<TrajectoryRow> rows;
      for (Direction d : {Direction::forward, Direction::backward}) {
        if (!ensemble.has(d)) continue;
        auto part = export_trajectories(config, d, config.export_trajectories);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      write_trajectories(config.output_dir / "trajectories.csv", rows);
    }
    log << "simulate: wrote " << samples.size() << " work samples to "
        << (config.output_dir / "work_samples.csv").string() << '\n';
    return kExitOk;
  });
}

int cmd_analyze(const RunConfig& config, std::ostream& log) {
  return guarded(log, "analyze", [&] {
    config.validate();
    prepare_output_dir(config.output_dir);
    const auto samples = read_work_samples(config.samples_file());
    const AnalysisResult result = analyze_samples(config, samples);
    if (config.emits("report")) write_report(config.output_dir / "report.json", config, result.report);
    if (config.emits("crooks")) write_crooks_points(config.output_dir / "crooks_points.csv", result.crooks.points);
    if (config.emits("histograms")) write_histograms(config.output_dir / "histogram.csv", result.crooks);
    const ThermoReport& r = result.report;
    log << "analyze: beta_hat=" << r.beta_hat << " +/- " << r.beta_hat_stderr
        << " (beta_eff=" << r.beta_eff_analytic << "), delta_F_hat=" << r.delta_F_hat
        << " (delta_F=" << r.delta_F_analytic << ")\n";
    return kExitOk;
  });
}

int cmd_figures(const RunConfig& config, std::ostream& log) {
  return guarded(log, "figures", [&] {
    config.validate();
    warn_if_unstable(config, log);
    prepare_output_dir(config.output_dir);
    const WorkEnsemble ensemble = simulate_ensemble(config, true);
    const auto samples = ensemble.samples();
    write_work_samples(config.output_dir / "work_samples.csv", samples);
    const AnalysisResult result = analyze_samples(config, samples);
    write_report(config.output_dir / "report.json", config, result.report);
    write_crooks_points(config.output_dir / "crooks_points.csv", result.crooks.points);
    write_histograms(config.output_dir / "histogram.csv", result.crooks);
    write_figure_data(config, ensemble, result, config.output_dir);
    log << "figures: wrote datasets to " << config.output_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_verify(const RunConfig& config, std::ostream& out) {
  return guarded(out, "verify", [&] {
    config.validate();
    warn_if_unstable(config, out);
    const auto results = run_acceptance(config, out);
    std::vector<const CriterionResult*> failed;
    for (const auto& r : results) {
      out << format_result(r) << '\n';
      if (!r.pass) failed.push_back(&r);
    }
    if (failed.empty()) {
      out << "verify: all " << results.size() << " criteria passed\n";
      return kExitOk;
    }
    out << "verify: " << failed.size() << " of " << results.size() << " criteria failed:";
    for (const auto* r : failed) out << " [" << r->id << "] " << r->name << ';';
    out << '\n';
    return kExitVerifyFailed;
  });
}

}  // namespace cavity
