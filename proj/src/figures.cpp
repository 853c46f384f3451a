#include "cavity/figures.hpp"

#include <cmath>

#include "cavity/errors.hpp"

namespace cavity {

const std::vector<std::string> kWignerColumns{"state", "q", "p", "density"};
const std::vector<std::string> kCycleColumns{"direction",  "t",    "lambda",         "x_mean",
                                             "power",      "heat", "power_analytic", "heat_analytic"};
const std::vector<std::string> kFigTrajectoryColumns{"traj_id", "direction", "t",     "lambda",
                                                     "x",       "x_mean",    "q_mean_analytic"};
const std::vector<std::string> kFigHistColumns{"direction", "bin_lo",  "bin_hi",
                                               "count",     "density", "density_analytic"};
const std::vector<std::string> kWorkPathColumns{"traj_id", "direction", "t", "work", "work_mean"};
const std::vector<std::string> kFigCrooksColumns{"W", "log_ratio", "weight", "fit", "analytic"};
const std::vector<std::string> kInequalityColumns{"eta",    "nbar",        "beta_eff",
                                                  "delta_F", "mean_W",     "fisher_info",
                                                  "sigma_avg", "product",  "bound"};

std::vector<InequalityRow> inequality_grid(const PhysicalParams& base) {
  constexpr std::size_t kPoints = 60;
  const double log_lo = std::log(0.1);
  const double log_hi = std::log(100.0);
  std::vector<InequalityRow> rows;
  for (double eta : {0.25, 0.5, 1.0}) {
    for (double nbar : {0.0, 1.0, 2.0}) {
      PhysicalParams p = base;
      p.eta = eta;
      p.nbar = nbar;
      const double beta = beta_eff(p);
      const double df = delta_F(p);
      for (std::size_t i = 0; i < kPoints; ++i) {
        const double w = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) /
                                               static_cast<double>(kPoints - 1));
        InequalityRow row;
        row.eta = eta;
        row.nbar = nbar;
        row.beta_eff = beta;
        row.delta_F = df;
        row.mean_w = w;
        row.fisher_info = fisher_information(beta, w).value;
        row.sigma_avg = beta * (w - df);
        row.product = row.fisher_info * row.sigma_avg;
        row.bound = 0.5 * beta * beta;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

namespace {

void write_wigner(const RunConfig& config, const std::filesystem::path& path) {
  CsvWriter csv(path, {"state", "q", "p", "density"});
  const auto emit = [&](std::string_view label, double centre) {
    const WignerGrid grid = wigner_grid(config.params, centre, GridSpec{});
    for (std::size_t iq = 0; iq < grid.q.size(); ++iq) {
      for (std::size_t ip = 0; ip < grid.p.size(); ++ip) {
        csv.cell(label).cell(grid.q[iq]).cell(grid.p[ip]).cell(grid.at(iq, ip));
        csv.end_row();
      }
    }
  };
  emit("initial", initial_mean_q(config.params, config.protocols().forward));
  emit("final", steady_state_q(config.params));
  csv.close();
}

void write_cycle(const RunConfig& config, const WorkEnsemble& ensemble,
                 const std::filesystem::path& path) {
  const ProtocolPair protocols = config.protocols();
  CsvWriter csv(path, {"direction", "t", "lambda", "x_mean", "power", "heat", "power_analytic",
                       "heat_analytic"});
  for (Direction d : {Direction::forward, Direction::backward}) {
    if (!ensemble.has(d)) continue;
    const MeanPath& mp = ensemble.get(d).mean_path;
    if (mp.t.empty()) throw MissingData("fig1_cycle needs ensemble mean paths");
    const RampProtocol& protocol = d == Direction::forward ? protocols.forward : protocols.backward;
    for (std::size_t i = 0; i < mp.t.size(); ++i) {
      const EnergyFlows mc = energy_flows(config.params, mp.lambda[i], mp.x[i]);
      const EnergyFlows an =
          energy_flows(config.params, mp.lambda[i], mean_q(config.params, protocol, mp.t[i]));
      csv.cell(to_string(d)).cell(mp.t[i]).cell(mp.lambda[i]).cell(mp.x[i]);
      csv.cell(mc.power).cell(mc.heat).cell(an.power).cell(an.heat);
      csv.end_row();
    }
  }
  csv.close();
}

void write_paths(const RunConfig& config, const WorkEnsemble& ensemble,
                 const std::filesystem::path& traj_path, const std::filesystem::path& work_path) {
  const ProtocolPair protocols = config.protocols();
  CsvWriter traj(traj_path, {"traj_id", "direction", "t", "lambda", "x", "x_mean", "q_mean_analytic"});
  CsvWriter work(work_path, {"traj_id", "direction", "t", "work", "work_mean"});
  for (Direction d : {Direction::forward, Direction::backward}) {
    if (!ensemble.has(d)) continue;
    const MeanPath& mp = ensemble.get(d).mean_path;
    const RampProtocol& protocol = d == Direction::forward ? protocols.forward : protocols.backward;
    std::vector<double> q_analytic;
    q_analytic.reserve(mp.t.size());
    for (double t : mp.t) q_analytic.push_back(mean_q(config.params, protocol, t));

    const auto rows = export_trajectories(config, d, config.export_trajectories);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = r % mp.t.size();
      const TrajectoryRow& row = rows[r];
      traj.cell(row.traj_id).cell(to_string(d)).cell(row.t).cell(row.lambda).cell(row.x);
      traj.cell(mp.x[i]).cell(q_analytic[i]);
      traj.end_row();
      work.cell(row.traj_id).cell(to_string(d)).cell(row.t).cell(row.work).cell(mp.work[i]);
      work.end_row();
    }
  }
  traj.close();
  work.close();
}

void write_hist(const RunConfig& config, const AnalysisResult& analysis,
                const std::filesystem::path& path) {
  const ProtocolPair protocols = config.protocols();
  const double mean_f = mean_work(config.params, protocols.forward);
  const double mean_b = mean_work(config.params, protocols.backward);
  CsvWriter csv(path, {"direction", "bin_lo", "bin_hi", "count", "density", "density_analytic"});
  const auto emit = [&](std::string_view label, const Histogram& h, double mean, double sign) {
    for (std::size_t i = 0; i < h.n_bins(); ++i) {
      csv.cell(label).cell(h.edges[i]).cell(h.edges[i + 1]).cell(h.counts[i]).cell(h.density[i]);
      csv.cell(work_pdf(config.params, mean, sign * h.center(i)));
      csv.end_row();
    }
  };
  emit("forward", analysis.crooks.forward, mean_f, 1.0);
  emit("backward_negated", analysis.crooks.backward_negated, mean_b, -1.0);
  csv.close();
}

void write_crooks_figure(const AnalysisResult& analysis, const std::filesystem::path& path) {
  const CrooksFit& fit = analysis.crooks.fit;
  const ThermoReport& r = analysis.report;
  CsvWriter csv(path, {"W", "log_ratio", "weight", "fit", "analytic"});
  for (const auto& p : analysis.crooks.points) {
    csv.cell(p.w).cell(p.log_ratio).cell(p.weight);
    csv.cell(fit.slope * p.w + fit.intercept);
    csv.cell(entropy_production_sample(r.beta_eff_analytic, p.w, r.delta_F_analytic));
    csv.end_row();
  }
  csv.close();
}

void write_inequality(const RunConfig& config, const std::filesystem::path& path) {
  CsvWriter csv(path, {"eta", "nbar", "beta_eff", "delta_F", "mean_W", "fisher_info", "sigma_avg",
                       "product", "bound"});
  for (const auto& row : inequality_grid(config.params)) {
    csv.cell(row.eta).cell(row.nbar).cell(row.beta_eff).cell(row.delta_F).cell(row.mean_w);
    csv.cell(row.fisher_info).cell(row.sigma_avg).cell(row.product).cell(row.bound);
    csv.end_row();
  }
  csv.close();
}

}  // namespace

void write_figure_data(const RunConfig& config, const WorkEnsemble& ensemble,
                       const AnalysisResult& analysis, const std::filesystem::path& dir) {
  write_wigner(config, dir / "fig1_wigner.csv");
  write_cycle(config, ensemble, dir / "fig1_cycle.csv");
  write_paths(config, ensemble, dir / "fig2_trajectories.csv", dir / "fig3_workpaths.csv");
  write_hist(config, analysis, dir / "fig3_hist.csv");
  write_crooks_figure(analysis, dir / "fig4_crooks.csv");
  write_inequality(config, dir / "fig5_inequality.csv");
}

}  // namespace cavity
