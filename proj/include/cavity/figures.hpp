#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cavity/commands.hpp"

namespace cavity {

extern const std::vector<std::string> kWignerColumns;
extern const std::vector<std::string> kCycleColumns;
extern const std::vector<std::string> kFigTrajectoryColumns;
extern const std::vector<std::string> kFigHistColumns;
extern const std::vector<std::string> kWorkPathColumns;
extern const std::vector<std::string> kFigCrooksColumns;
extern const std::vector<std::string> kInequalityColumns;

struct InequalityRow {
  double eta = 0.0;
  double nbar = 0.0;
  double beta_eff = 0.0;
  double delta_F = 0.0;
  double mean_w = 0.0;
  double fisher_info = 0.0;
  double sigma_avg = 0.0;
  double product = 0.0;  ///< fisher_info * sigma_avg
  double bound = 0.0;    ///< beta_eff^2 / 2
};

/// Information-inequality table over a log grid of mean work for several
/// (eta, nbar) pairs, with sigma_avg = beta_eff (W - delta_F).
std::vector<InequalityRow> inequality_grid(const PhysicalParams& base);

/// Writes fig1_wigner.csv, fig1_cycle.csv, fig2_trajectories.csv,
/// fig3_hist.csv, fig3_workpaths.csv, fig4_crooks.csv and fig5_inequality.csv.
/// The ensemble must carry mean paths for both directions.
void write_figure_data(const RunConfig& config, const WorkEnsemble& ensemble,
                       const AnalysisResult& analysis, const std::filesystem::path& dir);

}  // namespace cavity
