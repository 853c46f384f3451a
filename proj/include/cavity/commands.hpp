#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "cavity/analysis.hpp"
#include "cavity/config.hpp"
#include "cavity/ensemble.hpp"
#include "cavity/io.hpp"

namespace cavity {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitIo = 2,
  kExitDiverged = 3,
};

/// Runs the configured ensemble. Samples are always retained.
WorkEnsemble simulate_ensemble(const RunConfig& config, bool track_mean_path = false);

/// Recorded paths of the first `count` trajectories of one direction. They
/// use the same noise streams as the ensemble, so their final work equals
/// the ensemble's samples with the same traj_id.
std::vector<TrajectoryRow> export_trajectories(const RunConfig& config, Direction direction,
                                               std::size_t count);

struct AnalysisResult {
  CrooksData crooks;
  ThermoReport report;
};

AnalysisResult analyze_samples(const RunConfig& config, std::span<const WorkSample> samples);

/// Writes work_samples.csv (and trajectories.csv when emitted) to output_dir.
int cmd_simulate(const RunConfig& config, std::ostream& log);

/// Reads config.samples_file() and writes report.json, crooks_points.csv and
/// histogram.csv as selected by `emit`.
int cmd_analyze(const RunConfig& config, std::ostream& log);

/// Runs an ensemble and writes the fig*.csv datasets plus the analysis files.
int cmd_figures(const RunConfig& config, std::ostream& log);

/// Runs the acceptance suite and prints one PASS/FAIL line per criterion.
int cmd_verify(const RunConfig& config, std::ostream& out);

}  // namespace cavity
