#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cavity/histogram.hpp"
#include "cavity/model.hpp"
#include "cavity/sde.hpp"

namespace cavity {

/// How X(0) is chosen: drawn from the stationary estimate distribution around
/// the protocol's initial mean, or pinned to that mean.
enum class InitialCondition { stationary, point };

InitialCondition parse_initial_condition(std::string_view text);
std::string_view to_string(InitialCondition initial) noexcept;

struct EnsembleConfig {
  std::size_t n_traj = 20000;
  std::uint64_t master_seed = 42;
  bool run_forward = true;
  bool run_backward = true;
  double burn_in = 0.0;
  unsigned workers = 0;  ///< 0 picks the hardware concurrency
  InitialCondition initial = InitialCondition::stationary;
  /// Keep every work sample. When false only streaming statistics survive
  /// and `histogram_edges` must be supplied.
  bool retain_samples = true;
  std::vector<double> histogram_edges;
  /// Accumulate the ensemble-mean X(t) and W(t) at the recorded times.
  bool track_mean_path = false;

  void validate() const;
};

struct MeanPath {
  std::vector<double> t;
  std::vector<double> lambda;
  std::vector<double> x;
  std::vector<double> work;
};

struct DirectionEnsemble {
  Direction direction = Direction::forward;
  std::vector<double> work;  ///< indexed by stream_id; empty when not retained
  RunningStats stats;
  Histogram histogram;
  MeanPath mean_path;
};

struct WorkSample {
  Direction direction;
  std::size_t traj_id;
  double work;
};

/// Final work samples per protocol direction. Backward samples are stored as
/// measured; negation for the fluctuation theorem happens in analysis.
struct WorkEnsemble {
  std::optional<DirectionEnsemble> forward;
  std::optional<DirectionEnsemble> backward;

  /// Throws MissingData when the direction was not run.
  const DirectionEnsemble& get(Direction direction) const;
  bool has(Direction direction) const noexcept {
    return direction == Direction::forward ? forward.has_value() : backward.has_value();
  }
  /// All retained samples, forward first, each direction ordered by traj_id.
  std::vector<WorkSample> samples() const;
};

/// Rebuilds an ensemble (statistics and auto-binned histograms) from samples,
/// e.g. after reading them back from disk.
WorkEnsemble ensemble_from_samples(std::span<const WorkSample> samples);

/// X(0) for one trajectory; consumes one normal draw in stationary mode.
double draw_initial_x(const PhysicalParams& params, const RampProtocol& protocol,
                      InitialCondition initial, NoiseStream& stream);

/// Integrates n_traj trajectories per requested direction. Stream ids run
/// 0..n_traj-1 in each direction; results are bit-identical for any worker
/// count. A diverging trajectory aborts the run with its direction and id.
WorkEnsemble run_ensemble(const PhysicalParams& params, const ProtocolPair& protocols,
                          const EnsembleConfig& config, const IntegratorConfig& integrator);

struct DirectionSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
};

struct EnsembleSummary {
  std::optional<DirectionSummary> forward;
  std::optional<DirectionSummary> backward;
};

/// Unbiased mean/variance and standard error of the mean. Throws MissingData
/// when a direction has fewer than two samples.
DirectionSummary summarize(const DirectionEnsemble& direction);
EnsembleSummary summarize(const WorkEnsemble& ensemble);

}  // namespace cavity
