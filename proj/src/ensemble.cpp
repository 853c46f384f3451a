#include "cavity/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "cavity/errors.hpp"

namespace cavity {

namespace {

constexpr std::size_t kChunk = 64;

struct ChunkResult {
  std::vector<double> work;
  std::vector<double> sum_x;
  std::vector<double> sum_work;
};

struct Task {
  std::size_t direction_slot;
  std::size_t first;
  std::size_t last;
};

// Folds chunk results into the per-direction accumulators in task order.
struct DirectionSink {
  DirectionEnsemble out;
  std::optional<HistogramAccumulator> streaming;
  std::vector<double> sum_x;
  std::vector<double> sum_work;

  void absorb(const ChunkResult& chunk, bool retain) {
    for (double w : chunk.work) {
      out.stats.add(w);
      if (retain) out.work.push_back(w);
      if (streaming) streaming->add(w);
    }
    for (std::size_t i = 0; i < chunk.sum_x.size(); ++i) {
      sum_x[i] += chunk.sum_x[i];
      sum_work[i] += chunk.sum_work[i];
    }
  }
};

struct Failure {
  std::size_t task = 0;
  std::size_t stream_id = 0;
  Direction direction = Direction::forward;
  std::size_t step = 0;
  double t = 0.0;
  std::string what;
  bool diverged = false;
};

}  // namespace

InitialCondition parse_initial_condition(std::string_view text) {
  if (text == "stationary") return InitialCondition::stationary;
  if (text == "point") return InitialCondition::point;
  throw ConfigError("unknown initial condition '" + std::string(text) + "'");
}

std::string_view to_string(InitialCondition initial) noexcept {
  return initial == InitialCondition::stationary ? "stationary" : "point";
}

void EnsembleConfig::validate() const {
  if (n_traj == 0) throw ConfigError("n_traj must be > 0");
  if (!run_forward && !run_backward) throw ConfigError("at least one direction is required");
  if (!(burn_in >= 0.0 && std::isfinite(burn_in))) throw ConfigError("burn_in must be >= 0");
  if (!retain_samples && histogram_edges.empty()) {
    throw ConfigError("streaming mode needs explicit histogram edges");
  }
}

const DirectionEnsemble& WorkEnsemble::get(Direction direction) const {
  const auto& slot = direction == Direction::forward ? forward : backward;
  if (!slot) throw MissingData("no " + std::string(to_string(direction)) + " samples");
  return *slot;
}

std::vector<WorkSample> WorkEnsemble::samples() const {
  std::vector<WorkSample> out;
  for (const auto* d : {&forward, &backward}) {
    if (!*d) continue;
    for (std::size_t i = 0; i < (*d)->work.size(); ++i) {
      out.push_back({(*d)->direction, i, (*d)->work[i]});
    }
  }
  return out;
}

WorkEnsemble ensemble_from_samples(std::span<const WorkSample> samples) {
  std::vector<std::pair<std::size_t, double>> per_dir[2];
  for (const auto& s : samples) {
    per_dir[s.direction == Direction::forward ? 0 : 1].emplace_back(s.traj_id, s.work);
  }
  WorkEnsemble out;
  for (int slot = 0; slot < 2; ++slot) {
    auto& rows = per_dir[slot];
    if (rows.empty()) continue;
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    DirectionEnsemble d;
    d.direction = slot == 0 ? Direction::forward : Direction::backward;
    d.work.reserve(rows.size());
    for (const auto& [id, w] : rows) {
      d.work.push_back(w);
      d.stats.add(w);
    }
    d.histogram = build_histogram(d.work, BinningSpec::automatic());
    (slot == 0 ? out.forward : out.backward) = std::move(d);
  }
  return out;
}

double draw_initial_x(const PhysicalParams& params, const RampProtocol& protocol,
                      InitialCondition initial, NoiseStream& stream) {
  const double centre = initial_mean_q(params, protocol);
  if (initial == InitialCondition::point) return centre;
  return centre + std::sqrt(x_variance(params)) * stream.standard_normal();
}

WorkEnsemble run_ensemble(const PhysicalParams& params, const ProtocolPair& protocols,
                          const EnsembleConfig& config, const IntegratorConfig& integrator_config) {
  params.validate();
  config.validate();
  integrator_config.validate();

  std::vector<Direction> directions;
  if (config.run_forward) directions.push_back(Direction::forward);
  if (config.run_backward) directions.push_back(Direction::backward);

  std::vector<EstimateIntegrator> integrators;
  std::vector<DirectionSink> sinks(directions.size());
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const RampProtocol& protocol =
        directions[d] == Direction::forward ? protocols.forward : protocols.backward;
    integrators.emplace_back(params, protocol, integrator_config, config.burn_in);
    sinks[d].out.direction = directions[d];
    if (config.retain_samples) sinks[d].out.work.reserve(config.n_traj);
    if (!config.histogram_edges.empty()) sinks[d].streaming.emplace(config.histogram_edges);
    if (config.track_mean_path) {
      sinks[d].sum_x.assign(integrators[d].n_records(), 0.0);
      sinks[d].sum_work.assign(integrators[d].n_records(), 0.0);
    }
  }

  std::vector<Task> tasks;
  for (std::size_t d = 0; d < directions.size(); ++d) {
    for (std::size_t first = 0; first < config.n_traj; first += kChunk) {
      tasks.push_back({d, first, std::min(first + kChunk, config.n_traj)});
    }
  }

  auto run_task = [&](const Task& task) {
    const EstimateIntegrator& integrator = integrators[task.direction_slot];
    const Direction direction = directions[task.direction_slot];
    ChunkResult result;
    result.work.reserve(task.last - task.first);
    if (config.track_mean_path) {
      result.sum_x.assign(integrator.n_records(), 0.0);
      result.sum_work.assign(integrator.n_records(), 0.0);
    }
    for (std::size_t id = task.first; id < task.last; ++id) {
      NoiseStream stream(config.master_seed, id, channel_for(direction));
      const double x0 = draw_initial_x(params, integrator.protocol(), config.initial, stream);
      TrajectoryState last;
      try {
        if (config.track_mean_path) {
          last = integrator.run_work_only(stream, x0, [&](std::size_t i, const TrajectoryState& s) {
            result.sum_x[i] += s.x;
            result.sum_work[i] += s.work;
          });
        } else {
          last = integrator.run_work_only(stream, x0);
        }
      } catch (const IntegrationDiverged& e) {
        throw Failure{0, id, direction, e.step(), e.time(), e.what(), true};
      }
      result.work.push_back(last.work);
    }
    return result;
  };

  std::mutex mutex;
  std::map<std::size_t, ChunkResult> pending;
  std::size_t next_merge = 0;
  auto deliver = [&](std::size_t index, ChunkResult result) {
    std::lock_guard lock(mutex);
    pending.emplace(index, std::move(result));
    for (auto it = pending.find(next_merge); it != pending.end(); it = pending.find(next_merge)) {
      sinks[tasks[next_merge].direction_slot].absorb(it->second, config.retain_samples);
      pending.erase(it);
      ++next_merge;
    }
  };

  std::atomic<std::size_t> next_task{0};
  std::atomic<bool> stop{false};
  std::optional<Failure> failure;
  auto worker = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t index = next_task.fetch_add(1);
      if (index >= tasks.size()) return;
      try {
        deliver(index, run_task(tasks[index]));
      } catch (Failure f) {
        f.task = index;
        std::lock_guard lock(mutex);
        if (!failure || f.task < failure->task) failure = std::move(f);
        stop = true;
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        if (!failure || index < failure->task) failure = Failure{index, 0, directions[tasks[index].direction_slot], 0, 0.0, e.what(), false};
        stop = true;
      }
    }
  };

  unsigned n_workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                           : config.workers;
  n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, tasks.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  if (failure) {
    const std::string where = "(" + std::string(to_string(failure->direction)) + ", stream " +
                              std::to_string(failure->stream_id) + ")";
    if (failure->diverged) throw IntegrationDiverged(failure->step, failure->t, where);
    throw std::runtime_error(failure->what + " " + where);
  }

  WorkEnsemble out;
  for (std::size_t d = 0; d < directions.size(); ++d) {
    DirectionSink& sink = sinks[d];
    if (sink.streaming) {
      sink.out.histogram = sink.streaming->finish();
    } else {
      sink.out.histogram = build_histogram(sink.out.work, BinningSpec::automatic());
    }
    if (config.track_mean_path) {
      const EstimateIntegrator& integrator = integrators[d];
      const double n = static_cast<double>(config.n_traj);
      MeanPath& path = sink.out.mean_path;
      for (std::size_t i = 0; i < integrator.n_records(); ++i) {
        const double t = integrator.record_time(i);
        path.t.push_back(t);
        path.lambda.push_back(lambda_at(integrator.protocol(), t));
        path.x.push_back(sink.sum_x[i] / n);
        path.work.push_back(sink.sum_work[i] / n);
      }
    }
    (directions[d] == Direction::forward ? out.forward : out.backward) = std::move(sink.out);
  }
  return out;
}

DirectionSummary summarize(const DirectionEnsemble& direction) {
  const RunningStats& s = direction.stats;
  if (s.count() < 2) {
    throw MissingData("need at least two " + std::string(to_string(direction.direction)) +
                      " samples");
  }
  DirectionSummary out;
  out.n = s.count();
  out.mean = s.mean();
  out.variance = s.variance();
  out.std_error = std::sqrt(out.variance / static_cast<double>(out.n));
  return out;
}

EnsembleSummary summarize(const WorkEnsemble& ensemble) {
  if (!ensemble.forward && !ensemble.backward) throw MissingData("ensemble is empty");
  EnsembleSummary out;
  if (ensemble.forward) out.forward = summarize(*ensemble.forward);
  if (ensemble.backward) out.backward = summarize(*ensemble.backward);
  return out;
}

}  // namespace cavity
