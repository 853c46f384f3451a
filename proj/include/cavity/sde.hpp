#pragma once

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cavity/errors.hpp"
#include "cavity/model.hpp"

namespace cavity {

enum class Scheme { euler_maruyama };

struct IntegratorConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::euler_maruyama;
  std::size_t record_stride = 100;
  /// Each step's Wiener increment is the sum of this many N(0, dt/substeps)
  /// draws, so a run at dt with 2 substeps shares its Brownian path with a
  /// run at dt/2.
  unsigned noise_substeps = 1;

  void validate() const;
};

/// Non-empty when dt exceeds the 0.1/gamma stability guard.
std::optional<std::string> stability_warning(const PhysicalParams& params,
                                             const IntegratorConfig& config);

/// Independent streams per protocol direction and for the homodyne current.
enum class NoiseChannel : std::uint64_t { forward = 0, backward = 1, homodyne = 2 };

NoiseChannel channel_for(Direction direction) noexcept;

/// Seedable Gaussian source. The sequence depends only on
/// (master_seed, stream_id, channel), never on scheduling.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t stream_id,
              NoiseChannel channel = NoiseChannel::forward);

  double standard_normal() { return normal_(engine_); }
  /// Wiener increment with variance dt.
  double increment(double dt) { return std::sqrt(dt) * standard_normal(); }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

/// Noise source that switches the stochastic term off.
struct ZeroNoise {
  double standard_normal() noexcept { return 0.0; }
};

struct TrajectoryState {
  double t = 0.0;
  double x = 0.0;       ///< classical estimate X(t)
  double work = 0.0;    ///< accumulated estimated work
  double q_mean = 0.0;  ///< conditional mean <q_J>
  double q_var = 0.0;   ///< conditional variance of q_J
};

struct Trajectory {
  Direction direction = Direction::forward;
  std::vector<TrajectoryState> samples;
  double final_work = 0.0;
};

/// One Euler-Maruyama step of the estimate SDE plus left-point work
/// accumulation. Throws ConfigError when eta = 0.
TrajectoryState step_estimate(const TrajectoryState& state, const PhysicalParams& params,
                              const RampProtocol& protocol, const IntegratorConfig& config,
                              double dW);

/// One step of the conditional moment equations under Gaussian closure.
/// The variance follows its Riccati ODE exactly over the step; the mean uses
/// the exact decay factor with the drive sampled at the step midpoint.
TrajectoryState step_conditional_moments(const TrajectoryState& state,
                                         const PhysicalParams& params,
                                         const RampProtocol& protocol,
                                         const IntegratorConfig& config, double dW);

namespace detail {

struct StepCoefficients {
  double dt = 0.0;
  double drive = 0.0;       // g/omega
  double half_rate = 0.0;   // gamma/2
  double diffusion = 0.0;   // sqrt(gamma hbar L / (2 omega eta))
  double work_scale = 0.0;  // g omega
  double decay = 0.0;       // exp(-gamma dt/2)
  double forcing = 0.0;     // (g/omega)(2/gamma)(1 - decay)
  double var_decay = 0.0;   // exp(-gamma dt)
  double riccati = 0.0;     // (kappa/gamma)(1 - var_decay)
  double kick = 0.0;        // sqrt(kappa), kappa = 2 gamma eta omega / (hbar L)
  double flat_var = 0.0;    // hbar L / (2 omega)

  StepCoefficients(const PhysicalParams& params, double dt);
};

inline void advance_estimate(TrajectoryState& s, const StepCoefficients& c, double lambda,
                             double dW) noexcept {
  s.work += c.work_scale * lambda * s.x * c.dt;
  s.x += (c.drive * lambda - c.half_rate * s.x) * c.dt + c.diffusion * dW;
}

inline void advance_moments(TrajectoryState& s, const StepCoefficients& c, double lambda_mid,
                            double dW) noexcept {
  const double excess = s.q_var - c.flat_var;
  s.q_mean = c.decay * s.q_mean + c.forcing * lambda_mid + c.kick * excess * dW;
  s.q_var = c.flat_var + excess * c.var_decay / (1.0 + c.riccati * excess);
}

}  // namespace detail

/// Integrates the estimate X(t), the work integral and the conditional
/// moments over one protocol. The drive is tabulated once at construction so
/// many trajectories can share an integrator concurrently.
class EstimateIntegrator {
 public:
  EstimateIntegrator(const PhysicalParams& params, const RampProtocol& protocol,
                     const IntegratorConfig& config, double burn_in = 0.0);

  std::size_t steps() const noexcept { return lambda_left_.size(); }
  double dt() const noexcept { return coeffs_.dt; }
  std::size_t record_stride() const noexcept { return stride_; }
  /// Samples at every stride-th step, plus the final step.
  std::size_t n_records() const noexcept;
  std::size_t record_step(std::size_t record) const noexcept;
  double record_time(std::size_t record) const noexcept {
    return static_cast<double>(record_step(record)) * coeffs_.dt;
  }
  const RampProtocol& protocol() const noexcept { return protocol_; }
  const PhysicalParams& params() const noexcept { return params_; }

  /// Runs one path. `record(index, state)` is invoked for each recorded
  /// sample. Throws IntegrationDiverged on a non-finite state.
  template <class Noise, class Recorder>
  TrajectoryState run(Noise& noise, double x0, Recorder&& record) const {
    return run_impl<true>(noise, x0, record);
  }

  template <class Noise>
  TrajectoryState run(Noise& noise, double x0) const {
    return run_impl<true>(noise, x0, [](std::size_t, const TrajectoryState&) {});
  }

  /// As run(), but leaves q_mean/q_var untouched; used for bulk ensembles.
  template <class Noise, class Recorder>
  TrajectoryState run_work_only(Noise& noise, double x0, Recorder&& record) const {
    return run_impl<false>(noise, x0, record);
  }

  template <class Noise>
  TrajectoryState run_work_only(Noise& noise, double x0) const {
    return run_impl<false>(noise, x0, [](std::size_t, const TrajectoryState&) {});
  }

  template <class Noise>
  Trajectory simulate(Noise& noise, double x0) const;

 private:
  template <class Noise>
  double draw_increment(Noise& noise) const;

  template <bool kMoments, class Noise, class Recorder>
  TrajectoryState run_impl(Noise& noise, double x0, Recorder&& record) const;

  PhysicalParams params_;
  RampProtocol protocol_;
  detail::StepCoefficients coeffs_;
  std::size_t stride_;
  unsigned substeps_;
  double sub_sqrt_dt_;
  std::size_t burn_in_steps_;
  std::vector<double> lambda_left_;
  std::vector<double> lambda_mid_;
};

template <class Noise>
double EstimateIntegrator::draw_increment(Noise& noise) const {
  if (substeps_ == 1) return sub_sqrt_dt_ * noise.standard_normal();
  double sum = 0.0;
  for (unsigned j = 0; j < substeps_; ++j) sum += noise.standard_normal();
  return sub_sqrt_dt_ * sum;
}

template <bool kMoments, class Noise, class Recorder>
TrajectoryState EstimateIntegrator::run_impl(Noise& noise, double x0, Recorder&& record) const {
  TrajectoryState s;
  s.x = x0;
  s.q_mean = initial_mean_q(params_, protocol_);
  s.q_var = coeffs_.flat_var;

  const double lambda0 = lambda_left_.empty() ? lambda_at(protocol_, 0.0) : lambda_left_.front();
  for (std::size_t k = 0; k < burn_in_steps_; ++k) {
    const double dW = draw_increment(noise);
    const double work = s.work;
    detail::advance_estimate(s, coeffs_, lambda0, dW);
    if constexpr (kMoments) detail::advance_moments(s, coeffs_, lambda0, dW);
    s.work = work;
    if (!std::isfinite(s.x)) throw IntegrationDiverged(k, 0.0, "during burn-in");
  }

  const std::size_t n = steps();
  std::size_t next_record = 0;
  record(next_record++, s);
  for (std::size_t k = 0; k < n; ++k) {
    const double dW = draw_increment(noise);
    detail::advance_estimate(s, coeffs_, lambda_left_[k], dW);
    if constexpr (kMoments) detail::advance_moments(s, coeffs_, lambda_mid_[k], dW);
    s.t = static_cast<double>(k + 1) * coeffs_.dt;
    // inf - inf is NaN, so one check covers both quantities.
    if (!std::isfinite(s.x + s.work)) {
      throw IntegrationDiverged(k + 1, s.t);
    }
    if ((k + 1) % stride_ == 0 || k + 1 == n) record(next_record++, s);
  }
  return s;
}

template <class Noise>
Trajectory EstimateIntegrator::simulate(Noise& noise, double x0) const {
  Trajectory out;
  out.direction = protocol_.direction;
  out.samples.reserve(n_records());
  const TrajectoryState last =
      run(noise, x0, [&](std::size_t, const TrajectoryState& s) { out.samples.push_back(s); });
  out.final_work = last.work;
  return out;
}

/// Full path on [0, tau] driven by `stream`, starting from x0.
Trajectory simulate_trajectory(const PhysicalParams& params, const RampProtocol& protocol,
                               const IntegratorConfig& config, NoiseStream& stream, double x0);

struct HomodyneCurrent {
  std::vector<double> t;
  std::vector<double> current;
};

/// J(t) = gamma eta sqrt(2 omega / hbar) X(t) + sqrt(gamma eta L) xi(t), with
/// xi realised as dW/dt over the sampling interval of the recorded path.
template <class Noise>
HomodyneCurrent synthesize_homodyne_current(const Trajectory& trajectory,
                                            const PhysicalParams& params, Noise& noise) {
  HomodyneCurrent out;
  const std::size_t n = trajectory.samples.size();
  out.t.reserve(n);
  out.current.reserve(n);
  const double signal = params.gamma * params.eta * std::sqrt(2.0 * params.omega / params.hbar);
  const double white = std::sqrt(params.gamma * params.eta * params.noise_factor());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = trajectory.samples[i];
    double interval = 0.0;
    if (i + 1 < n) {
      interval = trajectory.samples[i + 1].t - s.t;
    } else if (i > 0) {
      interval = s.t - trajectory.samples[i - 1].t;
    }
    const double z = noise.standard_normal();
    const double xi = interval > 0.0 ? z / std::sqrt(interval) : 0.0;
    out.t.push_back(s.t);
    out.current.push_back(signal * s.x + white * xi);
  }
  return out;
}

}  // namespace cavity
