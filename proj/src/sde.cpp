#include "cavity/sde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cavity {

void IntegratorConfig::validate() const {
  if (!(std::isfinite(dt) && dt > 0.0)) throw ConfigError("dt must be > 0");
  if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
  if (noise_substeps < 1) throw ConfigError("noise_substeps must be >= 1");
}

std::optional<std::string> stability_warning(const PhysicalParams& params,
                                             const IntegratorConfig& config) {
  const double limit = 0.1 / params.gamma;
  if (config.dt <= limit) return std::nullopt;
  std::ostringstream msg;
  msg << "dt=" << config.dt << " exceeds the stability guard 0.1/gamma=" << limit
      << "; results may be inaccurate";
  return msg.str();
}

NoiseChannel channel_for(Direction direction) noexcept {
  return direction == Direction::forward ? NoiseChannel::forward : NoiseChannel::backward;
}

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t stream_id, NoiseChannel channel)
    : master_seed_(master_seed), stream_id_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32),
                    static_cast<std::uint32_t>(channel)};
  engine_.seed(seq);
}

namespace detail {

StepCoefficients::StepCoefficients(const PhysicalParams& params, double step)
    : dt(step),
      drive(params.g / params.omega),
      half_rate(0.5 * params.gamma),
      diffusion(std::sqrt(params.gamma * params.hbar * params.noise_factor() /
                          (2.0 * params.omega * params.eta))),
      work_scale(params.g * params.omega),
      decay(std::exp(-0.5 * params.gamma * step)),
      forcing(params.g / params.omega * (2.0 / params.gamma) * -std::expm1(-0.5 * params.gamma * step)),
      var_decay(std::exp(-params.gamma * step)),
      flat_var(q_variance(params)) {
  const double kappa =
      2.0 * params.gamma * params.eta * params.omega / (params.hbar * params.noise_factor());
  riccati = kappa / params.gamma * -std::expm1(-params.gamma * step);
  kick = std::sqrt(kappa);
}

}  // namespace detail

namespace {

void require_detector(const PhysicalParams& params) {
  if (!(params.eta > 0.0)) {
    throw ConfigError("eta = 0 makes the estimate diffusion coefficient infinite");
  }
}

}  // namespace

TrajectoryState step_estimate(const TrajectoryState& state, const PhysicalParams& params,
                              const RampProtocol& protocol, const IntegratorConfig& config,
                              double dW) {
  require_detector(params);
  if (state.t + config.dt > protocol.tau * (1.0 + 1e-12) + 1e-12) {
    throw DomainError("step_estimate: step would pass the end of the protocol");
  }
  const detail::StepCoefficients c(params, config.dt);
  TrajectoryState next = state;
  detail::advance_estimate(next, c, lambda_at(protocol, state.t), dW);
  next.t = state.t + config.dt;
  return next;
}

TrajectoryState step_conditional_moments(const TrajectoryState& state,
                                         const PhysicalParams& params,
                                         const RampProtocol& protocol,
                                         const IntegratorConfig& config, double dW) {
  if (state.t + config.dt > protocol.tau * (1.0 + 1e-12) + 1e-12) {
    throw DomainError("step_conditional_moments: step would pass the end of the protocol");
  }
  const detail::StepCoefficients c(params, config.dt);
  TrajectoryState next = state;
  detail::advance_moments(next, c, lambda_at(protocol, state.t + 0.5 * config.dt), dW);
  next.t = state.t + config.dt;
  return next;
}

EstimateIntegrator::EstimateIntegrator(const PhysicalParams& params, const RampProtocol& protocol,
                                       const IntegratorConfig& config, double burn_in)
    : params_(params),
      protocol_(protocol),
      coeffs_(params, config.dt),
      stride_(config.record_stride),
      substeps_(config.noise_substeps),
      burn_in_steps_(0) {
  params.validate();
  protocol.validate();
  config.validate();
  require_detector(params);
  if (!(burn_in >= 0.0 && std::isfinite(burn_in))) throw ConfigError("burn_in must be >= 0");

  // The last step is never longer than dt: the grid is refined to fit tau.
  const auto n = static_cast<std::size_t>(std::ceil(protocol.tau / config.dt - 1e-9));
  const double step = protocol.tau / static_cast<double>(std::max<std::size_t>(n, 1));
  coeffs_ = detail::StepCoefficients(params, step);
  sub_sqrt_dt_ = std::sqrt(step / static_cast<double>(substeps_));
  burn_in_steps_ = static_cast<std::size_t>(std::llround(burn_in / step));

  lambda_left_.resize(n);
  lambda_mid_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * step;
    lambda_left_[k] = lambda_at(protocol, t);
    lambda_mid_[k] = lambda_at(protocol, t + 0.5 * step);
  }
}

std::size_t EstimateIntegrator::n_records() const noexcept {
  const std::size_t n = steps();
  return n / stride_ + 1 + (n % stride_ != 0 ? 1 : 0);
}

std::size_t EstimateIntegrator::record_step(std::size_t record) const noexcept {
  return std::min(record * stride_, steps());
}

Trajectory simulate_trajectory(const PhysicalParams& params, const RampProtocol& protocol,
                               const IntegratorConfig& config, NoiseStream& stream, double x0) {
  if (!std::isfinite(x0)) throw DomainError("simulate_trajectory: x0 must be finite");
  const EstimateIntegrator integrator(params, protocol, config);
  return integrator.simulate(stream, x0);
}

}  // namespace cavity
