#include "cavity/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cavity/errors.hpp"

namespace cavity {

namespace {

constexpr unsigned kQuadDepth = 20;
constexpr double kQuadTol = 1e-12;

template <class F>
double integrate(F&& f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, kQuadDepth,
                                                                        kQuadTol);
}

// Integrate over [a, b], splitting at an interior kink/jump of the drive.
template <class F>
double integrate_split(F&& f, double a, double b, double kink) {
  if (kink > a && kink < b) return integrate(f, a, kink) + integrate(f, kink, b);
  return integrate(f, a, b);
}

// Where the drive changes fastest, in the protocol's own time.
double ramp_centre(const RampProtocol& protocol) {
  return protocol.direction == Direction::forward ? protocol.t0 : protocol.tau - protocol.t0;
}

double forward_lambda(const RampProtocol& protocol, double t) {
  switch (protocol.shape) {
    case RampShape::sigmoid:
      return 1.0 / (std::exp(-protocol.sigma * (t - protocol.t0)) + 1.0);
    case RampShape::step:
      return t >= protocol.t0 ? 1.0 : 0.0;
    case RampShape::constant:
      return 1.0;
  }
  return 0.0;
}

}  // namespace

void PhysicalParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(std::isfinite(hbar) && hbar > 0.0, "hbar must be > 0");
  require(std::isfinite(omega) && omega > 0.0, "omega must be > 0");
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be > 0");
  require(std::isfinite(g) && g >= 0.0, "g must be >= 0");
  require(std::isfinite(nbar) && nbar >= 0.0, "nbar must be >= 0");
  require(std::isfinite(eta) && eta >= 0.0 && eta <= 1.0, "eta must lie in [0, 1]");
}

std::string_view to_string(RampShape shape) noexcept {
  switch (shape) {
    case RampShape::sigmoid: return "sigmoid";
    case RampShape::step: return "step";
    case RampShape::constant: return "constant";
  }
  return "?";
}

std::string_view to_string(Direction direction) noexcept {
  return direction == Direction::forward ? "forward" : "backward";
}

RampShape parse_ramp_shape(std::string_view text) {
  if (text == "sigmoid") return RampShape::sigmoid;
  if (text == "step") return RampShape::step;
  if (text == "constant") return RampShape::constant;
  throw ConfigError("unknown ramp shape '" + std::string(text) + "'");
}

Direction parse_direction(std::string_view text) {
  if (text == "forward") return Direction::forward;
  if (text == "backward") return Direction::backward;
  throw ConfigError("unknown direction '" + std::string(text) + "'");
}

void RampProtocol::validate() const {
  if (!(std::isfinite(tau) && tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(std::isfinite(sigma) && sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (!std::isfinite(t0)) throw ConfigError("t0 must be finite");
}

RampProtocol RampProtocol::reversed() const {
  RampProtocol out = *this;
  out.direction = direction == Direction::forward ? Direction::backward : Direction::forward;
  return out;
}

ProtocolPair make_protocol_pair(RampShape shape, double sigma, double t0, double tau) {
  RampProtocol forward{shape, sigma, t0, tau, Direction::forward};
  forward.validate();
  return {forward, forward.reversed()};
}

double lambda_at(const RampProtocol& protocol, double t) {
  const double slack = 1e-9 * std::max(1.0, protocol.tau);
  if (!(t >= -slack && t <= protocol.tau + slack)) {
    throw DomainError("lambda_at: t=" + std::to_string(t) + " outside [0, " +
                      std::to_string(protocol.tau) + "]");
  }
  t = std::clamp(t, 0.0, protocol.tau);
  const double local = protocol.direction == Direction::forward ? t : protocol.tau - t;
  return forward_lambda(protocol, local);
}

double nbar_from_temperature(double mu) {
  if (!(mu > 0.0)) throw DomainError("nbar_from_temperature: mu must be > 0");
  return 1.0 / std::expm1(mu);
}

double steady_state_q(const PhysicalParams& params) noexcept {
  return 2.0 * params.g / (params.omega * params.gamma);
}

double initial_mean_q(const PhysicalParams& params, const RampProtocol& protocol) noexcept {
  return protocol.direction == Direction::forward ? 0.0 : steady_state_q(params);
}

double mean_q(const PhysicalParams& params, const RampProtocol& protocol, double t) {
  if (!(t >= 0.0 && t <= protocol.tau)) {
    throw DomainError("mean_q: t outside [0, tau]");
  }
  const double half_rate = 0.5 * params.gamma;
  auto kernel = [&](double s) { return std::exp(-half_rate * (t - s)) * lambda_at(protocol, s); };
  const double driven = params.g / params.omega * integrate_split(kernel, 0.0, t, ramp_centre(protocol));
  return initial_mean_q(params, protocol) * std::exp(-half_rate * t) + driven;
}

double mean_work(const PhysicalParams& params, const RampProtocol& protocol) {
  if (params.g == 0.0) return 0.0;
  auto power = [&](double t) { return lambda_at(protocol, t) * mean_q(params, protocol, t); };
  return params.g * params.omega * integrate_split(power, 0.0, protocol.tau, ramp_centre(protocol));
}

double delta_F(const PhysicalParams& params) noexcept {
  return -2.0 * params.hbar * params.omega * params.g * params.g / (params.gamma * params.gamma);
}

double beta_eff(const PhysicalParams& params) noexcept {
  return params.eta / (params.hbar * params.omega * (params.nbar + 0.5));
}

double q_variance(const PhysicalParams& params) noexcept {
  return params.hbar * params.noise_factor() / (2.0 * params.omega);
}

double x_variance(const PhysicalParams& params) noexcept {
  if (params.eta == 0.0) return std::numeric_limits<double>::infinity();
  return q_variance(params) / params.eta;
}

EnergyFlows energy_flows(const PhysicalParams& params, double lambda_now, double q_now) noexcept {
  EnergyFlows flows;
  flows.power = params.g * params.omega * lambda_now * q_now;
  flows.mean_n = params.nbar + params.omega / (2.0 * params.hbar) * q_now * q_now;
  flows.heat = params.hbar * params.omega * params.gamma * (params.nbar - flows.mean_n);
  return flows;
}

namespace {

double work_variance_for(const PhysicalParams& params, double mean_work) {
  if (!(mean_work > 0.0)) throw DomainError("work_pdf: mean work must be > 0");
  if (!(params.eta > 0.0)) throw DomainError("work_pdf: eta must be > 0");
  return params.hbar * params.omega * params.noise_factor() * mean_work / params.eta;
}

double gaussian_pdf(double mean, double variance, double x) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

}  // namespace

double work_pdf(const PhysicalParams& params, double mean_work, double w) {
  return gaussian_pdf(mean_work, work_variance_for(params, mean_work), w);
}

double work_cdf(const PhysicalParams& params, double mean_work, double w) {
  const double variance = work_variance_for(params, mean_work);
  return 0.5 * std::erfc(-(w - mean_work) / std::sqrt(2.0 * variance));
}

double estimate_pdf(const PhysicalParams& params, double q_mean, double x) {
  if (!(params.eta > 0.0)) throw DomainError("estimate_pdf: eta must be > 0");
  return gaussian_pdf(q_mean, x_variance(params), x);
}

AnalyticSummary analytic_summary(const PhysicalParams& params, const RampProtocol& protocol) {
  AnalyticSummary s;
  s.mean_q_final = mean_q(params, protocol, protocol.tau);
  s.mean_work = mean_work(params, protocol);
  s.work_variance = params.eta > 0.0 ? params.hbar * params.omega * params.noise_factor() *
                                           s.mean_work / params.eta
                                     : std::numeric_limits<double>::infinity();
  s.delta_F = delta_F(params);
  s.beta_eff = beta_eff(params);
  s.q_variance = q_variance(params);
  s.x_variance = x_variance(params);
  return s;
}

double WignerGrid::total_mass() const {
  if (q.size() < 2 || p.size() < 2) return 0.0;
  const double cell = (q[1] - q[0]) * (p[1] - p[0]);
  double sum = 0.0;
  for (double d : density) sum += d;
  return sum * cell;
}

WignerGrid wigner_grid(const PhysicalParams& params, double q_mean, const GridSpec& grid) {
  if (!(std::isfinite(grid.q_min) && std::isfinite(grid.q_max) && std::isfinite(grid.p_min) &&
        std::isfinite(grid.p_max)) ||
      grid.q_max <= grid.q_min || grid.p_max <= grid.p_min || grid.n_q < 2 || grid.n_p < 2) {
    throw DomainError("wigner_grid: invalid grid bounds");
  }
  const double var_q = q_variance(params);
  const double var_p = params.hbar * params.omega * params.noise_factor() / 2.0;
  WignerGrid out;
  out.q.resize(grid.n_q);
  out.p.resize(grid.n_p);
  for (std::size_t i = 0; i < grid.n_q; ++i) {
    out.q[i] = grid.q_min + (grid.q_max - grid.q_min) * static_cast<double>(i) /
                                static_cast<double>(grid.n_q - 1);
  }
  for (std::size_t j = 0; j < grid.n_p; ++j) {
    out.p[j] = grid.p_min + (grid.p_max - grid.p_min) * static_cast<double>(j) /
                                static_cast<double>(grid.n_p - 1);
  }
  out.density.resize(grid.n_q * grid.n_p);
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(var_q * var_p));
  for (std::size_t i = 0; i < grid.n_q; ++i) {
    const double dq = out.q[i] - q_mean;
    for (std::size_t j = 0; j < grid.n_p; ++j) {
      const double p = out.p[j];
      out.density[i * grid.n_p + j] =
          norm * std::exp(-0.5 * (dq * dq / var_q + p * p / var_p));
    }
  }
  return out;
}

}  // namespace cavity
