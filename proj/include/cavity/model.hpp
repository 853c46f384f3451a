#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace cavity {

/// Physical constants and rates of the driven cavity, its bath and the detector.
/// Natural units (hbar = omega = 1) by default.
struct PhysicalParams {
  double hbar = 1.0;
  double omega = 1.0;   ///< cavity angular frequency
  double g = 1.0;       ///< drive amplitude
  double gamma = 2.0;   ///< bath coupling rate
  double nbar = 1.0;    ///< bath mean photon number
  double eta = 1.0;     ///< detector efficiency in [0, 1]

  /// Noise coefficient L = 2 nbar + 1.
  double noise_factor() const noexcept { return 2.0 * nbar + 1.0; }

  /// Throws ConfigError when any bound is violated.
  void validate() const;
};

enum class RampShape { sigmoid, step, constant };
enum class Direction { forward, backward };

std::string_view to_string(RampShape shape) noexcept;
std::string_view to_string(Direction direction) noexcept;
RampShape parse_ramp_shape(std::string_view text);
Direction parse_direction(std::string_view text);

/// Drive schedule lambda(t) on [0, tau]. The backward protocol replays the
/// forward one in reverse time: lambda_B(t) = lambda(tau - t).
struct RampProtocol {
  RampShape shape = RampShape::sigmoid;
  double sigma = 2.0;  ///< ramp steepness
  double t0 = 5.0;     ///< ramp centre
  double tau = 10.0;   ///< protocol duration
  Direction direction = Direction::forward;

  void validate() const;
  RampProtocol reversed() const;
};

struct ProtocolPair {
  RampProtocol forward;
  RampProtocol backward;
};

ProtocolPair make_protocol_pair(RampShape shape, double sigma, double t0, double tau);

struct EnergyFlows {
  double power = 0.0;   ///< <dW>/dt
  double heat = 0.0;    ///< <dQ>/dt
  double mean_n = 0.0;  ///< cavity mean photon number
};

struct AnalyticSummary {
  double mean_q_final = 0.0;
  double mean_work = 0.0;
  double work_variance = 0.0;
  double delta_F = 0.0;
  double beta_eff = 0.0;
  double q_variance = 0.0;
  double x_variance = 0.0;  ///< stationary estimate variance; +inf when eta = 0
};

/// lambda(t) for the protocol's shape and direction. Throws DomainError
/// outside [0, tau].
double lambda_at(const RampProtocol& protocol, double t);

/// Bose-Einstein occupation 1 / (exp(mu) - 1) for mu = hbar omega / kT.
double nbar_from_temperature(double mu);

/// Steady-state displacement 2g / (omega gamma) reached with the drive fully on.
double steady_state_q(const PhysicalParams& params) noexcept;

/// Mean displacement at t = 0: the origin for the forward protocol, the
/// displaced steady state for the backward one.
double initial_mean_q(const PhysicalParams& params, const RampProtocol& protocol) noexcept;

/// Unconditional mean <q>(t) = q0 e^{-gamma t/2} + (g/omega) int_0^t e^{-gamma(t-s)/2} lambda(s) ds,
/// evaluated by adaptive Gauss-Kronrod quadrature.
double mean_q(const PhysicalParams& params, const RampProtocol& protocol, double t);

/// Average work g omega int_0^tau lambda(t) <q>(t) dt.
double mean_work(const PhysicalParams& params, const RampProtocol& protocol);

/// Free-energy change between drive off and drive on: -2 hbar omega g^2 / gamma^2.
double delta_F(const PhysicalParams& params) noexcept;

/// Effective inverse temperature eta / (hbar omega (nbar + 1/2)). Zero when eta = 0.
double beta_eff(const PhysicalParams& params) noexcept;

/// Conditional quadrature variance hbar L / (2 omega).
double q_variance(const PhysicalParams& params) noexcept;

/// Stationary variance of the estimate X: hbar L / (2 omega eta).
double x_variance(const PhysicalParams& params) noexcept;

EnergyFlows energy_flows(const PhysicalParams& params, double lambda_now, double q_now) noexcept;

/// Gaussian work density with mean <W> and variance hbar omega L <W> / eta.
double work_pdf(const PhysicalParams& params, double mean_work, double w);
double work_cdf(const PhysicalParams& params, double mean_work, double w);

/// Gaussian density of the estimate X around q_mean with variance x_variance().
double estimate_pdf(const PhysicalParams& params, double q_mean, double x);

AnalyticSummary analytic_summary(const PhysicalParams& params, const RampProtocol& protocol);

struct GridSpec {
  double q_min = -4.0;
  double q_max = 5.0;
  std::size_t n_q = 91;
  double p_min = -4.5;
  double p_max = 4.5;
  std::size_t n_p = 91;
};

/// Phase-space density sampled on a regular grid; density is row-major with
/// q as the slow index.
struct WignerGrid {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> density;

  double at(std::size_t iq, std::size_t ip) const { return density[iq * p.size() + ip]; }
  /// Riemann sum of the density over the grid cells.
  double total_mass() const;
};

/// Displaced thermal state: Gaussian centred at (q_mean, 0) with variances
/// hbar L / (2 omega) in q and hbar omega L / 2 in p.
WignerGrid wigner_grid(const PhysicalParams& params, double q_mean, const GridSpec& grid);

}  // namespace cavity
