#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cavity/errors.hpp"
#include "cavity/histogram.hpp"
#include "cavity/sde.hpp"

using namespace cavity;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ProtocolPair default_protocols() { return make_protocol_pair(RampShape::sigmoid, 2.0, 5.0, 10.0); }

}  // namespace

TEST_CASE("single estimate step follows the Euler-Maruyama update", "[sde]") {
  const PhysicalParams p;
  const RampProtocol forward = default_protocols().forward;
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  TrajectoryState s;
  s.t = 5.0;
  s.x = 0.3;
  s.work = 1.0;
  const double dW = 0.05;
  const TrajectoryState next = step_estimate(s, p, forward, cfg, dW);
  const double lam = lambda_at(forward, 5.0);
  CHECK_THAT(next.x, WithinAbs(0.3 + (lam - 0.3) * 0.01 + std::sqrt(3.0) * dW, 1e-15));
  CHECK_THAT(next.work, WithinAbs(1.0 + lam * 0.3 * 0.01, 1e-15));
  CHECK_THAT(next.t, WithinAbs(5.01, 1e-15));

  PhysicalParams blind = p;
  blind.eta = 0.0;
  CHECK_THROWS_AS(step_estimate(s, blind, forward, cfg, dW), ConfigError);
  s.t = 9.995;
  CHECK_THROWS_AS(step_estimate(s, p, forward, cfg, dW), DomainError);
}

TEST_CASE("conditional variance stays exactly flat along a noisy path", "[sde]") {
  const PhysicalParams p;
  IntegratorConfig cfg;
  cfg.record_stride = 1;
  const EstimateIntegrator integrator(p, default_protocols().forward, cfg);
  NoiseStream noise(7, 3);
  double worst = 0.0;
  integrator.run(noise, 0.4, [&](std::size_t, const TrajectoryState& s) {
    worst = std::max(worst, std::abs(s.q_var - 1.5));
  });
  CHECK(worst < 1e-12);
}

TEST_CASE("Riccati step matches a dense Runge-Kutta solution", "[sde]") {
  PhysicalParams p;
  p.eta = 0.7;
  p.nbar = 0.4;
  const double flat = q_variance(p);
  const double kappa = 2.0 * p.gamma * p.eta * p.omega / (p.hbar * p.noise_factor());
  const RampProtocol forward = default_protocols().forward;
  IntegratorConfig cfg;
  cfg.dt = 0.05;

  TrajectoryState s;
  s.q_var = 3.0 * flat;
  // Oracle: d(delta)/dt = -gamma delta - kappa delta^2 for the excess over the flat value.
  double delta = s.q_var - flat;
  const std::size_t sub = 2000;
  const double h = cfg.dt / sub;
  const auto f = [&](double d) { return -p.gamma * d - kappa * d * d; };
  for (int step = 0; step < 40; ++step) {
    s = step_conditional_moments(s, p, forward, cfg, 0.0);
    for (std::size_t i = 0; i < sub; ++i) {
      const double k1 = f(delta), k2 = f(delta + h / 2 * k1), k3 = f(delta + h / 2 * k2),
                   k4 = f(delta + h * k3);
      delta += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    REQUIRE_THAT(s.q_var - flat, WithinAbs(delta, 1e-12));
  }
}

TEST_CASE("conditional mean is independent of the noise", "[sde]") {
  const PhysicalParams p;
  IntegratorConfig cfg;
  cfg.record_stride = 50;
  for (const auto& protocol : {default_protocols().forward, default_protocols().backward}) {
    const EstimateIntegrator integrator(p, protocol, cfg);
    NoiseStream noise(11, 0, channel_for(protocol.direction));
    double worst = 0.0;
    integrator.run(noise, 0.0, [&](std::size_t, const TrajectoryState& s) {
      worst = std::max(worst, std::abs(s.q_mean - mean_q(p, protocol, s.t)));
    });
    CHECK(worst < 1e-7);
  }
}

TEST_CASE("noise streams are reproducible and independent", "[sde]") {
  NoiseStream a(42, 5, NoiseChannel::forward);
  NoiseStream b(42, 5, NoiseChannel::forward);
  NoiseStream c(42, 5, NoiseChannel::backward);
  NoiseStream d(42, 6, NoiseChannel::forward);
  int same_c = 0, same_d = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = a.standard_normal();
    REQUIRE(x == b.standard_normal());
    same_c += x == c.standard_normal();
    same_d += x == d.standard_normal();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);

  NoiseStream e(1, 0);
  RunningStats stats;
  for (int i = 0; i < 200000; ++i) stats.add(e.increment(0.01));
  CHECK_THAT(stats.mean(), WithinAbs(0.0, 5 * 0.1 / std::sqrt(200000.0)));
  CHECK_THAT(stats.variance(), WithinRel(0.01, 0.02));
}

TEST_CASE("stationary estimate variance and autocovariance", "[sde]") {
  const PhysicalParams p;
  const RampProtocol flat{RampShape::constant, 1.0, 2.0, 4.0, Direction::forward};
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.record_stride = 500;  // 0.5 = 1/gamma between records
  const EstimateIntegrator integrator(p, flat, cfg, 2.0);
  const std::size_t n = 4000;
  RunningStats first, second;
  double cross = 0.0;
  std::vector<double> rec(integrator.n_records());
  for (std::size_t id = 0; id < n; ++id) {
    NoiseStream noise(3, id);
    integrator.run_work_only(noise, 1.0, [&](std::size_t i, const TrajectoryState& s) { rec[i] = s.x; });
    first.add(rec[4]);
    second.add(rec[5]);
    cross += (rec[4] - 1.0) * (rec[5] - 1.0);
  }
  CHECK_THAT(first.mean(), WithinAbs(1.0, 0.07));
  CHECK_THAT(first.variance(), WithinRel(1.5, 0.05));
  const double autocov = cross / static_cast<double>(n);
  CHECK_THAT(autocov, WithinRel(1.5 * std::exp(-0.5), 0.10));
}

TEST_CASE("deterministic recursion converges with weak order one", "[sde]") {
  const PhysicalParams p;
  const RampProtocol forward = default_protocols().forward;
  const double exact = mean_work(p, forward);
  std::vector<double> err;
  for (double dt : {0.02, 0.01, 0.005}) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    const EstimateIntegrator integrator(p, forward, cfg);
    ZeroNoise silent;
    err.push_back(std::abs(integrator.run_work_only(silent, 0.0).work - exact));
  }
  CHECK_THAT(err[0] / err[1], WithinAbs(2.0, 0.1));
  CHECK_THAT(err[1] / err[2], WithinAbs(2.0, 0.1));
}

TEST_CASE("step is refined so the path ends exactly at tau", "[sde]") {
  const PhysicalParams p;
  const RampProtocol protocol{RampShape::sigmoid, 2.0, 1.5, 3.0, Direction::forward};
  IntegratorConfig cfg;
  cfg.dt = 0.0007;
  cfg.record_stride = 1000;
  const EstimateIntegrator integrator(p, protocol, cfg);
  CHECK(integrator.steps() == 4286);
  CHECK(integrator.dt() <= cfg.dt);
  CHECK_THAT(integrator.record_time(integrator.n_records() - 1), WithinAbs(3.0, 1e-12));
  CHECK(integrator.n_records() == 6);  // 0, 1000, ..., 4000, 4286
}

TEST_CASE("simulate_trajectory records the final work", "[sde]") {
  const PhysicalParams p;
  IntegratorConfig cfg;
  NoiseStream noise(42, 0);
  const Trajectory traj = simulate_trajectory(p, default_protocols().forward, cfg, noise, 0.0);
  CHECK(traj.samples.size() == 101);
  CHECK(traj.samples.front().t == 0.0);
  CHECK_THAT(traj.samples.back().t, WithinAbs(10.0, 1e-12));
  CHECK(traj.final_work == traj.samples.back().work);
}

TEST_CASE("noise substeps share the Brownian path with a finer step", "[sde]") {
  const PhysicalParams p;
  const RampProtocol forward = default_protocols().forward;
  IntegratorConfig coarse;
  coarse.dt = 0.01;
  coarse.noise_substeps = 2;
  IntegratorConfig fine;
  fine.dt = 0.005;
  const EstimateIntegrator a(p, forward, coarse), b(p, forward, fine);
  double sum_diff = 0.0;
  for (std::uint64_t id = 0; id < 50; ++id) {
    NoiseStream na(1, id), nb(1, id);
    sum_diff += std::abs(a.run_work_only(na, 0.0).work - b.run_work_only(nb, 0.0).work);
  }
  // Same path: differences are discretisation-sized, far below the work spread.
  CHECK(sum_diff / 50.0 < 0.1);
}

TEST_CASE("divergent integration reports its step", "[sde]") {
  PhysicalParams p;
  p.gamma = 100.0;
  const RampProtocol protocol{RampShape::constant, 1.0, 500.0, 1000.0, Direction::forward};
  IntegratorConfig cfg;
  cfg.dt = 1.0;
  REQUIRE(stability_warning(p, cfg).has_value());
  const EstimateIntegrator integrator(p, protocol, cfg);
  NoiseStream noise(1, 0);
  try {
    integrator.run_work_only(noise, 0.0);
    FAIL("expected divergence");
  } catch (const IntegrationDiverged& e) {
    CHECK(e.step() > 0);
    CHECK(e.step() < 1000);
  }
}

TEST_CASE("stability guard", "[sde]") {
  const PhysicalParams p;
  IntegratorConfig cfg;
  CHECK_FALSE(stability_warning(p, cfg).has_value());
  cfg.dt = 0.5;
  CHECK(stability_warning(p, cfg).has_value());
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("homodyne current scales the estimate", "[sde]") {
  const PhysicalParams p;
  Trajectory traj;
  for (int i = 0; i < 3; ++i) traj.samples.push_back({0.1 * i, 1.0, 0.0, 0.0, 1.5});
  ZeroNoise silent;
  const HomodyneCurrent j = synthesize_homodyne_current(traj, p, silent);
  REQUIRE(j.current.size() == 3);
  for (double v : j.current) CHECK_THAT(v, WithinAbs(2.0 * std::sqrt(2.0), 1e-14));

  PhysicalParams blind = p;
  blind.eta = 0.0;
  NoiseStream noise(1, 0, NoiseChannel::homodyne);
  for (double v : synthesize_homodyne_current(traj, blind, noise).current) CHECK(v == 0.0);
}
