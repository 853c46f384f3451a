#include "cavity/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cavity/errors.hpp"

namespace cavity {

Histogram negated_on_edges(std::span<const double> backward_work, const std::vector<double>& edges) {
  HistogramAccumulator acc(edges);
  for (double w : backward_work) acc.add(-w);
  return acc.finish();
}

std::vector<CrooksPoint> crooks_log_ratio(const Histogram& forward, const Histogram& backward_negated,
                                          std::size_t min_count) {
  if (forward.edges != backward_negated.edges) {
    throw DomainError("crooks_log_ratio: histograms must share their bin edges");
  }
  std::vector<CrooksPoint> points;
  for (std::size_t i = 0; i < forward.n_bins(); ++i) {
    const std::size_t cf = forward.counts[i];
    const std::size_t cb = backward_negated.counts[i];
    if (cf < min_count || cb < min_count || cf == 0 || cb == 0) continue;
    CrooksPoint p;
    p.w = forward.center(i);
    p.log_ratio = std::log(forward.density[i] / backward_negated.density[i]);
    p.weight = 1.0 / (1.0 / static_cast<double>(cf) + 1.0 / static_cast<double>(cb));
    points.push_back(p);
  }
  if (points.size() < 3) {
    throw InsufficientOverlap("only " + std::to_string(points.size()) +
                              " bins have enough counts in both histograms");
  }
  return points;
}

CrooksFit fit_crooks(std::span<const CrooksPoint> points) {
  if (points.size() < 3) throw InsufficientOverlap("fit_crooks needs at least three points");
  double s = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    if (!(p.weight > 0.0)) throw DomainError("fit_crooks: weights must be positive");
    s += p.weight;
    sx += p.weight * p.w;
    sy += p.weight * p.log_ratio;
    sxx += p.weight * p.w * p.w;
    sxy += p.weight * p.w * p.log_ratio;
  }
  const double det = s * sxx - sx * sx;
  if (!(det > 0.0)) throw DomainError("fit_crooks: points share a single abscissa");

  CrooksFit fit;
  fit.slope = (s * sxy - sx * sy) / det;
  fit.intercept = (sxx * sy - sx * sxy) / det;
  fit.slope_stderr = std::sqrt(s / det);
  fit.intercept_stderr = std::sqrt(sxx / det);
  fit.n_bins_used = points.size();

  const double y_mean = sy / s;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& p : points) {
    const double r = p.log_ratio - (fit.slope * p.w + fit.intercept);
    const double d = p.log_ratio - y_mean;
    ss_res += p.weight * r * r;
    ss_tot += p.weight * d * d;
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.degenerate = !(fit.slope > 0.0);
  fit.delta_F_hat = fit.slope != 0.0 ? -fit.intercept / fit.slope
                                     : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DomainError("ks_statistic: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double gaussian_crooks_kl(const GaussianFit& forward, const GaussianFit& backward) {
  const double shift = forward.mean + backward.mean;  // distance to the reflected mean
  return 0.5 * std::log(backward.variance / forward.variance) +
         (forward.variance + shift * shift) / (2.0 * backward.variance) - 0.5;
}

std::pair<double, double> histogram_kl(const Histogram& forward, const Histogram& backward_negated) {
  if (forward.edges != backward_negated.edges) {
    throw DomainError("histogram_kl: histograms must share their bin edges");
  }
  double kl = 0.0;
  double covered = 0.0;
  for (std::size_t i = 0; i < forward.n_bins(); ++i) {
    if (forward.counts[i] == 0 || backward_negated.counts[i] == 0) continue;
    const double mass = forward.density[i] * forward.width(i);
    kl += mass * std::log(forward.density[i] / backward_negated.density[i]);
    covered += mass;
  }
  return {kl, covered};
}

EntropyProduction average_entropy_production(double beta, double delta_F, const Histogram& forward,
                                             const Histogram& backward_negated,
                                             const GaussianFit& forward_fit,
                                             const GaussianFit& backward_fit) {
  EntropyProduction ep;
  ep.analytic = beta * (forward_fit.mean - delta_F);
  const auto [kl, coverage] = histogram_kl(forward, backward_negated);
  ep.kl = kl;
  ep.coverage = coverage;
  ep.full_overlap = coverage > 1.0 - 1e-12;
  ep.kl_gaussian = gaussian_crooks_kl(forward_fit, backward_fit);
  return ep;
}

TurCheck tur_check(double beta, double mean_w, double var_w, double sigma_avg) {
  if (!(mean_w > 0.0)) throw DomainError("tur_check: mean work must be > 0");
  TurCheck out;
  out.margin = sigma_avg - beta * mean_w;
  out.snr_bound = 2.0 * mean_w * mean_w / var_w;
  out.snr_margin = sigma_avg - out.snr_bound;
  return out;
}

FisherInfo fisher_information(double beta, double mean_w, std::optional<double> var_w) {
  if (!(mean_w > 0.0)) throw DomainError("fisher_information: mean work must be > 0");
  FisherInfo out;
  out.value = beta / (2.0 * mean_w) + 1.0 / (mean_w * mean_w);
  out.cramer_rao_bound = var_w ? 1.0 / *var_w : beta / (2.0 * mean_w);
  return out;
}

double gaussian_fisher_information(double beta, double mean_w) {
  if (!(mean_w > 0.0)) throw DomainError("gaussian_fisher_information: mean work must be > 0");
  return beta / (2.0 * mean_w) + 0.5 / (mean_w * mean_w);
}

CrooksData crooks_analysis(const WorkEnsemble& ensemble, std::size_t min_count) {
  const DirectionEnsemble& fwd = ensemble.get(Direction::forward);
  const DirectionEnsemble& bwd = ensemble.get(Direction::backward);
  if (fwd.work.empty() || bwd.work.empty()) {
    throw MissingData("crooks analysis needs retained forward and backward samples");
  }
  CrooksData out;
  out.forward = build_histogram(fwd.work, BinningSpec::automatic());
  out.backward_negated = negated_on_edges(bwd.work, out.forward.edges);
  out.points = crooks_log_ratio(out.forward, out.backward_negated, min_count);
  out.fit = fit_crooks(out.points);
  return out;
}

ThermoReport analyze(const PhysicalParams& params, const RampProtocol& forward_protocol,
                     const WorkEnsemble& ensemble, const CrooksData& crooks) {
  const EnsembleSummary summary = summarize(ensemble);
  if (!summary.forward || !summary.backward) {
    throw MissingData("analysis needs both forward and backward samples");
  }
  const DirectionSummary& f = *summary.forward;
  const DirectionSummary& b = *summary.backward;

  ThermoReport r;
  r.beta_eff_analytic = beta_eff(params);
  r.delta_F_analytic = delta_F(params);
  r.mean_work_analytic = mean_work(params, forward_protocol);
  r.beta_hat = crooks.fit.slope;
  r.beta_hat_stderr = crooks.fit.slope_stderr;
  r.delta_F_hat = crooks.fit.delta_F_hat;
  r.crooks_r_squared = crooks.fit.r_squared;
  r.crooks_bins = crooks.fit.n_bins_used;
  r.crooks_degenerate = crooks.fit.degenerate;

  r.mean_W_F = f.mean;
  r.var_W_F = f.variance;
  r.se_W_F = f.std_error;
  r.mean_W_B = b.mean;
  r.var_W_B = b.variance;
  r.n_forward = f.n;
  r.n_backward = b.n;

  const double beta = r.beta_eff_analytic;
  const EntropyProduction ep = average_entropy_production(
      beta, r.delta_F_analytic, crooks.forward, crooks.backward_negated, {f.mean, f.variance},
      {b.mean, b.variance});
  r.sigma_avg_analytic = ep.analytic;
  r.sigma_avg_kl = ep.kl;
  r.sigma_avg_kl_gaussian = ep.kl_gaussian;
  r.kl_coverage = ep.coverage;

  double exp_sum = 0.0;
  const auto& fwd_work = ensemble.get(Direction::forward).work;
  for (double w : fwd_work) exp_sum += std::exp(-entropy_production_sample(beta, w, r.delta_F_analytic));
  r.exp_neg_sigma_avg = fwd_work.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : exp_sum / static_cast<double>(fwd_work.size());

  const FisherInfo fi = fisher_information(beta, f.mean, f.variance);
  r.fisher_info = fi.value;
  r.cramer_rao_bound = fi.cramer_rao_bound;
  r.fisher_info_gaussian = gaussian_fisher_information(beta, f.mean);

  const TurCheck tur = tur_check(beta, f.mean, f.variance, r.sigma_avg_analytic);
  r.tur_margin = tur.margin;
  r.tur_snr_margin = tur.snr_margin;
  r.info_margin = information_inequality(r.fisher_info, r.sigma_avg_analytic, beta);
  // The Gaussian-fit divergence covers the whole forward support; the
  // histogram one stops where the reversed histogram runs out of counts.
  r.tur_margin_measured = tur_check(beta, f.mean, f.variance, r.sigma_avg_kl_gaussian).margin;
  r.info_margin_measured = information_inequality(r.fisher_info, r.sigma_avg_kl_gaussian, beta);
  return r;
}

}  // namespace cavity
