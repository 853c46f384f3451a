#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cavity/ensemble.hpp"
#include "cavity/histogram.hpp"
#include "cavity/model.hpp"

namespace cavity {

struct CrooksPoint {
  double w = 0.0;          ///< bin centre
  double log_ratio = 0.0;  ///< ln[rho_F(W) / rho_B(-W)]
  double weight = 0.0;     ///< inverse variance of the log ratio from bin counts
};

struct CrooksFit {
  double slope = 0.0;            ///< fitted inverse temperature
  double intercept = 0.0;        ///< fitted -beta * delta_F
  double delta_F_hat = 0.0;      ///< -intercept / slope
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double r_squared = 0.0;        ///< weighted coefficient of determination
  std::size_t n_bins_used = 0;
  /// Slope <= 0: raw values are kept but delta_F_hat is not meaningful.
  bool degenerate = false;
};

/// Minimum count per histogram for a bin to enter the log-ratio fit.
inline constexpr std::size_t kMinCrooksCount = 10;

/// Histogram of the negated backward samples on the forward edges, i.e. an
/// estimate of P_B(-W) on the same grid as P_F(W).
Histogram negated_on_edges(std::span<const double> backward_work, const std::vector<double>& edges);

/// Log ratio for every bin with at least `min_count` counts in both
/// histograms. Throws DomainError on mismatched edges and
/// InsufficientOverlap with fewer than three qualifying bins.
std::vector<CrooksPoint> crooks_log_ratio(const Histogram& forward, const Histogram& backward_negated,
                                          std::size_t min_count = kMinCrooksCount);

/// Weighted least squares line through the log-ratio points.
CrooksFit fit_crooks(std::span<const CrooksPoint> points);

/// Kolmogorov-Smirnov distance sup |F_n(w) - cdf(w)|. Throws DomainError for
/// an empty sample.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Sigma = beta (w - delta_F).
inline double entropy_production_sample(double beta, double w, double delta_F) noexcept {
  return beta * (w - delta_F);
}

struct GaussianFit {
  double mean = 0.0;
  double variance = 0.0;
};

/// KL divergence of N(forward) from the reflection of N(backward) about zero.
double gaussian_crooks_kl(const GaussianFit& forward, const GaussianFit& backward);

struct EntropyProduction {
  double analytic = 0.0;  ///< beta_eff (mean_F - delta_F)
  double kl = 0.0;        ///< plug-in relative entropy from the histograms
  double kl_gaussian = 0.0;
  /// Fraction of forward samples in bins where both histograms are populated.
  double coverage = 0.0;
  bool full_overlap = false;
};

/// Histogram relative entropy between P_F(W) and P_B(-W), summed over bins
/// where both are populated, with the matching coverage.
std::pair<double, double> histogram_kl(const Histogram& forward, const Histogram& backward_negated);

EntropyProduction average_entropy_production(double beta, double delta_F, const Histogram& forward,
                                             const Histogram& backward_negated,
                                             const GaussianFit& forward_fit,
                                             const GaussianFit& backward_fit);

struct TurCheck {
  double margin = 0.0;      ///< sigma_avg - beta * mean_w
  double snr_bound = 0.0;   ///< 2 mean_w^2 / var_w
  double snr_margin = 0.0;  ///< sigma_avg - snr_bound
};

TurCheck tur_check(double beta, double mean_w, double var_w, double sigma_avg);

struct FisherInfo {
  double value = 0.0;             ///< beta/(2 W) + 1/W^2
  double cramer_rao_bound = 0.0;  ///< 1 / var_w
};

/// Closed-form Fisher information of the work distribution about its mean.
/// The bound defaults to the analytic variance 2 W / beta. Throws DomainError
/// for mean_w <= 0.
FisherInfo fisher_information(double beta, double mean_w, std::optional<double> var_w = {});

/// Exact Fisher information of N(W, (2/beta) W) with respect to W:
/// beta/(2 W) + 1/(2 W^2). Differs from fisher_information() by 1/(2 W^2).
double gaussian_fisher_information(double beta, double mean_w);

/// fisher * sigma_avg - beta^2 / 2.
inline double information_inequality(double fisher, double sigma_avg, double beta) noexcept {
  return fisher * sigma_avg - 0.5 * beta * beta;
}

/// Everything the analysis stage reports for one parameter set.
struct ThermoReport {
  double beta_eff_analytic = 0.0;
  double beta_hat = 0.0;
  double beta_hat_stderr = 0.0;
  double delta_F_analytic = 0.0;
  double delta_F_hat = 0.0;
  double crooks_r_squared = 0.0;
  std::size_t crooks_bins = 0;
  bool crooks_degenerate = false;

  double mean_work_analytic = 0.0;
  double mean_W_F = 0.0;
  double var_W_F = 0.0;
  double se_W_F = 0.0;
  double mean_W_B = 0.0;
  double var_W_B = 0.0;
  std::size_t n_forward = 0;
  std::size_t n_backward = 0;

  double sigma_avg_analytic = 0.0;
  double sigma_avg_kl = 0.0;
  double sigma_avg_kl_gaussian = 0.0;
  double kl_coverage = 0.0;
  /// <exp(-Sigma)> over forward samples with analytic beta_eff and delta_F;
  /// not exactly 1 for these distributions, diagnostic only.
  double exp_neg_sigma_avg = 0.0;

  double fisher_info = 0.0;
  double fisher_info_gaussian = 0.0;
  double cramer_rao_bound = 0.0;
  double tur_margin = 0.0;
  double tur_snr_margin = 0.0;
  double info_margin = 0.0;
  /// Margins recomputed with the Gaussian-fit divergence in place of the
  /// analytic entropy production.
  double tur_margin_measured = 0.0;
  double info_margin_measured = 0.0;
};

struct CrooksData {
  Histogram forward;
  Histogram backward_negated;
  std::vector<CrooksPoint> points;
  CrooksFit fit;
};

/// Builds the shared-grid histograms and the log-ratio fit from an ensemble
/// holding retained forward and backward samples.
CrooksData crooks_analysis(const WorkEnsemble& ensemble, std::size_t min_count = kMinCrooksCount);

ThermoReport analyze(const PhysicalParams& params, const RampProtocol& forward_protocol,
                     const WorkEnsemble& ensemble, const CrooksData& crooks);

}  // namespace cavity
