#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace cavity {

/// Single-pass mean/variance (Welford).
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
    if (x < min_) min_ = x;
    if (x > max_) max_ = x;
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; NaN with fewer than two samples.
  double variance() const noexcept {
    return n_ < 2 ? std::numeric_limits<double>::quiet_NaN() : m2_ / static_cast<double>(n_ - 1);
  }
  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

/// Counts over strictly increasing edges. `density` is normalised by the
/// total number of samples offered (including any that fell outside the
/// edges), so it estimates the underlying density even for partial coverage.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<double> density;
  std::size_t total = 0;
  std::size_t outside = 0;
  /// Auto-binning met all-identical samples and fell back to one bin.
  bool degenerate = false;

  std::size_t n_bins() const noexcept { return counts.size(); }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
};

/// Explicit edges, or automatic Freedman-Diaconis binning (with at least
/// `min_bins` bins) when `edges` is empty.
struct BinningSpec {
  std::vector<double> edges;
  std::size_t min_bins = 40;

  static BinningSpec automatic(std::size_t min_bins = 40) { return {{}, min_bins}; }
  static BinningSpec with_edges(std::vector<double> edges) { return {std::move(edges), 0}; }
  static BinningSpec uniform(double lo, double hi, std::size_t n_bins);
};

/// Streaming counterpart of build_histogram for fixed edges.
class HistogramAccumulator {
 public:
  explicit HistogramAccumulator(std::vector<double> edges);

  void add(double x) noexcept;
  Histogram finish() const;

 private:
  std::vector<double> edges_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
  std::size_t outside_ = 0;
};

/// Throws DomainError for an empty sample set or non-increasing edges.
Histogram build_histogram(std::span<const double> samples, const BinningSpec& spec);

/// Freedman-Diaconis edges spanning [min, max] of the samples.
std::vector<double> auto_edges(std::span<const double> samples, std::size_t min_bins,
                               bool* degenerate = nullptr);

}  // namespace cavity
