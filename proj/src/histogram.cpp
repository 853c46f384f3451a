#include "cavity/histogram.hpp"

#include <algorithm>
#include <cmath>

#include "cavity/errors.hpp"

namespace cavity {

namespace {

constexpr std::size_t kMaxBins = 10000;

void check_edges(const std::vector<double>& edges) {
  if (edges.size() < 2) throw DomainError("histogram needs at least two edges");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i + 1] > edges[i])) throw DomainError("histogram edges must be strictly increasing");
  }
}

// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

BinningSpec BinningSpec::uniform(double lo, double hi, std::size_t n_bins) {
  if (!(hi > lo) || n_bins == 0) throw DomainError("uniform binning needs hi > lo and n_bins > 0");
  std::vector<double> edges(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  }
  edges.back() = hi;
  return with_edges(std::move(edges));
}

HistogramAccumulator::HistogramAccumulator(std::vector<double> edges) : edges_(std::move(edges)) {
  check_edges(edges_);
  counts_.assign(edges_.size() - 1, 0);
}

void HistogramAccumulator::add(double x) noexcept {
  ++total_;
  if (!(x >= edges_.front() && x <= edges_.back())) {
    ++outside_;
    return;
  }
  auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  auto bin = static_cast<std::size_t>(it - edges_.begin());
  bin = bin == 0 ? 0 : bin - 1;
  if (bin >= counts_.size()) bin = counts_.size() - 1;  // right edge is inclusive
  ++counts_[bin];
}

Histogram HistogramAccumulator::finish() const {
  Histogram h;
  h.edges = edges_;
  h.counts = counts_;
  h.total = total_;
  h.outside = outside_;
  h.density.resize(counts_.size(), 0.0);
  if (total_ > 0) {
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      h.density[i] = static_cast<double>(counts_[i]) /
                     (static_cast<double>(total_) * (edges_[i + 1] - edges_[i]));
    }
  }
  return h;
}

std::vector<double> auto_edges(std::span<const double> samples, std::size_t min_bins,
                               bool* degenerate) {
  if (samples.empty()) throw DomainError("auto binning needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (degenerate) *degenerate = false;
  if (!(hi > lo)) {
    if (degenerate) *degenerate = true;
    const double half = std::max(0.5, 1e-6 * std::abs(lo));
    return {lo - half, lo + half};
  }
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  std::size_t n_bins = std::max<std::size_t>(min_bins, 1);
  if (iqr > 0.0) {
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
    const auto fd = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    n_bins = std::clamp<std::size_t>(fd, n_bins, kMaxBins);
  }
  return BinningSpec::uniform(lo, hi, n_bins).edges;
}

Histogram build_histogram(std::span<const double> samples, const BinningSpec& spec) {
  if (samples.empty()) throw DomainError("build_histogram: no samples");
  bool degenerate = false;
  std::vector<double> edges =
      spec.edges.empty() ? auto_edges(samples, spec.min_bins, &degenerate) : spec.edges;
  HistogramAccumulator acc(std::move(edges));
  for (double x : samples) acc.add(x);
  Histogram h = acc.finish();
  h.degenerate = degenerate;
  return h;
}

}  // namespace cavity
