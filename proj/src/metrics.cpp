#include "dagalpha/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dagalpha/error.hpp"

namespace dagalpha {

namespace {

void require_same_shape(MatrixView a, MatrixView b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ArgumentError("matrix shapes differ: " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

}  // namespace

std::size_t DailySeries::valid_days() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double v) { return !std::isnan(v); }));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || n != y.size()) return kNaN;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return kNaN;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

DailySeries daily_cs_corr(MatrixView factor, MatrixView returns, CorrMethod method,
                          const MetricOptions& options) {
  require_same_shape(factor, returns);
  DailySeries out;
  out.values.assign(factor.rows(), kNaN);
  std::vector<double> fx, ry;
  for (std::size_t t = 0; t < factor.rows(); ++t) {
    fx.clear();
    ry.clear();
    for (std::size_t a = 0; a < factor.cols(); ++a) {
      const double f = factor(t, a);
      const double r = returns(t, a);
      if (std::isnan(f) || std::isnan(r)) continue;
      fx.push_back(f);
      ry.push_back(r);
    }
    if (fx.size() < std::max<std::size_t>(options.min_assets, 2)) continue;
    if (method == CorrMethod::spearman) {
      out.values[t] = pearson(average_ranks(fx), average_ranks(ry));
    } else {
      out.values[t] = pearson(fx, ry);
    }
  }
  return out;
}

SeriesStats series_stats(std::span<const double> daily, int ddof) {
  SeriesStats s;
  double sum = 0.0;
  for (double v : daily) {
    if (std::isnan(v)) continue;
    sum += v;
    ++s.count;
  }
  if (s.count == 0) return s;
  const double n = static_cast<double>(s.count);
  s.mean = sum / n;
  if (s.count < 2 || n - ddof <= 0.0) return s;
  double ss = 0.0;
  for (double v : daily) {
    if (std::isnan(v)) continue;
    ss += (v - s.mean) * (v - s.mean);
  }
  const double sd = std::sqrt(ss / (n - ddof));
  // A constant series can leave rounding residue in the deviations; treat a
  // spread that small as zero rather than reporting an astronomical ratio.
  if (sd > kStdFloor * std::fabs(s.mean)) s.ir = s.mean / sd;
  return s;
}

MetricReport ic_suite(MatrixView factor, MatrixView returns, const MetricOptions& options) {
  MetricReport r;
  r.daily_pearson = daily_cs_corr(factor, returns, CorrMethod::pearson, options).values;
  r.daily_spearman = daily_cs_corr(factor, returns, CorrMethod::spearman, options).values;
  const auto p = series_stats(r.daily_pearson, options.ddof);
  const auto s = series_stats(r.daily_spearman, options.ddof);
  if (p.count == 0) throw ArgumentError("metric report is empty: no valid day");
  r.valid_days = p.count;
  r.ic = std::fabs(p.mean);
  r.icir = p.ir;
  r.ric = std::isnan(s.mean) ? kNaN : std::fabs(s.mean);
  r.ricir = s.ir;
  return r;
}

double quality(MatrixView factor, MatrixView returns, const MetricOptions& options) {
  const auto daily = daily_cs_corr(factor, returns, CorrMethod::pearson, options);
  const auto s = series_stats(daily.values, options.ddof);
  return std::isnan(s.ir) ? 0.0 : std::fabs(s.ir);
}

double factor_corr(MatrixView a, MatrixView b, const MetricOptions& options) {
  const auto daily = daily_cs_corr(a, b, CorrMethod::pearson, options);
  return series_stats(daily.values, options.ddof).mean;
}

}  // namespace dagalpha
