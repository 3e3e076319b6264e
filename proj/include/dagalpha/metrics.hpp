#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dagalpha/matrix.hpp"

namespace dagalpha {

enum class CorrMethod { pearson, spearman };

struct MetricOptions {
  /// Fewest valid (factor, return) pairs for a date to count.
  std::size_t min_assets = 2;
  /// Delta degrees of freedom of the ICIR denominator.
  int ddof = 1;
};

/// Per-date cross-sectional correlation. Invalid dates hold NaN.
struct DailySeries {
  std::vector<double> values;
  std::size_t valid_days() const;
};

struct MetricReport {
  double ic = kNaN;
  double icir = kNaN;
  double ric = kNaN;
  double ricir = kNaN;
  std::size_t valid_days = 0;
  std::vector<double> daily_pearson;
  std::vector<double> daily_spearman;
};

/// Pearson correlation of two equally sized samples; NaN if either side has
/// zero variance or fewer than two points.
double pearson(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based, ties averaged).
std::vector<double> average_ranks(std::span<const double> x);

DailySeries daily_cs_corr(MatrixView factor, MatrixView returns, CorrMethod method,
                          const MetricOptions& options = {});

/// Relative spread below which a series counts as constant (std = 0).
inline constexpr double kStdFloor = 1e-12;

/// |mean| and mean/std of a daily series over its valid entries.
struct SeriesStats {
  double mean = kNaN;
  double ir = kNaN;
  std::size_t count = 0;
};
SeriesStats series_stats(std::span<const double> daily, int ddof = 1);

/// IC, ICIR, RIC, RICIR. Throws ArgumentError on zero valid days.
MetricReport ic_suite(MatrixView factor, MatrixView returns, const MetricOptions& options = {});

/// |ICIR|, or 0 when the ICIR is undefined.
double quality(MatrixView factor, MatrixView returns, const MetricOptions& options = {});

/// Mean over valid dates of the cross-sectional Pearson correlation of two
/// factors; NaN when no date is valid.
double factor_corr(MatrixView a, MatrixView b, const MetricOptions& options = {});

}  // namespace dagalpha
