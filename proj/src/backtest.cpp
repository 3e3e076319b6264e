#include "dagalpha/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <spdlog/spdlog.h>

#include "dagalpha/error.hpp"
#include "dagalpha/metrics.hpp"

namespace dagalpha {

namespace {

struct Position {
  std::size_t asset;
  double value;       // current value of this leg, tranche capital units
  double last_price;  // last valid close seen
};

struct Tranche {
  std::vector<Position> legs;

  /// Marks to the day's closes; returns the tranche's return since the last mark.
  double mark(std::span<const double> closes) {
    if (legs.empty()) return 0.0;
    double before = 0.0, after = 0.0;
    for (auto& p : legs) {
      before += p.value;
      const double px = closes[p.asset];
      if (!std::isnan(px) && px > 0.0) {
        p.value *= px / p.last_price;
        p.last_price = px;
      }
      after += p.value;
    }
    return after / before - 1.0;
  }
};

}  // namespace

void validate(const BacktestConfig& config) {
  if (!(config.top_frac > 0.0 && config.top_frac <= 1.0)) throw ConfigError("top_frac must lie in (0, 1]");
  if (config.hold < 1) throw ConfigError("hold must be at least 1");
  if (!(config.cost >= 0.0)) throw ConfigError("cost must be non-negative");
  if (!(config.periods_per_year > 0.0)) throw ConfigError("periods_per_year must be positive");
}

BacktestResult simulate(MatrixView signal, MatrixView close, const BacktestConfig& config) {
  validate(config);
  if (signal.rows() != close.rows() || signal.cols() != close.cols()) {
    throw ArgumentError("signal and price shapes differ");
  }
  const std::size_t rows = signal.rows();
  const std::size_t cols = signal.cols();
  const double h = static_cast<double>(config.hold);
  const auto min_valid = static_cast<std::size_t>(std::ceil(1.0 / config.top_frac - 1e-12));

  BacktestResult res;
  res.config = config;
  std::vector<Tranche> tranches(config.hold);
  std::vector<std::size_t> candidates;
  for (std::size_t t = 0; t < rows; ++t) {
    const auto px = close.row(t);
    double r = 0.0;
    for (auto& tr : tranches) r += tr.mark(px);
    r /= h;

    Tranche& due = tranches[t % config.hold];
    candidates.clear();
    for (std::size_t a = 0; a < cols; ++a) {
      const double p = px[a];
      if (!std::isnan(signal(t, a)) && !std::isnan(p) && p > 0.0) candidates.push_back(a);
    }
    if (candidates.empty()) {
      // Nothing to rank today: the maturing tranche rolls its holdings over.
    } else if (candidates.size() < min_valid) {
      spdlog::warn("backtest row {}: {} assets with a valid signal, need {}; tranche in cash", t,
                   candidates.size(), min_valid);
      due.legs.clear();
      ++res.cash_tranches;
    } else {
      std::stable_sort(candidates.begin(), candidates.end(),
                       [&](std::size_t a, std::size_t b) { return signal(t, a) > signal(t, b); });
      const auto n = static_cast<std::size_t>(
          std::ceil(config.top_frac * static_cast<double>(candidates.size()) - 1e-12));
      due.legs.clear();
      for (std::size_t i = 0; i < n; ++i) {
        due.legs.push_back({candidates[i], 1.0 / static_cast<double>(n), px[candidates[i]]});
      }
      r -= config.cost / h;
    }
    res.daily_returns.push_back(r);
  }
  res.wealth = wealth_curve(res.daily_returns);
  res.perf = performance(res.daily_returns, config.periods_per_year, config.risk_free);
  return res;
}

std::vector<double> wealth_curve(std::span<const double> daily_returns) {
  std::vector<double> w;
  w.reserve(daily_returns.size());
  double level = 1.0;
  for (double r : daily_returns) {
    level *= 1.0 + r;
    w.push_back(level);
  }
  return w;
}

double max_drawdown(std::span<const double> wealth) {
  double peak = -std::numeric_limits<double>::infinity();
  double mdd = 0.0;
  for (double w : wealth) {
    peak = std::max(peak, w);
    if (peak > 0.0) mdd = std::max(mdd, 1.0 - w / peak);
  }
  return std::clamp(mdd, 0.0, 1.0);
}

Performance performance(std::span<const double> daily_returns, double periods_per_year,
                        double risk_free) {
  Performance p;
  if (daily_returns.empty()) return p;
  const double n = static_cast<double>(daily_returns.size());
  const double mean = std::accumulate(daily_returns.begin(), daily_returns.end(), 0.0) / n;
  p.ar = periods_per_year * mean;

  std::vector<double> path{1.0};
  const auto w = wealth_curve(daily_returns);
  path.insert(path.end(), w.begin(), w.end());
  p.mdd = max_drawdown(path);

  if (daily_returns.size() >= 2) {
    const double ex = mean - risk_free;
    double ss = 0.0;
    for (double r : daily_returns) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd > kStdFloor * std::fabs(ex)) p.sr = std::sqrt(periods_per_year) * ex / sd;
  }
  return p;
}

void write_curve_csv(std::ostream& out, const Panel& panel, std::size_t first,
                     const BacktestResult& result) {
  out << "date,daily_return,wealth\n";
  out.precision(17);
  for (std::size_t i = 0; i < result.daily_returns.size(); ++i) {
    out << format_date(panel.dates().at(first + i)) << ',' << result.daily_returns[i] << ','
        << result.wealth[i] << '\n';
  }
}

}  // namespace dagalpha
