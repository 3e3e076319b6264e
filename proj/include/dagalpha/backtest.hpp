#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "dagalpha/matrix.hpp"
#include "dagalpha/panel.hpp"

namespace dagalpha {

struct BacktestConfig {
  double top_frac = 0.2;
  std::size_t hold = 20;          ///< H, days each tranche is held
  double cost = 0.001;            ///< round-trip cost per tranche cycle
  double periods_per_year = 252;  ///< K
  double risk_free = 0.0;         ///< per-period r_f
};

void validate(const BacktestConfig& config);

struct Performance {
  double ar = kNaN;
  double mdd = kNaN;
  double sr = kNaN;
};

struct BacktestResult {
  std::vector<double> daily_returns;
  std::vector<double> wealth;  ///< wealth after each day, starting from 1
  Performance perf;
  BacktestConfig config;
  /// Tranche openings skipped because too few assets had a valid signal.
  std::size_t cash_tranches = 0;
};

/// Long-only overlapping-tranche simulation on close prices. Row t of the
/// signal is known at the close of day t and traded at that close.
BacktestResult simulate(MatrixView signal, MatrixView close, const BacktestConfig& config = {});

/// max over t of 1 - W_t / max_{u<=t} W_u, over the given path.
double max_drawdown(std::span<const double> wealth);

/// AR = K mean, MDD from initial wealth 1, SR = sqrt(K) mean excess / sample std.
Performance performance(std::span<const double> daily_returns, double periods_per_year = 252,
                        double risk_free = 0.0);

std::vector<double> wealth_curve(std::span<const double> daily_returns);

/// CSV `date,daily_return,wealth` over rows [first, first + returns.size()).
void write_curve_csv(std::ostream& out, const Panel& panel, std::size_t first,
                     const BacktestResult& result);

}  // namespace dagalpha
