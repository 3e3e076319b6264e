#pragma once

#include <cstdint>
#include <string>

#include "dagalpha/panel.hpp"

namespace dagalpha {

/// Consecutive weekdays starting at `start` (or the next weekday).
std::vector<Date> business_days(Date start, std::size_t count);

struct RandomPanelOptions {
  std::size_t dates = 120;
  std::size_t assets = 30;
  /// Probability that any single feature cell is blanked.
  double nan_fraction = 0.0;
  std::uint64_t seed = 1;
};

/// Random-walk prices with a consistent OHLC envelope and lognormal volume.
Panel random_panel(const RandomPanelOptions& options);

struct PlantedPanelOptions {
  std::size_t dates = 300;
  std::size_t assets = 40;
  int horizon = 20;
  double signal_sd = 0.02;
  double loading = 1.0;
  double noise_sd = 0.04;
  std::uint64_t seed = 1;
};

/// Expression whose values carry the planted signal in planted_panel().
inline constexpr const char* kPlantedExpr = "Div($vwap, $open)";

/// Panel whose `horizon`-day forward returns are loading * s + noise, where
/// s = vwap / open - 1 on the same row.
Panel planted_panel(const PlantedPanelOptions& options);

}  // namespace dagalpha
