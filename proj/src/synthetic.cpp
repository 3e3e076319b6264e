#include "dagalpha/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dagalpha/error.hpp"

namespace dagalpha {

std::vector<Date> business_days(Date start, std::size_t count) {
  using namespace std::chrono;
  std::vector<Date> out;
  sys_days d = start.days;
  while (out.size() < count) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) out.push_back(Date{d});
    d += days{1};
  }
  return out;
}

namespace {

std::vector<std::string> asset_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string name = "A" + std::to_string(1000 + i);
    out.push_back(name);
  }
  return out;
}

Date default_start() { return *parse_date("2020-01-01"); }

}  // namespace

Panel random_panel(const RandomPanelOptions& o) {
  if (o.dates == 0 || o.assets == 0) throw ArgumentError("random panel needs dates and assets");
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<Matrix, kFeatureCount> f;
  for (auto& m : f) m = Matrix(o.dates, o.assets);
  auto at = [&](Feature ft, std::size_t t, std::size_t a) -> double& {
    return f[static_cast<std::size_t>(ft)].row(t)[a];
  };
  for (std::size_t a = 0; a < o.assets; ++a) {
    double close = 20.0 * std::exp(0.5 * z(rng));
    for (std::size_t t = 0; t < o.dates; ++t) {
      const double open = close * std::exp(0.01 * z(rng));
      close = open * std::exp(0.02 * z(rng));
      const double hi = std::max(open, close) * (1.0 + 0.01 * std::fabs(z(rng)));
      const double lo = std::min(open, close) * (1.0 - 0.01 * std::fabs(z(rng)));
      at(Feature::open, t, a) = open;
      at(Feature::close, t, a) = close;
      at(Feature::high, t, a) = hi;
      at(Feature::low, t, a) = lo;
      at(Feature::vwap, t, a) = lo + (hi - lo) * u(rng);
      at(Feature::volume, t, a) = std::round(1e5 * std::exp(z(rng)));
    }
  }
  if (o.nan_fraction > 0.0) {
    for (auto& m : f) {
      for (std::size_t t = 0; t < o.dates; ++t) {
        for (auto& v : m.row(t)) {
          if (u(rng) < o.nan_fraction) v = kNaN;
        }
      }
    }
  }
  return Panel(business_days(default_start(), o.dates), asset_names(o.assets), std::move(f));
}

Panel planted_panel(const PlantedPanelOptions& o) {
  if (o.horizon < 1 || o.dates <= static_cast<std::size_t>(o.horizon) || o.assets < 2) {
    throw ArgumentError("planted panel needs more dates than the horizon and two assets");
  }
  const auto h = static_cast<std::size_t>(o.horizon);
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::array<Matrix, kFeatureCount> f;
  for (auto& m : f) m = Matrix(o.dates, o.assets);
  auto at = [&](Feature ft, std::size_t t, std::size_t a) -> double& {
    return f[static_cast<std::size_t>(ft)].row(t)[a];
  };
  for (std::size_t a = 0; a < o.assets; ++a) {
    for (std::size_t t = 0; t < o.dates; ++t) {
      const double s = o.signal_sd * z(rng);
      const double r = o.loading * s + o.noise_sd * z(rng);
      if (t < h) at(Feature::close, t, a) = 20.0 * std::exp(0.3 * z(rng));
      const double close = at(Feature::close, t, a);
      if (t + h < o.dates) at(Feature::close, t + h, a) = close * std::max(1.0 + r, 0.05);
      const double open = close * (1.0 + 0.01 * z(rng));
      const double vwap = open * (1.0 + s);
      at(Feature::open, t, a) = open;
      at(Feature::vwap, t, a) = vwap;
      at(Feature::high, t, a) = std::max({open, close, vwap}) * (1.0 + 0.005 * std::fabs(z(rng)));
      at(Feature::low, t, a) = std::min({open, close, vwap}) * (1.0 - 0.005 * std::fabs(z(rng)));
      at(Feature::volume, t, a) = std::round(1e5 * std::exp(0.5 * z(rng)));
    }
  }
  return Panel(business_days(default_start(), o.dates), asset_names(o.assets), std::move(f));
}

}  // namespace dagalpha
