#include "dagalpha/integrator.hpp"

#include <cmath>
#include <ostream>

#include "dagalpha/error.hpp"
#include "dagalpha/metrics.hpp"

namespace dagalpha {

void validate(const IntegratorConfig& config) {
  if (config.window < 5) throw ConfigError("integrator window must be at least 5");
  if (!(config.threshold >= 0.0)) throw ConfigError("integrator threshold must be non-negative");
  if (config.rebalance < 1) throw ConfigError("integrator rebalance interval must be at least 1");
}

Matrix cs_zscore(MatrixView x) {
  Matrix z(x.rows(), x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t a = 0; a < x.cols(); ++a) {
      if (!std::isnan(x(t, a))) {
        sum += x(t, a);
        ++n;
      }
    }
    if (n < 2) continue;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t a = 0; a < x.cols(); ++a) {
      if (!std::isnan(x(t, a))) ss += (x(t, a) - mean) * (x(t, a) - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0)) continue;
    for (std::size_t a = 0; a < x.cols(); ++a) {
      if (!std::isnan(x(t, a))) z.row(t)[a] = (x(t, a) - mean) / sd;
    }
  }
  return z;
}

MegaResult mega_factor(const std::vector<MemberFactor>& members, MatrixView returns,
                       const IntegratorConfig& config) {
  validate(config);
  const std::size_t rows = returns.rows();
  const std::size_t cols = returns.cols();
  std::vector<std::vector<double>> daily;
  std::vector<Matrix> zs;
  for (const auto& m : members) {
    if (m.values.rows() != rows || m.values.cols() != cols) {
      throw ArgumentError("member factor shape differs from returns");
    }
    daily.push_back(daily_cs_corr(m.values, returns, CorrMethod::pearson).values);
    zs.push_back(cs_zscore(m.values));
  }

  MegaResult out;
  out.values = Matrix(rows, cols);
  const std::size_t lag = config.window + config.embargo;
  for (std::size_t start = 0; start < rows; start += config.rebalance) {
    const std::size_t end = std::min(rows, start + config.rebalance);
    Rebalance rb;
    rb.row = start;
    std::vector<std::size_t> chosen;
    if (start >= lag) {
      const std::size_t first = start - lag;
      double abs_sum = 0.0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        const auto stats = series_stats(
            std::span<const double>(daily[i]).subspan(first, config.window));
        if (stats.count == 0 || !(std::fabs(stats.mean) >= config.threshold)) continue;
        rb.weights.push_back({members[i].id, stats.mean, stats.mean});
        chosen.push_back(i);
        abs_sum += std::fabs(stats.mean);
      }
      if (abs_sum > 0.0) {
        for (auto& w : rb.weights) w.weight /= abs_sum;
      } else {
        rb.weights.clear();
      }
    }
    if (!rb.weights.empty()) {
      for (std::size_t t = start; t < end; ++t) {
        auto row = out.values.row(t);
        for (std::size_t a = 0; a < cols; ++a) {
          double v = 0.0;
          for (std::size_t w = 0; w < chosen.size(); ++w) v += rb.weights[w].weight * zs[chosen[w]](t, a);
          row[a] = v;
        }
      }
    }
    out.history.push_back(std::move(rb));
  }
  return out;
}

void write_weights_csv(std::ostream& out, const Panel& panel, const std::vector<Rebalance>& history) {
  out << "rebalance_date,factor_id,trailing_ic,weight\n";
  out.precision(17);
  for (const auto& rb : history) {
    for (const auto& w : rb.weights) {
      out << format_date(panel.dates().at(rb.row)) << ',' << w.id << ',' << w.trailing_ic << ','
          << w.weight << '\n';
    }
  }
}

}  // namespace dagalpha
