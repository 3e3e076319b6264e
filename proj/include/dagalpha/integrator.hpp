#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "dagalpha/graph.hpp"
#include "dagalpha/matrix.hpp"
#include "dagalpha/panel.hpp"

namespace dagalpha {

struct IntegratorConfig {
  std::size_t window = 60;     ///< trailing days for the IC estimate
  double threshold = 0.01;     ///< minimum |trailing IC| to be selected
  std::size_t rebalance = 5;   ///< days between re-selections
  /// Extra days excluded before each rebalance. 0 keeps the default behaviour,
  /// in which the trailing window's forward returns overlap the rebalance date.
  std::size_t embargo = 0;
};

void validate(const IntegratorConfig& config);

struct MemberFactor {
  NodeId id = 0;
  MatrixView values;
};

struct MegaWeight {
  NodeId id = 0;
  double trailing_ic = 0.0;
  double weight = 0.0;
};

struct Rebalance {
  std::size_t row = 0;  ///< first row the weights apply to
  std::vector<MegaWeight> weights;
};

struct MegaResult {
  Matrix values;
  std::vector<Rebalance> history;
};

/// Per-date cross-sectional z-score (population std). Rows with fewer than two
/// valid entries or no spread are NaN.
Matrix cs_zscore(MatrixView x);

/// Dynamic composite of the members. Weights are refreshed every `rebalance`
/// rows from each member's mean daily Pearson IC over the `window` rows that
/// end strictly before the rebalance row.
MegaResult mega_factor(const std::vector<MemberFactor>& members, MatrixView returns,
                       const IntegratorConfig& config = {});

/// CSV `rebalance_date,factor_id,trailing_ic,weight`.
void write_weights_csv(std::ostream& out, const Panel& panel, const std::vector<Rebalance>& history);

}  // namespace dagalpha
