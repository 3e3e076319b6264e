#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dagalpha/matrix.hpp"

namespace dagalpha {

/// Calendar trading date.
struct Date {
  std::chrono::sys_days days{};

  friend auto operator<=>(const Date&, const Date&) = default;
};

/// Parses `YYYY-MM-DD`; returns nullopt on anything else.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

enum class Feature : std::uint8_t { open, high, low, close, vwap, volume };
inline constexpr std::size_t kFeatureCount = 6;

std::string_view feature_name(Feature f);
std::optional<Feature> feature_from_name(std::string_view name);

enum class ConsistencyPolicy { reject, mask };

struct LoadOptions {
  ConsistencyPolicy on_inconsistent = ConsistencyPolicy::reject;
};

/// Immutable date x asset panel of the six base market features.
class Panel {
 public:
  Panel() = default;

  /// Builds a panel from pre-shaped matrices (indexed by Feature). Dates must be
  /// strictly increasing and every matrix must be |dates| x |assets|.
  Panel(std::vector<Date> dates, std::vector<std::string> assets,
        std::array<Matrix, kFeatureCount> features);

  const std::vector<Date>& dates() const noexcept { return dates_; }
  const std::vector<std::string>& assets() const noexcept { return assets_; }
  std::size_t num_dates() const noexcept { return dates_.size(); }
  std::size_t num_assets() const noexcept { return assets_.size(); }

  const Matrix& feature(Feature f) const { return features_[static_cast<std::size_t>(f)]; }
  const Matrix& close() const { return feature(Feature::close); }

  /// Index of the first date >= `d`.
  std::size_t lower_bound(Date d) const;

  /// Content hash (hex SHA-256) over dates, assets and every cell.
  std::string fingerprint() const;

  /// Asset-permuted copy: column j of the result is column perm[j] of this.
  Panel permute_assets(const std::vector<std::size_t>& perm) const;
  /// Rows [first, first + count).
  Panel slice_dates(std::size_t first, std::size_t count) const;

 private:
  std::vector<Date> dates_;
  std::vector<std::string> assets_;
  std::array<Matrix, kFeatureCount> features_;
};

/// Loads long-form CSV with header `date,asset,open,high,low,close,vwap,volume`.
Panel load_panel(std::istream& in, const LoadOptions& options = {});
Panel load_panel_file(const std::string& path, const LoadOptions& options = {});

void write_panel_csv(std::ostream& out, const Panel& panel);

/// Forward close-to-close returns over `horizon` trading days.
struct ReturnMatrix {
  Matrix values;
  int horizon = 0;
};

ReturnMatrix forward_returns(const Panel& panel, int horizon);

/// Long-form `date,asset,value` export of any panel-shaped matrix.
void write_matrix_csv(std::ostream& out, const Panel& panel, MatrixView values);

}  // namespace dagalpha
