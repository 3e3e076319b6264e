#include "dagalpha/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include "dagalpha/error.hpp"
#include "dagalpha/hash.hpp"

namespace dagalpha {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "open", "high", "low", "close", "vwap", "volume"};

constexpr std::string_view kCsvHeader = "date,asset,open,high,low,close,vwap,volume";

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string_view trim_cr(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Empty field is a missing value.
bool parse_cell(std::string_view s, double& out) {
  if (s.empty()) {
    out = kNaN;
    return true;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

struct Record {
  Date date;
  std::string asset;
  std::array<double, kFeatureCount> values;
};

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{std::chrono::sys_days{ymd}};
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date.days};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

std::optional<Feature> feature_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  }
  return std::nullopt;
}

Panel::Panel(std::vector<Date> dates, std::vector<std::string> assets,
             std::array<Matrix, kFeatureCount> features)
    : dates_(std::move(dates)), assets_(std::move(assets)), features_(std::move(features)) {
  for (std::size_t i = 1; i < dates_.size(); ++i) {
    if (!(dates_[i - 1] < dates_[i])) {
      throw ArgumentError("panel dates must be strictly increasing (at " +
                          format_date(dates_[i]) + ")");
    }
  }
  for (const auto& m : features_) {
    if (m.rows() != dates_.size() || m.cols() != assets_.size()) {
      throw ArgumentError("panel feature matrix shape does not match dates x assets");
    }
  }
}

std::size_t Panel::lower_bound(Date d) const {
  return static_cast<std::size_t>(std::lower_bound(dates_.begin(), dates_.end(), d) -
                                  dates_.begin());
}

std::string Panel::fingerprint() const {
  Sha256 h;
  for (const auto& d : dates_) {
    const auto n = d.days.time_since_epoch().count();
    h.update(&n, sizeof(n));
  }
  for (const auto& a : assets_) {
    h.update(a);
    h.update("\0", 1);
  }
  for (const auto& m : features_) {
    // NaN payloads may differ; hash a canonical representation.
    for (double v : m.values()) {
      const double canon = std::isnan(v) ? kNaN : v;
      h.update(&canon, sizeof(canon));
    }
  }
  return h.hex_digest();
}

Panel Panel::permute_assets(const std::vector<std::size_t>& perm) const {
  if (perm.size() != assets_.size()) throw ArgumentError("permutation size mismatch");
  std::vector<std::string> assets(perm.size());
  std::array<Matrix, kFeatureCount> features;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    features[f] = Matrix(dates_.size(), assets_.size());
  }
  for (std::size_t j = 0; j < perm.size(); ++j) {
    assets[j] = assets_.at(perm[j]);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      for (std::size_t t = 0; t < dates_.size(); ++t) features[f](t, j) = features_[f](t, perm[j]);
    }
  }
  return Panel(dates_, std::move(assets), std::move(features));
}

Panel Panel::slice_dates(std::size_t first, std::size_t count) const {
  if (first + count > dates_.size()) throw ArgumentError("date slice out of range");
  std::vector<Date> dates(dates_.begin() + static_cast<std::ptrdiff_t>(first),
                          dates_.begin() + static_cast<std::ptrdiff_t>(first + count));
  std::array<Matrix, kFeatureCount> features;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    features[f] = Matrix(count, assets_.size());
    std::copy_n(features_[f].data() + first * assets_.size(), count * assets_.size(),
                features[f].data());
  }
  return Panel(std::move(dates), assets_, std::move(features));
}

Panel load_panel(std::istream& in, const LoadOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "empty panel input");
  std::string_view header = trim_cr(line);
  if (header.size() >= 3 && static_cast<unsigned char>(header[0]) == 0xEF) header.remove_prefix(3);
  if (header != kCsvHeader) {
    throw ParseError(0, "unexpected panel header, want '" + std::string(kCsvHeader) + "'");
  }

  std::vector<Record> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string_view text = trim_cr(line);
    if (text.empty()) continue;
    const auto fields = split_commas(text);
    if (fields.size() != 2 + kFeatureCount) {
      throw ParseError(row, "expected 8 fields, got " + std::to_string(fields.size()));
    }
    Record rec;
    const auto date = parse_date(fields[0]);
    if (!date) throw ParseError(row, "bad date '" + std::string(fields[0]) + "'");
    rec.date = *date;
    if (fields[1].empty()) throw ParseError(row, "empty asset identifier");
    rec.asset = std::string(fields[1]);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (!parse_cell(fields[2 + f], rec.values[f])) {
        throw ParseError(row, "bad number in field '" + std::string(kFeatureNames[f]) + "'");
      }
    }
    records.push_back(std::move(rec));
  }

  std::vector<Date> dates;
  std::vector<std::string> assets;
  for (const auto& r : records) {
    dates.push_back(r.date);
    assets.push_back(r.asset);
  }
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  std::sort(assets.begin(), assets.end());
  assets.erase(std::unique(assets.begin(), assets.end()), assets.end());

  std::array<Matrix, kFeatureCount> features;
  for (auto& m : features) m = Matrix(dates.size(), assets.size());
  std::vector<bool> seen(dates.size() * assets.size(), false);

  for (const auto& r : records) {
    const auto t = static_cast<std::size_t>(std::lower_bound(dates.begin(), dates.end(), r.date) -
                                            dates.begin());
    const auto a = static_cast<std::size_t>(
        std::lower_bound(assets.begin(), assets.end(), r.asset) - assets.begin());
    if (seen[t * assets.size() + a]) {
      throw DuplicateError("duplicate panel row for (" + format_date(r.date) + ", " + r.asset + ")");
    }
    seen[t * assets.size() + a] = true;
    for (std::size_t f = 0; f < kFeatureCount; ++f) features[f](t, a) = r.values[f];
  }

  auto& open = features[0];
  auto& high = features[1];
  auto& low = features[2];
  auto& close = features[3];
  auto& vwap = features[4];
  auto& volume = features[5];
  std::vector<std::string> violations;
  for (std::size_t t = 0; t < dates.size(); ++t) {
    for (std::size_t a = 0; a < assets.size(); ++a) {
      const double o = open(t, a), h = high(t, a), l = low(t, a), c = close(t, a);
      bool bad_ohlc = false;
      if (!std::isnan(o) && !std::isnan(h) && !std::isnan(l) && !std::isnan(c)) {
        bad_ohlc = l > std::min(o, c) || h < std::max(o, c);
      }
      const bool bad_volume = volume(t, a) < 0.0;
      if (!bad_ohlc && !bad_volume) continue;
      if (options.on_inconsistent == ConsistencyPolicy::reject) {
        violations.push_back(format_date(dates[t]) + "/" + assets[a] +
                             (bad_ohlc ? " (ohlc)" : " (volume)"));
        continue;
      }
      if (bad_ohlc) {
        open(t, a) = high(t, a) = low(t, a) = close(t, a) = vwap(t, a) = kNaN;
      }
      if (bad_volume) volume(t, a) = kNaN;
    }
  }
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << violations.size() << " inconsistent panel cell(s):";
    for (std::size_t i = 0; i < violations.size() && i < 20; ++i) msg << ' ' << violations[i];
    if (violations.size() > 20) msg << " ...";
    throw ValidationError(msg.str());
  }
  return Panel(std::move(dates), std::move(assets), std::move(features));
}

Panel load_panel_file(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open panel file '" + path + "'");
  return load_panel(in, options);
}

namespace {

void write_number(std::ostream& out, double v) {
  if (std::isnan(v)) return;
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

}  // namespace

void write_panel_csv(std::ostream& out, const Panel& panel) {
  out << kCsvHeader << '\n';
  for (std::size_t t = 0; t < panel.num_dates(); ++t) {
    const auto date = format_date(panel.dates()[t]);
    for (std::size_t a = 0; a < panel.num_assets(); ++a) {
      out << date << ',' << panel.assets()[a];
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        out << ',';
        write_number(out, panel.feature(static_cast<Feature>(f))(t, a));
      }
      out << '\n';
    }
  }
}

void write_matrix_csv(std::ostream& out, const Panel& panel, MatrixView values) {
  if (values.rows() != panel.num_dates() || values.cols() != panel.num_assets()) {
    throw ArgumentError("matrix shape does not match panel");
  }
  out << "date,asset,value\n";
  for (std::size_t t = 0; t < values.rows(); ++t) {
    const auto date = format_date(panel.dates()[t]);
    for (std::size_t a = 0; a < values.cols(); ++a) {
      out << date << ',' << panel.assets()[a] << ',';
      write_number(out, values(t, a));
      out << '\n';
    }
  }
}

ReturnMatrix forward_returns(const Panel& panel, int horizon) {
  if (horizon < 1) throw ArgumentError("forward return horizon must be positive");
  if (static_cast<std::size_t>(horizon) >= panel.num_dates()) {
    throw ArgumentError("forward return horizon " + std::to_string(horizon) +
                        " must be below the number of dates");
  }
  const auto& close = panel.close();
  ReturnMatrix out{Matrix(close.rows(), close.cols()), horizon};
  const auto h = static_cast<std::size_t>(horizon);
  for (std::size_t t = 0; t + h < close.rows(); ++t) {
    for (std::size_t a = 0; a < close.cols(); ++a) {
      const double now = close(t, a);
      const double later = close(t + h, a);
      if (std::isnan(now) || std::isnan(later) || now == 0.0) continue;
      out.values(t, a) = later / now - 1.0;
    }
  }
  return out;
}

}  // namespace dagalpha
