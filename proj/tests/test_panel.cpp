#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"

#include "dagalpha/error.hpp"
#include "dagalpha/panel.hpp"
#include "dagalpha/synthetic.hpp"
#include "helpers.hpp"

using namespace dagalpha;
using dagalpha::testing::panel_from_close;

namespace {

const char* kHeader = "date,asset,open,high,low,close,vwap,volume\n";

Panel load_text(const std::string& body, LoadOptions o = {}) {
  std::istringstream in(kHeader + body);
  return load_panel(in, o);
}

}  // namespace

TEST_CASE("dates parse and format") {
  auto d = parse_date("2024-02-29");
  REQUIRE(d);
  CHECK(format_date(*d) == "2024-02-29");
  CHECK_FALSE(parse_date("2023-02-29"));
  CHECK_FALSE(parse_date("2024-1-05"));
  CHECK_FALSE(parse_date("20240105"));
}

TEST_CASE("two rows, one asset") {
  const Panel p = load_text("2024-01-02,A,1,2,0.5,1.5,1.2,100\n2024-01-03,A,1.5,2,1,1.8,1.6,90\n");
  CHECK(p.num_dates() == 2);
  CHECK(p.num_assets() == 1);
  CHECK(p.close()(1, 0) == 1.8);
  CHECK(p.feature(Feature::volume)(0, 0) == 100);
}

TEST_CASE("missing cell becomes NaN") {
  const Panel p = load_text(
      "2024-01-02,A,1,2,0.5,1.5,1.2,100\n"
      "2024-01-02,B,1,2,0.5,1.5,1.2,100\n"
      "2024-01-03,A,1,2,0.5,1.5,1.2,100\n");
  CHECK(p.num_dates() == 2);
  CHECK(p.num_assets() == 2);
  CHECK(std::isnan(p.close()(1, 1)));
  CHECK(p.close()(1, 0) == 1.5);
}

TEST_CASE("empty field is missing") {
  const Panel p = load_text("2024-01-02,A,1,2,0.5,,1.2,100\n");
  CHECK(std::isnan(p.close()(0, 0)));
}

TEST_CASE("inconsistent OHLC is rejected by default and masked on request") {
  const std::string bad = "2024-01-02,A,4.5,4,5,4.5,4.5,10\n2024-01-03,A,4,5,3,4.5,4.5,10\n";
  CHECK_THROWS_AS(load_text(bad), ValidationError);
  const Panel p = load_text(bad, LoadOptions{ConsistencyPolicy::mask});
  CHECK(std::isnan(p.close()(0, 0)));
  CHECK(p.close()(1, 0) == 4.5);
}

TEST_CASE("negative volume is rejected") {
  CHECK_THROWS_AS(load_text("2024-01-02,A,1,2,0.5,1.5,1.2,-1\n"), ValidationError);
}

TEST_CASE("malformed rows report their row index") {
  try {
    load_text("2024-01-02,A,1,2,0.5,1.5,1.2,100\n2024-01-03,A,1,2,x,1.5,1.2,100\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
  }
  CHECK_THROWS_AS(load_text("2024-13-02,A,1,2,0.5,1.5,1.2,100\n"), ParseError);
  CHECK_THROWS_AS(load_text("2024-01-02,A,1,2\n"), ParseError);
  std::istringstream wrong("date,asset,close\n");
  CHECK_THROWS_AS(load_panel(wrong), ParseError);
}

TEST_CASE("duplicate keys are rejected") {
  CHECK_THROWS_AS(load_text("2024-01-02,A,1,2,0.5,1.5,1.2,100\n2024-01-02,A,1,2,0.5,1.5,1.2,100\n"),
                  DuplicateError);
}

TEST_CASE("rows may arrive in any order") {
  const Panel p = load_text(
      "2024-01-03,B,1,2,0.5,1.1,1.2,100\n"
      "2024-01-02,A,1,2,0.5,1.2,1.2,100\n"
      "2024-01-02,B,1,2,0.5,1.3,1.2,100\n");
  CHECK(format_date(p.dates()[0]) == "2024-01-02");
  CHECK(p.assets()[0] == "A");
  CHECK(p.close()(0, 1) == 1.3);
  CHECK(p.close()(1, 1) == 1.1);
}

TEST_CASE("csv round trip") {
  const Panel p = random_panel({.dates = 15, .assets = 4, .nan_fraction = 0.1, .seed = 3});
  std::stringstream ss;
  write_panel_csv(ss, p);
  const Panel q = load_panel(ss);
  CHECK(q.fingerprint() == p.fingerprint());
}

TEST_CASE("forward returns") {
  SUBCASE("one step") {
    const auto r = forward_returns(panel_from_close({{100}, {110}}), 1);
    CHECK(r.values(0, 0) == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(std::isnan(r.values(1, 0)));
  }
  SUBCASE("constant series") {
    std::vector<std::vector<double>> c(12, {7.0});
    const auto r = forward_returns(panel_from_close(c), 5);
    for (std::size_t t = 0; t < 7; ++t) CHECK(r.values(t, 0) == 0.0);
    for (std::size_t t = 7; t < 12; ++t) CHECK(std::isnan(r.values(t, 0)));
  }
  SUBCASE("two step") {
    const auto r = forward_returns(panel_from_close({{100}, {120}, {90}}), 2);
    CHECK(r.values(0, 0) == doctest::Approx(-0.10).epsilon(1e-12));
    CHECK(std::isnan(r.values(1, 0)));
    CHECK(std::isnan(r.values(2, 0)));
  }
  SUBCASE("zero or missing close") {
    const auto r = forward_returns(panel_from_close({{0.0, kNaN}, {1.0, 1.0}}), 1);
    CHECK(std::isnan(r.values(0, 0)));
    CHECK(std::isnan(r.values(0, 1)));
  }
  SUBCASE("horizon must fit") {
    CHECK_THROWS_AS(forward_returns(panel_from_close({{1}, {2}}), 2), ArgumentError);
    CHECK_THROWS_AS(forward_returns(panel_from_close({{1}, {2}}), 0), ArgumentError);
  }
}

TEST_CASE("forward returns reconstruct the later close") {
  const Panel p = random_panel({.dates = 60, .assets = 8, .nan_fraction = 0.05, .seed = 9});
  const auto r = forward_returns(p, 7);
  for (std::size_t t = 0; t + 7 < p.num_dates(); ++t) {
    for (std::size_t a = 0; a < p.num_assets(); ++a) {
      const double c0 = p.close()(t, a), c1 = p.close()(t + 7, a);
      if (!(c0 > 0) || !(c1 > 0)) continue;
      CHECK(std::fabs((1 + r.values(t, a)) * c0 - c1) <= 1e-12 * c1);
    }
  }
}

TEST_CASE("forward returns follow asset permutations") {
  const Panel p = random_panel({.dates = 30, .assets = 6, .nan_fraction = 0.05, .seed = 4});
  std::vector<std::size_t> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(1));
  const auto r = forward_returns(p, 3);
  const auto rp = forward_returns(p.permute_assets(perm), 3);
  for (std::size_t t = 0; t < 30; ++t) {
    for (std::size_t j = 0; j < 6; ++j) {
      const double a = rp.values(t, j), b = r.values(t, perm[j]);
      CHECK(((std::isnan(a) && std::isnan(b)) || a == b));
    }
  }
}

TEST_CASE("panel constructor rejects unordered dates and bad shapes") {
  const auto days = business_days(*parse_date("2021-01-04"), 2);
  std::array<Matrix, kFeatureCount> f;
  for (auto& m : f) m = Matrix(2, 1, 1.0);
  CHECK_NOTHROW(Panel(days, {"A"}, f));
  CHECK_THROWS_AS(Panel({days[1], days[0]}, {"A"}, f), ArgumentError);
  f[3] = Matrix(3, 1, 1.0);
  CHECK_THROWS_AS(Panel(days, {"A"}, f), ArgumentError);
}

TEST_CASE("fingerprint tracks content") {
  const Panel a = random_panel({.dates = 10, .assets = 3, .seed = 1});
  const Panel b = random_panel({.dates = 10, .assets = 3, .seed = 2});
  CHECK(a.fingerprint() == random_panel({.dates = 10, .assets = 3, .seed = 1}).fingerprint());
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(a.fingerprint().size() == 64);
}

TEST_CASE("business days skip weekends") {
  const auto days = business_days(*parse_date("2021-01-01"), 3);  // a Friday
  CHECK(format_date(days[0]) == "2021-01-01");
  CHECK(format_date(days[1]) == "2021-01-04");
  CHECK(format_date(days[2]) == "2021-01-05");
}

TEST_CASE("matrix export is long form") {
  const Panel p = panel_from_close({{1, 2}});
  std::ostringstream out;
  write_matrix_csv(out, p, p.close());
  CHECK(out.str() == "date,asset,value\n2021-01-04,S0,1\n2021-01-04,S1,2\n");
}
