#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "dagalpha/engine.hpp"
#include "dagalpha/kernels.hpp"
#include "dagalpha/synthetic.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace dagalpha;
using dagalpha::testing::close_enough;
using dagalpha::testing::oracle_evaluate;
using dagalpha::testing::panel_from_close;
using dagalpha::testing::panel_from_open_close;

namespace {

Matrix eval(const char* text, const Panel& p) { return evaluate(parse_expr(text), p); }

bool agree(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!close_enough(a.data()[i], b.data()[i], 1e-9, 1e-12)) return false;
  return true;
}

bool identical(const Matrix& a, const Matrix& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    if (std::isnan(x) && std::isnan(y)) continue;
    if (std::bit_cast<std::uint64_t>(x) != std::bit_cast<std::uint64_t>(y)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rolling mean warmup") {
  const Matrix m = eval("TsMean($close, 3)", panel_from_close({{1}, {2}, {3}, {4}}));
  CHECK(std::isnan(m(0, 0)));
  CHECK(std::isnan(m(1, 0)));
  CHECK(m(2, 0) == 2.0);
  CHECK(m(3, 0) == 3.0);
}

TEST_CASE("self correlation is one") {
  const Panel p = random_panel({.dates = 40, .assets = 5, .seed = 8});
  const Matrix m = eval("TsCorr($close, $close, 5)", p);
  std::size_t defined = 0;
  for (double v : m.values()) {
    if (std::isnan(v)) continue;
    ++defined;
    CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(defined == 36 * 5);
}

TEST_CASE("cross-sectional rank") {
  const Matrix m = eval("Rank($close)", panel_from_close({{3, 1, 2}, {5, kNaN, 5}, {4, kNaN, kNaN}}));
  CHECK(m(0, 0) == 1.0);
  CHECK(m(0, 1) == 0.0);
  CHECK(m(0, 2) == 0.5);
  CHECK(m(1, 0) == 0.5);
  CHECK(std::isnan(m(1, 1)));
  CHECK(m(1, 2) == 0.5);
  CHECK(m(2, 0) == 0.5);
}

TEST_CASE("normalized daily price change") {
  const Panel p = panel_from_open_close({{10}}, {{9}});
  CHECK(eval("Div(Sub($open, $close), $open)", p)(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("elementwise conventions") {
  const Panel p = panel_from_close({{-2, 0, 1e-12, 4}});
  CHECK(std::isnan(eval("Log($close)", p)(0, 0)));
  CHECK(eval("Log($close)", p)(0, 3) == std::log(4 + 1e-8));
  CHECK(eval("SLog1p($close)", p)(0, 0) == doctest::Approx(-std::log1p(2.0)).epsilon(1e-15));
  CHECK(eval("Inv($close)", p)(0, 1) == 1e8);
  CHECK(eval("Div($close, $close)", p)(0, 2) == 1e-12 / 1e-8);
  CHECK(eval("Sign($close)", p)(0, 0) == -1.0);
  CHECK(eval("Sign($close)", p)(0, 1) == 0.0);
  CHECK(std::isnan(eval("Pow($close, 0.01)", p)(0, 0)));
  CHECK(eval("Pow($close, 2.0)", p)(0, 0) == 4.0);
  CHECK(eval("Greater($close, 0.0)", p)(0, 3) == 1.0);
  CHECK(eval("Less($close, 0.0)", p)(0, 3) == 0.0);
  CHECK(eval("GetLess($close, 0.0)", p)(0, 0) == -2.0);
}

TEST_CASE("infinities become NaN") {
  const Panel p = panel_from_close({{1e300}});
  CHECK(std::isnan(eval("Mul($close, $close)", p)(0, 0)));
}

TEST_CASE("time-series conventions") {
  const Panel p = panel_from_close({{1}, {2}, {4}, {8}, {kNaN}, {16}, {32}});
  CHECK(eval("Ref($close, 2)", p)(2, 0) == 1.0);
  CHECK(eval("TsDelta($close, 1)", p)(3, 0) == 4.0);
  CHECK(eval("TsPctChange($close, 1)", p)(3, 0) == 1.0);
  CHECK(eval("TsRatio($close, 2)", p)(3, 0) == 4.0);
  CHECK(eval("TsWMA($close, 3)", p)(3, 0) == doctest::Approx((2 + 2 * 4 + 3 * 8) / 6.0));
  CHECK(eval("TsRank($close, 4)", p)(3, 0) == 1.0);
  CHECK(eval("TsMed($close, 4)", p)(3, 0) == 3.0);
  CHECK(eval("TsMad($close, 4)", p)(3, 0) == 1.5);
  CHECK(eval("TsMinMaxDiff($close, 3)", p)(3, 0) == 6.0);
  CHECK(eval("TsStd($close, 2)", p)(1, 0) == doctest::Approx(std::sqrt(0.5)));
  // A gap makes every window that touches it NaN.
  CHECK(std::isnan(eval("TsMean($close, 2)", p)(4, 0)));
  CHECK(std::isnan(eval("TsMean($close, 2)", p)(5, 0)));
  CHECK(eval("TsMean($close, 2)", p)(6, 0) == 24.0);
  // EMA carries through the gap.
  const Matrix ema = eval("TsEMA($close, 3)", p);
  CHECK(ema(0, 0) == 1.0);
  CHECK(ema(1, 0) == 1.5);
  CHECK(ema(4, 0) == ema(3, 0));
}

TEST_CASE("skewness and kurtosis match textbook values") {
  // Sample 1, 2, 3, 10: adjusted skew and excess kurtosis worked by hand.
  const Panel p = panel_from_close({{1}, {2}, {3}, {10}});
  const double n = 4, m = 4;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : {1.0, 2.0, 3.0, 10.0}) {
    m2 += (x - m) * (x - m) / n;
    m3 += std::pow(x - m, 3) / n;
    m4 += std::pow(x - m, 4) / n;
  }
  const double g1 = m3 / std::pow(m2, 1.5), g2 = m4 / (m2 * m2) - 3;
  CHECK(eval("TsSkew($close, 4)", p)(3, 0) == doctest::Approx(g1 * std::sqrt(n * (n - 1)) / (n - 2)));
  CHECK(eval("TsKurt($close, 4)", p)(3, 0) ==
        doctest::Approx((n - 1) / ((n - 2) * (n - 3)) * ((n + 1) * g2 + 6)));
  CHECK(std::isnan(eval("TsSkew($close, 4)", panel_from_close({{1}, {1}, {1}, {1}}))(3, 0)));
}

TEST_CASE("oracle agreement on random expressions") {
  const Panel p = random_panel({.dates = 50, .assets = 12, .nan_fraction = 0.05, .seed = 5});
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    const Expr e = random_expr(rng);
    CAPTURE(render(e));
    CHECK(agree(evaluate(e, p), oracle_evaluate(e, p)));
  }
}

TEST_CASE("every operator against the oracle") {
  const Panel p = random_panel({.dates = 40, .assets = 9, .nan_fraction = 0.05, .seed = 12});
  for (const auto& info : all_ops()) {
    std::string text;
    switch (info.kind) {
      case OpKind::unary: text = std::string(info.name) + "(Sub($close, $open))"; break;
      case OpKind::binary:
        text = info.op == Op::Pow ? "Pow($close, 2.0)" : std::string(info.name) + "($close, $vwap)";
        break;
      case OpKind::rolling1: text = std::string(info.name) + "(Sub($close, $open), 5)"; break;
      case OpKind::rolling2: text = std::string(info.name) + "($close, $volume, 6)"; break;
    }
    CAPTURE(text);
    const Expr e = parse_expr(text);
    CHECK(agree(evaluate(e, p), oracle_evaluate(e, p)));
  }
}

TEST_CASE("scalar and avx2 evaluation are bit-identical") {
  if (kernels::avx2_table() == nullptr) return;
  const Panel p = random_panel({.dates = 60, .assets = 13, .nan_fraction = 0.05, .seed = 21});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Expr e = random_expr(rng);
    kernels::set_active(kernels::Isa::scalar);
    const Matrix a = evaluate(e, p);
    kernels::set_active(kernels::Isa::avx2);
    const Matrix b = evaluate(e, p);
    CAPTURE(render(e));
    CHECK(identical(a, b));
  }
}

TEST_CASE("windowed operators are shift invariant") {
  const Panel p = random_panel({.dates = 80, .assets = 7, .nan_fraction = 0.03, .seed = 31});
  const std::size_t cut = 30;
  const Panel tail = p.slice_dates(cut, p.num_dates() - cut);
  std::mt19937_64 rng(77);
  RandomExprOptions o;
  o.windows = {1, 2, 3, 5};
  o.max_depth = 4;
  int tested = 0;
  while (tested < 100) {
    const Expr e = random_expr(rng, o);
    if (render(e).find("TsEMA") != std::string::npos) continue;
    ++tested;
    const Matrix full = evaluate(e, p);
    const Matrix part = evaluate(e, tail);
    // Row `cut + t` of the full result depends only on rows >= cut once the
    // longest nested lookback has elapsed.
    const std::size_t settle = 20;
    for (std::size_t t = settle; t < tail.num_dates(); ++t) {
      for (std::size_t a = 0; a < tail.num_assets(); ++a) {
        CAPTURE(render(e));
        CHECK(close_enough(full(cut + t, a), part(t, a), 0.0, 0.0));
      }
    }
  }
}

TEST_CASE("asset permutation permutes outputs") {
  const Panel p = random_panel({.dates = 40, .assets = 10, .nan_fraction = 0.05, .seed = 41});
  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  const Panel q = p.permute_assets(perm);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const Expr e = random_expr(rng);
    const Matrix a = evaluate(e, p), b = evaluate(e, q);
    bool ok = true;
    for (std::size_t t = 0; t < 40; ++t)
      for (std::size_t j = 0; j < 10; ++j) ok = ok && close_enough(b(t, j), a(t, perm[j]), 0.0, 0.0);
    CAPTURE(render(e));
    CHECK(ok);
  }
}

TEST_CASE("rank rows lie in [0, 1] with mean one half") {
  const Panel p = random_panel({.dates = 30, .assets = 11, .seed = 2});
  const Matrix m = eval("Rank($volume)", p);
  for (std::size_t t = 0; t < 30; ++t) {
    double s = 0;
    for (double v : m.row(t)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      s += v;
    }
    CHECK(s / 11 == doctest::Approx(0.5).epsilon(1e-12));
  }
}
