#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"

#include "dagalpha/backtest.hpp"
#include "dagalpha/error.hpp"

using namespace dagalpha;

namespace {

Matrix flat_prices(std::size_t T, std::size_t N) { return Matrix(T, N, 10.0); }

Matrix random_signal(std::size_t T, std::size_t N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix m(T, N);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
  return m;
}

Matrix random_prices(std::size_t T, std::size_t N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix m(T, N);
  for (std::size_t a = 0; a < N; ++a) {
    double p = 20.0;
    for (std::size_t t = 0; t < T; ++t) {
      p *= 1.0 + 0.02 * z(rng);
      m(t, a) = p;
    }
  }
  return m;
}

}  // namespace

TEST_CASE("single winner with one tranche") {
  const std::size_t T = 30;
  Matrix close(T, 5, 10.0), signal(T, 5, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    close(t, 0) = 10.0 * std::pow(1.01, static_cast<double>(t));
    signal(t, 0) = 1.0;
  }
  BacktestConfig c;
  c.hold = 1;
  c.cost = 0.0;
  const auto r = simulate(signal, close, c);
  CHECK(r.daily_returns[0] == 0.0);
  for (std::size_t t = 1; t < T; ++t) CHECK(r.daily_returns[t] == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("cost drag on flat prices") {
  BacktestConfig c;
  c.hold = 20;
  c.cost = 0.001;
  const auto r = simulate(random_signal(400, 10, 1), flat_prices(400, 10), c);
  CHECK(std::fabs(r.perf.ar - -0.0126) <= 1e-6);
}

TEST_CASE("all-NaN signal never trades") {
  const auto r = simulate(Matrix(50, 10), random_prices(50, 10, 2));
  for (double x : r.daily_returns) CHECK(x == 0.0);
  CHECK(r.perf.mdd == 0.0);
}

TEST_CASE("too few valid assets leaves the tranche in cash") {
  Matrix signal(10, 10);
  for (std::size_t t = 0; t < 10; ++t) signal(t, 0) = signal(t, 1) = 1.0;
  const auto r = simulate(signal, random_prices(10, 10, 3));
  CHECK(r.cash_tranches == 10);
  for (double x : r.daily_returns) CHECK(x == 0.0);
}

TEST_CASE("drawdown") {
  const std::vector<double> mono = {1.0, 1.01, 1.2, 1.5};
  CHECK(max_drawdown(mono) == 0.0);
  const std::vector<double> path = {1.0, 1.1, 0.99, 1.2};
  CHECK(max_drawdown(path) == 1.0 - 0.99 / 1.1);
  CHECK(std::fabs(max_drawdown(path) - 0.1) <= 1e-15);
  std::vector<double> extended = path;
  extended.push_back(1.5);
  CHECK(max_drawdown(extended) == max_drawdown(path));
}

TEST_CASE("performance closed forms") {
  const std::vector<double> c(30, 0.002);
  const auto p = performance(c);
  CHECK(p.ar == doctest::Approx(252 * 0.002).epsilon(1e-12));
  CHECK(std::isnan(p.sr));
  CHECK(p.mdd == 0.0);
  const std::vector<double> two = {0.01, -0.01};
  const auto q = performance(two, 252, 0.0);
  CHECK(q.sr == 0.0);
  CHECK(q.mdd == doctest::Approx(0.01));
}

TEST_CASE("wealth is the product of returns") {
  const auto r = simulate(random_signal(120, 20, 4), random_prices(120, 20, 5));
  double w = 1.0;
  for (std::size_t t = 0; t < r.daily_returns.size(); ++t) {
    w *= 1.0 + r.daily_returns[t];
    CHECK(std::fabs(r.wealth[t] - w) <= 1e-12 * w);
  }
  CHECK(r.perf.mdd >= 0.0);
  CHECK(r.perf.mdd <= 1.0);
}

TEST_CASE("doubling prices leaves returns unchanged") {
  const Matrix s = random_signal(100, 15, 6);
  const Matrix p = random_prices(100, 15, 7);
  Matrix p2 = p;
  for (std::size_t i = 0; i < p2.size(); ++i) p2.data()[i] *= 2.0;
  const auto a = simulate(s, p), b = simulate(s, p2);
  for (std::size_t t = 0; t < 100; ++t) CHECK(a.daily_returns[t] == doctest::Approx(b.daily_returns[t]).epsilon(1e-12));
}

TEST_CASE("single-asset geometric series") {
  const double g = 0.003;
  const std::size_t T = 200, H = 10;
  Matrix close(T, 1), signal(T, 1, 1.0);
  for (std::size_t t = 0; t < T; ++t) close(t, 0) = 50.0 * std::pow(1.0 + g, static_cast<double>(t));
  BacktestConfig c;
  c.top_frac = 1.0;
  c.hold = H;
  c.cost = 0.0;
  const auto r = simulate(signal, close, c);
  // Once every tranche is open the portfolio earns the asset's daily return.
  const std::vector<double> steady(r.daily_returns.begin() + H, r.daily_returns.end());
  CHECK(performance(steady).ar == doctest::Approx(252 * g).epsilon(1e-10));
  for (std::size_t t = 1; t < H; ++t)
    CHECK(r.daily_returns[t] == doctest::Approx(g * static_cast<double>(t) / H).epsilon(1e-10));
}

TEST_CASE("ties go to the lower asset index") {
  Matrix close(3, 10, 10.0), signal(3, 10, 0.0);
  for (std::size_t t = 0; t < 3; ++t) {
    close(t, 0) = 10.0 * (1.0 + 0.1 * static_cast<double>(t));
    close(t, 1) = 10.0 * (1.0 + 0.2 * static_cast<double>(t));
  }
  BacktestConfig c;
  c.hold = 1;
  c.cost = 0.0;
  c.top_frac = 0.1;
  const auto r = simulate(signal, close, c);
  CHECK(r.daily_returns[1] == doctest::Approx(0.1));
}

TEST_CASE("config validation") {
  BacktestConfig c;
  c.hold = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = BacktestConfig{};
  c.top_frac = 1.5;
  CHECK_THROWS_AS(validate(c), ConfigError);
}
