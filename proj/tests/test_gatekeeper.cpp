#include <cmath>
#include <random>

#include "doctest.h"

#include "dagalpha/gatekeeper.hpp"
#include "dagalpha/matrix.hpp"

using namespace dagalpha;

TEST_CASE("worked examples") {
  const auto a = admit(0.12, 0.10, 0.9);
  CHECK(a.admitted);
  CHECK(a.branch == AdmissionBranch::improvement);
  CHECK(a.gain == doctest::Approx(0.2));
  CHECK_FALSE(admit(0.05, 0.0, 0.0).admitted);
  const auto n = admit(0.15, 0.20, 0.5);
  CHECK(n.admitted);
  CHECK(n.branch == AdmissionBranch::novelty);
}

TEST_CASE("truth table") {
  // (q above tau_q, gain positive, corr below tau_d) -> expected branch
  struct Row {
    bool q, gain, low_corr;
    AdmissionBranch want;
  };
  const Row rows[] = {
      {false, false, false, AdmissionBranch::none}, {false, false, true, AdmissionBranch::none},
      {false, true, false, AdmissionBranch::none},  {false, true, true, AdmissionBranch::none},
      {true, false, false, AdmissionBranch::none},  {true, false, true, AdmissionBranch::novelty},
      {true, true, false, AdmissionBranch::improvement}, {true, true, true, AdmissionBranch::improvement},
  };
  for (const auto& r : rows) {
    const double q = r.q ? 0.12 : 0.08;
    const double parent = r.gain ? q - 0.01 : q + 0.01;
    const double corr = r.low_corr ? 0.5 : 0.8;
    const auto d = admit(q, parent, corr);
    CAPTURE(r.q);
    CAPTURE(r.gain);
    CAPTURE(r.low_corr);
    CHECK(d.branch == r.want);
    CHECK(d.admitted == (r.want != AdmissionBranch::none));
  }
}

TEST_CASE("boundaries are strict") {
  CHECK_FALSE(admit(0.10, 0.0, 0.0).admitted);
  CHECK_FALSE(admit(0.2, 0.2, 0.70).admitted);
  CHECK(admit(0.2, 0.2, 0.6999).admitted);
}

TEST_CASE("empty pool correlation counts as zero") {
  const auto d = admit(0.2, 0.3, kNaN);
  CHECK(d.admitted);
  CHECK(d.branch == AdmissionBranch::novelty);
}

TEST_CASE("zero parent quality uses the guard") {
  CHECK(quality_gain(0.2, 0.0) == doctest::Approx(0.2 / 1e-6));
  CHECK(admit(0.2, 0.0, 0.99).branch == AdmissionBranch::improvement);
}

TEST_CASE("monotone in quality and exact at high correlation") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.4), c(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double q = u(rng), parent = u(rng), corr = c(rng), bump = u(rng);
    if (admit(q, parent, corr).admitted) CHECK(admit(q + bump, parent, corr).admitted);
    if (corr >= 0.70) CHECK(admit(q, parent, corr).admitted == (q > 0.10 && q > parent));
  }
}

TEST_CASE("branch names") {
  CHECK(branch_name(AdmissionBranch::novelty) == "novelty");
  CHECK(branch_name(AdmissionBranch::improvement) == "improvement");
  CHECK(branch_name(AdmissionBranch::none) == "none");
}
