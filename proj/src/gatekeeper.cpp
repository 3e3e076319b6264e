#include "dagalpha/gatekeeper.hpp"

#include <algorithm>
#include <cmath>

#include "dagalpha/error.hpp"

namespace dagalpha {

std::string_view branch_name(AdmissionBranch b) {
  switch (b) {
    case AdmissionBranch::improvement: return "improvement";
    case AdmissionBranch::novelty: return "novelty";
    case AdmissionBranch::none: break;
  }
  return "none";
}

double quality_gain(double quality, double parent_quality, double eps_q) {
  return (quality - parent_quality) / std::max(parent_quality, eps_q);
}

AdmissionDecision admit(double quality, double parent_quality, double max_abs_pool_corr,
                        const AdmissionThresholds& t) {
  if (!(t.tau_q > 0.0)) throw ConfigError("tau_q must be positive");
  if (!(t.tau_d > 0.0 && t.tau_d <= 1.0)) throw ConfigError("tau_d must lie in (0, 1]");
  AdmissionDecision d;
  d.quality = quality;
  d.gain = quality_gain(quality, parent_quality, t.eps_q);
  d.max_abs_pool_corr = std::isnan(max_abs_pool_corr) ? 0.0 : max_abs_pool_corr;
  if (quality > t.tau_q) {
    if (d.gain > 0.0) {
      d.branch = AdmissionBranch::improvement;
    } else if (d.max_abs_pool_corr < t.tau_d) {
      d.branch = AdmissionBranch::novelty;
    }
  }
  d.admitted = d.branch != AdmissionBranch::none;
  return d;
}

}  // namespace dagalpha
