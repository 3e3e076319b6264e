#pragma once

#include <string_view>

namespace dagalpha {

enum class AdmissionBranch { none, improvement, novelty };

std::string_view branch_name(AdmissionBranch b);

struct AdmissionDecision {
  bool admitted = false;
  AdmissionBranch branch = AdmissionBranch::none;
  double quality = 0.0;
  double gain = 0.0;
  double max_abs_pool_corr = 0.0;
};

struct AdmissionThresholds {
  double tau_q = 0.10;
  double tau_d = 0.70;
  double eps_q = 1e-6;
};

/// Relative quality improvement over the parent, guarded at zero parent quality.
double quality_gain(double quality, double parent_quality, double eps_q = 1e-6);

/// Admits when quality clears tau_q and either improves on the parent or stays
/// below tau_d correlation with the pool. An undefined (empty-pool) correlation
/// counts as 0. Improvement wins when both branches hold.
AdmissionDecision admit(double quality, double parent_quality, double max_abs_pool_corr,
                        const AdmissionThresholds& t = {});

}  // namespace dagalpha
