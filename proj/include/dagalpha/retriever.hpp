#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dagalpha/factor_store.hpp"
#include "dagalpha/graph.hpp"

namespace dagalpha {

struct RetrieverConfig {
  double gamma = 0.05;  ///< depth penalty rate
  double omega = 0.10;  ///< retrieval penalty rate
  std::size_t k = 3;    ///< parents per iteration
  double eps_q = 1e-6;  ///< quality floor in gain ratios
};

/// Throws ConfigError unless gamma and omega lie in [0, 1) and k >= 1.
void validate(const RetrieverConfig& config);

struct PoolStats {
  double mean = 0.0;
  double std = 0.0;  ///< population std of active-pool quality
};

PoolStats pool_quality_stats(const FactorGraph& graph);

struct ScoreBreakdown {
  double z = 0.0;
  double quality_term = 0.0;  ///< logistic(z)
  double depth_penalty = 1.0;
  double retrieval_penalty = 1.0;
  // leaf components
  double val_div = kNaN;
  double sem_div = kNaN;
  double syn_div = kNaN;
  // non-leaf components
  double gain = kNaN;
  double spar_pc = kNaN;
  double spar_cc = kNaN;
};

struct RetrievalScore {
  NodeId id = 0;
  double prior = 0.0;
  double likelihood = 0.0;
  double total = 0.0;
  bool is_leaf = true;
  ScoreBreakdown breakdown;
};

double logistic(double x);

/// logistic((q - mu) / sd) * (1 - gamma)^depth * (1 - omega)^k; z = 0 when sd = 0.
double prior(double quality, int depth, int retrievals, const PoolStats& stats, double gamma,
             double omega, ScoreBreakdown* breakdown = nullptr);

/// 1 - |mean corr|, clamped to [0, 1]. Undefined correlations count as 0.
double value_diversity(std::span<const double> corrs);
/// logistic(1 - mean cosine similarity).
double semantic_diversity(std::span<const double> cosines);
/// Mean syntactic distance.
double syntactic_diversity(std::span<const double> distances);

/// Mean percentage quality gain of the children, floored at 0.
double parent_gain(double parent_quality, std::span<const double> child_qualities, double eps_q);
/// 1 - mean corr, clamped to [0, 2]. Undefined correlations count as 0.
double sparsity(std::span<const double> corrs);

/// ValDiv * SemDiv * SynDiv against the active pool excluding the node; 1 for an
/// empty comparison pool.
double leaf_likelihood(const FactorGraph& graph, const FactorStore& store, NodeId id,
                       ScoreBreakdown* breakdown = nullptr);

/// Gain * Spar_pc * Spar_cc over every child ever admitted.
double nonleaf_likelihood(const FactorGraph& graph, const FactorStore& store, NodeId id,
                          double eps_q, ScoreBreakdown* breakdown = nullptr);

/// Scores every active node; sorted by total desc, then quality desc, then id.
std::vector<RetrievalScore> score_pool(const FactorGraph& graph, const FactorStore& store,
                                       const RetrieverConfig& config);

struct Selection {
  std::vector<RetrievalScore> scores;  ///< every active node, ranked
  std::vector<NodeId> selected;
};

/// Picks the top min(k, |active|) nodes and records a retrieval on each.
Selection select_parents(FactorGraph& graph, const FactorStore& store, const RetrieverConfig& config);

}  // namespace dagalpha
