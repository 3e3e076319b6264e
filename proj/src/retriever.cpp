#include "dagalpha/retriever.hpp"

#include <algorithm>
#include <cmath>

#include "dagalpha/error.hpp"

namespace dagalpha {

namespace {

double mean_of(std::span<const double> xs, bool nan_as_zero) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += (nan_as_zero && std::isnan(x)) ? 0.0 : x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

void validate(const RetrieverConfig& config) {
  if (!(config.gamma >= 0.0 && config.gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(config.omega >= 0.0 && config.omega < 1.0)) throw ConfigError("omega must lie in [0, 1)");
  if (config.k < 1) throw ConfigError("k must be at least 1");
  if (!(config.eps_q > 0.0)) throw ConfigError("eps_q must be positive");
}

PoolStats pool_quality_stats(const FactorGraph& graph) {
  PoolStats s;
  const auto ids = graph.active_ids();
  if (ids.empty()) return s;
  for (NodeId id : ids) s.mean += graph.node(id).quality;
  s.mean /= static_cast<double>(ids.size());
  double ss = 0.0;
  for (NodeId id : ids) {
    const double d = graph.node(id).quality - s.mean;
    ss += d * d;
  }
  s.std = std::sqrt(ss / static_cast<double>(ids.size()));
  return s;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double prior(double quality, int depth, int retrievals, const PoolStats& stats, double gamma,
             double omega, ScoreBreakdown* breakdown) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(omega >= 0.0 && omega < 1.0)) throw ConfigError("omega must lie in [0, 1)");
  const double z = stats.std > 0.0 ? (quality - stats.mean) / stats.std : 0.0;
  const double q = logistic(z);
  const double dp = std::pow(1.0 - gamma, depth);
  const double rp = std::pow(1.0 - omega, retrievals);
  if (breakdown != nullptr) {
    breakdown->z = z;
    breakdown->quality_term = q;
    breakdown->depth_penalty = dp;
    breakdown->retrieval_penalty = rp;
  }
  return q * dp * rp;
}

double value_diversity(std::span<const double> corrs) {
  return std::clamp(1.0 - std::fabs(mean_of(corrs, true)), 0.0, 1.0);
}

double semantic_diversity(std::span<const double> cosines) {
  return logistic(1.0 - mean_of(cosines, true));
}

double syntactic_diversity(std::span<const double> distances) { return mean_of(distances, false); }

double parent_gain(double parent_quality, std::span<const double> child_qualities, double eps_q) {
  if (child_qualities.empty()) return 0.0;
  const double denom = std::max(parent_quality, eps_q);
  double sum = 0.0;
  for (double q : child_qualities) sum += (q - parent_quality) / denom;
  return std::max(0.0, sum / static_cast<double>(child_qualities.size()));
}

double sparsity(std::span<const double> corrs) {
  return std::clamp(1.0 - mean_of(corrs, true), 0.0, 2.0);
}

double leaf_likelihood(const FactorGraph& graph, const FactorStore& store, NodeId id,
                       ScoreBreakdown* breakdown) {
  const FactorNode& self = graph.node(id);
  std::vector<double> corrs, cosines, distances;
  for (NodeId other : graph.active_ids()) {
    if (other == id) continue;
    corrs.push_back(store.corr(id, other));
    cosines.push_back(cosine_similarity(store.embedding(id), store.embedding(other)));
    distances.push_back(syntactic_distance(self.expr, graph.node(other).expr));
  }
  if (corrs.empty()) {
    if (breakdown != nullptr) {
      breakdown->val_div = breakdown->sem_div = breakdown->syn_div = 1.0;
    }
    return 1.0;
  }
  const double v = value_diversity(corrs);
  const double s = semantic_diversity(cosines);
  const double x = syntactic_diversity(distances);
  if (breakdown != nullptr) {
    breakdown->val_div = v;
    breakdown->sem_div = s;
    breakdown->syn_div = x;
  }
  return v * s * x;
}

double nonleaf_likelihood(const FactorGraph& graph, const FactorStore& store, NodeId id,
                          double eps_q, ScoreBreakdown* breakdown) {
  const FactorNode& self = graph.node(id);
  const auto& kids = graph.children(id);
  std::vector<double> qualities, pc, cc;
  for (NodeId c : kids) {
    qualities.push_back(graph.node(c).quality);
    pc.push_back(store.corr(id, c));
  }
  for (std::size_t i = 0; i < kids.size(); ++i) {
    for (std::size_t j = i + 1; j < kids.size(); ++j) cc.push_back(store.corr(kids[i], kids[j]));
  }
  const double g = parent_gain(self.quality, qualities, eps_q);
  const double spc = sparsity(pc);
  const double scc = kids.size() < 2 ? 1.0 : sparsity(cc);
  if (breakdown != nullptr) {
    breakdown->gain = g;
    breakdown->spar_pc = spc;
    breakdown->spar_cc = scc;
  }
  return g * spc * scc;
}

std::vector<RetrievalScore> score_pool(const FactorGraph& graph, const FactorStore& store,
                                       const RetrieverConfig& config) {
  validate(config);
  const PoolStats stats = pool_quality_stats(graph);
  std::vector<RetrievalScore> scores;
  for (NodeId id : graph.active_ids()) {
    const FactorNode& n = graph.node(id);
    RetrievalScore s;
    s.id = id;
    s.is_leaf = graph.children(id).empty();
    s.prior = prior(n.quality, n.depth, n.retrievals, stats, config.gamma, config.omega, &s.breakdown);
    s.likelihood = s.is_leaf ? leaf_likelihood(graph, store, id, &s.breakdown)
                             : nonleaf_likelihood(graph, store, id, config.eps_q, &s.breakdown);
    s.total = s.prior * s.likelihood;
    scores.push_back(s);
  }
  std::sort(scores.begin(), scores.end(), [&](const RetrievalScore& a, const RetrievalScore& b) {
    if (a.total != b.total) return a.total > b.total;
    const double qa = graph.node(a.id).quality;
    const double qb = graph.node(b.id).quality;
    if (qa != qb) return qa > qb;
    return a.id < b.id;
  });
  return scores;
}

Selection select_parents(FactorGraph& graph, const FactorStore& store, const RetrieverConfig& config) {
  if (graph.active_size() == 0) throw ArgumentError("cannot select parents from an empty pool");
  Selection sel;
  sel.scores = score_pool(graph, store, config);
  const std::size_t n = std::min(config.k, sel.scores.size());
  for (std::size_t i = 0; i < n; ++i) {
    sel.selected.push_back(sel.scores[i].id);
    graph.record_retrieval(sel.scores[i].id);
  }
  return sel;
}

}  // namespace dagalpha
