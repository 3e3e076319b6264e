#pragma once

#include <map>
#include <mutex>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dagalpha/graph.hpp"
#include "dagalpha/matrix.hpp"

namespace dagalpha {

/// Evaluated values and explanation embeddings of graph nodes, plus memoized
/// training-period correlations between them.
class FactorStore {
 public:
  /// `train_first` and `train_count` select the rows used by train_values()
  /// and corr().
  FactorStore(std::size_t train_first, std::size_t train_count)
      : train_first_(train_first), train_count_(train_count) {}

  void put(NodeId id, Matrix values, std::vector<double> embedding, double train_ic = kNaN);
  bool contains(NodeId id) const { return entries_.count(id) != 0; }

  MatrixView values(NodeId id) const { return entry(id).values; }
  MatrixView train_values(NodeId id) const;
  std::span<const double> embedding(NodeId id) const { return entry(id).embedding; }
  double train_ic(NodeId id) const { return entry(id).train_ic; }

  /// factor_corr of two stored nodes over the training rows; NaN when no
  /// training date is valid. Thread-safe.
  double corr(NodeId a, NodeId b) const;

  std::size_t train_first() const { return train_first_; }
  std::size_t train_count() const { return train_count_; }

 private:
  struct Entry {
    Matrix values;
    std::vector<double> embedding;
    double train_ic = kNaN;
  };
  const Entry& entry(NodeId id) const;

  std::size_t train_first_;
  std::size_t train_count_;
  std::unordered_map<NodeId, Entry> entries_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<NodeId, NodeId>, double> corr_cache_;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace dagalpha
