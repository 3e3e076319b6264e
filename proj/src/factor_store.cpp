#include "dagalpha/factor_store.hpp"

#include <cmath>

#include "dagalpha/error.hpp"
#include "dagalpha/metrics.hpp"

namespace dagalpha {

void FactorStore::put(NodeId id, Matrix values, std::vector<double> embedding, double train_ic) {
  if (train_first_ + train_count_ > values.rows()) {
    throw ArgumentError("training rows exceed the factor matrix");
  }
  std::lock_guard lock(mu_);
  entries_[id] = Entry{std::move(values), std::move(embedding), train_ic};
  for (auto it = corr_cache_.begin(); it != corr_cache_.end();) {
    if (it->first.first == id || it->first.second == id) {
      it = corr_cache_.erase(it);
    } else {
      ++it;
    }
  }
}

const FactorStore::Entry& FactorStore::entry(NodeId id) const {
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw NotFoundError("no stored values for node " + std::to_string(id));
  return it->second;
}

MatrixView FactorStore::train_values(NodeId id) const {
  return entry(id).values.view().slice_rows(train_first_, train_count_);
}

double FactorStore::corr(NodeId a, NodeId b) const {
  const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  {
    std::lock_guard lock(mu_);
    const auto it = corr_cache_.find(key);
    if (it != corr_cache_.end()) return it->second;
  }
  const double c = factor_corr(train_values(key.first), train_values(key.second));
  std::lock_guard lock(mu_);
  corr_cache_.emplace(key, c);
  return c;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) return kNaN;
  return dot / std::sqrt(na * nb);
}

}  // namespace dagalpha
