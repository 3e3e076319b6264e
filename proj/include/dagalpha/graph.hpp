#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "dagalpha/expr.hpp"

namespace dagalpha {

using NodeId = std::uint64_t;

struct FactorNode {
  NodeId id = 0;
  Expr expr;
  std::string explanation;
  double quality = 0.0;
  int depth = 0;
  /// Times this node was selected as a parent.
  int retrievals = 0;
  std::optional<NodeId> parent;
  bool active = true;
  int created_iteration = 0;
};

inline constexpr int kGraphSchemaVersion = 1;

/// Lineage store. Every node has at most one parent, so traces are unique.
/// Evicted nodes leave the active pool but keep their place in the lineage.
class FactorGraph {
 public:
  explicit FactorGraph(std::size_t capacity = 50) : capacity_(capacity) {}

  /// Inserts an active node with zero retrievals. Throws NotFoundError for an
  /// unknown parent and DuplicateError if an active node already has the same
  /// canonical expression.
  NodeId insert_node(Expr expr, std::string explanation, std::optional<NodeId> parent,
                     double quality, int created_iteration = 0);

  bool contains(NodeId id) const { return nodes_.count(id) != 0; }
  const FactorNode& node(NodeId id) const;
  /// Ever-admitted children, evicted ones included, in insertion order.
  const std::vector<NodeId>& children(NodeId id) const;

  /// Root-to-node chain, both ends inclusive.
  std::vector<const FactorNode*> trace(NodeId id) const;

  std::vector<NodeId> active_ids() const;
  std::vector<NodeId> all_ids() const;
  std::size_t size() const { return nodes_.size(); }
  std::size_t active_size() const { return active_count_; }

  /// Whether any node (active_only: any active node) renders to `canonical`.
  bool contains_expr(const std::string& canonical, bool active_only = false) const;

  /// Marks the weakest active node inactive if the pool is over capacity.
  /// Ties go to the oldest created_iteration, then the smallest id.
  std::optional<NodeId> evict_lowest();
  /// Evicts until the pool fits; returns the evicted ids in order.
  std::vector<NodeId> evict_to_capacity();

  void record_retrieval(NodeId id);

  std::size_t capacity() const { return capacity_; }
  void set_capacity(std::size_t capacity) { capacity_ = capacity; }
  NodeId next_id() const { return next_id_; }

  nlohmann::json to_json() const;
  /// Rebuilds indexes from a document. Extra top-level keys are ignored.
  static FactorGraph from_json(const nlohmann::json& doc, std::size_t capacity = 50);

  void save(std::ostream& out) const;
  static FactorGraph load(std::istream& in, std::size_t capacity = 50);
  void save_file(const std::string& path) const;
  static FactorGraph load_file(const std::string& path, std::size_t capacity = 50);

 private:
  FactorNode& mutable_node(NodeId id);

  std::size_t capacity_;
  std::map<NodeId, FactorNode> nodes_;
  std::unordered_map<NodeId, std::vector<NodeId>> children_;
  std::unordered_map<std::string, std::vector<NodeId>> by_expr_;
  std::size_t active_count_ = 0;
  NodeId next_id_ = 1;
};

/// Writes `text` to `path` via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace dagalpha
