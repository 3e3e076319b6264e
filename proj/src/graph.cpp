#include "dagalpha/graph.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dagalpha/error.hpp"

namespace dagalpha {

using nlohmann::json;

NodeId FactorGraph::insert_node(Expr expr, std::string explanation, std::optional<NodeId> parent,
                                double quality, int created_iteration) {
  int depth = 0;
  if (parent) {
    const auto it = nodes_.find(*parent);
    if (it == nodes_.end()) throw NotFoundError("unknown parent node " + std::to_string(*parent));
    depth = it->second.depth + 1;
  }
  const std::string canonical = render(expr);
  if (contains_expr(canonical, /*active_only=*/true)) {
    throw DuplicateError("expression already in the active pool: " + canonical);
  }
  const NodeId id = next_id_++;
  FactorNode node{id, std::move(expr), std::move(explanation), quality, depth, 0, parent, true,
                  created_iteration};
  nodes_.emplace(id, std::move(node));
  by_expr_[canonical].push_back(id);
  if (parent) children_[*parent].push_back(id);
  ++active_count_;
  return id;
}

const FactorNode& FactorGraph::node(NodeId id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw NotFoundError("unknown node " + std::to_string(id));
  return it->second;
}

FactorNode& FactorGraph::mutable_node(NodeId id) {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw NotFoundError("unknown node " + std::to_string(id));
  return it->second;
}

const std::vector<NodeId>& FactorGraph::children(NodeId id) const {
  static const std::vector<NodeId> kNone;
  if (!contains(id)) throw NotFoundError("unknown node " + std::to_string(id));
  const auto it = children_.find(id);
  return it == children_.end() ? kNone : it->second;
}

std::vector<const FactorNode*> FactorGraph::trace(NodeId id) const {
  std::vector<const FactorNode*> chain;
  const FactorNode* cur = &node(id);
  while (true) {
    chain.push_back(cur);
    if (!cur->parent) break;
    if (chain.size() > nodes_.size()) throw SchemaError("lineage cycle detected");
    cur = &node(*cur->parent);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::vector<NodeId> FactorGraph::active_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(active_count_);
  for (const auto& [id, n] : nodes_) {
    if (n.active) ids.push_back(id);
  }
  return ids;
}

std::vector<NodeId> FactorGraph::all_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(nodes_.size());
  for (const auto& [id, n] : nodes_) ids.push_back(id);
  return ids;
}

bool FactorGraph::contains_expr(const std::string& canonical, bool active_only) const {
  const auto it = by_expr_.find(canonical);
  if (it == by_expr_.end()) return false;
  if (!active_only) return !it->second.empty();
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](NodeId id) { return nodes_.at(id).active; });
}

std::optional<NodeId> FactorGraph::evict_lowest() {
  if (active_count_ <= capacity_) return std::nullopt;
  const FactorNode* victim = nullptr;
  for (const auto& [id, n] : nodes_) {
    if (!n.active) continue;
    if (victim == nullptr || n.quality < victim->quality ||
        (n.quality == victim->quality && n.created_iteration < victim->created_iteration)) {
      victim = &n;
    }
  }
  // Iteration is in ascending id order, so equal (quality, iteration) keeps the smaller id.
  mutable_node(victim->id).active = false;
  --active_count_;
  return victim->id;
}

std::vector<NodeId> FactorGraph::evict_to_capacity() {
  std::vector<NodeId> evicted;
  while (auto id = evict_lowest()) evicted.push_back(*id);
  return evicted;
}

void FactorGraph::record_retrieval(NodeId id) { ++mutable_node(id).retrievals; }

json FactorGraph::to_json() const {
  json nodes = json::array();
  for (const auto& [id, n] : nodes_) {
    nodes.push_back({
        {"id", n.id},
        {"expr", render(n.expr)},
        {"explanation", n.explanation},
        {"quality", n.quality},
        {"depth", n.depth},
        {"k", n.retrievals},
        {"parent_id", n.parent ? json(*n.parent) : json(nullptr)},
        {"active", n.active},
        {"created_iteration", n.created_iteration},
    });
  }
  return json{{"schema_version", kGraphSchemaVersion}, {"nodes", std::move(nodes)}};
}

FactorGraph FactorGraph::from_json(const json& doc, std::size_t capacity) {
  if (!doc.is_object() || !doc.contains("schema_version") || !doc.contains("nodes")) {
    throw SchemaError("graph document needs schema_version and nodes");
  }
  if (doc.at("schema_version") != kGraphSchemaVersion) {
    throw SchemaError("unsupported graph schema_version " + doc.at("schema_version").dump());
  }
  FactorGraph g(capacity);
  try {
    std::vector<FactorNode> records;
    for (const auto& r : doc.at("nodes")) {
      FactorNode n{
          r.at("id").get<NodeId>(),
          parse_expr(r.at("expr").get<std::string>()),
          r.at("explanation").get<std::string>(),
          r.at("quality").get<double>(),
          r.at("depth").get<int>(),
          r.at("k").get<int>(),
          std::nullopt,
          r.at("active").get<bool>(),
          r.at("created_iteration").get<int>(),
      };
      if (!r.at("parent_id").is_null()) n.parent = r.at("parent_id").get<NodeId>();
      records.push_back(std::move(n));
    }
    std::sort(records.begin(), records.end(),
              [](const FactorNode& a, const FactorNode& b) { return a.id < b.id; });
    for (auto& n : records) {
      if (g.nodes_.count(n.id) != 0) throw SchemaError("duplicate node id " + std::to_string(n.id));
      if (n.parent) {
        const auto it = g.nodes_.find(*n.parent);
        if (it == g.nodes_.end()) {
          throw SchemaError("node " + std::to_string(n.id) + " references a missing or later parent");
        }
        if (n.depth != it->second.depth + 1) {
          throw SchemaError("node " + std::to_string(n.id) + " has inconsistent depth");
        }
        g.children_[*n.parent].push_back(n.id);
      } else if (n.depth != 0) {
        throw SchemaError("root node " + std::to_string(n.id) + " must have depth 0");
      }
      if (n.retrievals < 0 || !(n.quality >= 0.0)) {
        throw SchemaError("node " + std::to_string(n.id) + " has invalid k or quality");
      }
      g.by_expr_[render(n.expr)].push_back(n.id);
      if (n.active) ++g.active_count_;
      g.next_id_ = std::max(g.next_id_, n.id + 1);
      g.nodes_.emplace(n.id, std::move(n));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed graph document: ") + e.what());
  } catch (const ParseError& e) {
    throw SchemaError(std::string("malformed expression in graph document: ") + e.what());
  }
  return g;
}

void FactorGraph::save(std::ostream& out) const { out << to_json().dump(2) << '\n'; }

FactorGraph FactorGraph::load(std::istream& in, std::size_t capacity) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed graph document: ") + e.what());
  }
  return from_json(doc, capacity);
}

void FactorGraph::save_file(const std::string& path) const {
  std::ostringstream out;
  save(out);
  write_file_atomic(path, out.str());
}

FactorGraph FactorGraph::load_file(const std::string& path, std::size_t capacity) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open graph file '" + path + "'");
  return load(in, capacity);
}

void write_file_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << text;
    if (!out.flush()) throw Error("cannot write '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dagalpha
