#include <random>
#include <sstream>

#include "doctest.h"

#include "dagalpha/error.hpp"
#include "dagalpha/graph.hpp"
#include "helpers.hpp"

using namespace dagalpha;

namespace {

Expr ex(const std::string& s) { return parse_expr(s); }

Expr numbered(int i) { return ex("TsMean($close, " + std::to_string(i + 1) + ")"); }

void check_same(const FactorGraph& a, const FactorGraph& b) {
  REQUIRE(a.all_ids() == b.all_ids());
  CHECK(a.active_ids() == b.active_ids());
  CHECK(a.next_id() == b.next_id());
  for (NodeId id : a.all_ids()) {
    const auto &x = a.node(id), &y = b.node(id);
    CHECK(x.expr == y.expr);
    CHECK(x.explanation == y.explanation);
    CHECK(x.quality == y.quality);
    CHECK(x.depth == y.depth);
    CHECK(x.retrievals == y.retrievals);
    CHECK(x.parent == y.parent);
    CHECK(x.active == y.active);
    CHECK(x.created_iteration == y.created_iteration);
    CHECK(a.children(id) == b.children(id));
  }
}

FactorGraph random_graph(std::size_t n, std::uint64_t seed, std::size_t capacity) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> q(0.0, 1.0);
  FactorGraph g(capacity);
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<NodeId> parent;
    if (i > 2) {
      const auto ids = g.all_ids();
      parent = ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)];
    }
    const NodeId id = g.insert_node(numbered(static_cast<int>(i)), "n" + std::to_string(i), parent, q(rng),
                                    static_cast<int>(i / 5));
    if (i % 7 == 0) g.record_retrieval(id);
    g.evict_to_capacity();
  }
  return g;
}

}  // namespace

TEST_CASE("insertion and depth") {
  FactorGraph g;
  const NodeId s = g.insert_node(ex("$close"), "seed", std::nullopt, 0.2);
  const NodeId c = g.insert_node(ex("Rank($close)"), "child", s, 0.3, 1);
  CHECK(g.node(s).depth == 0);
  CHECK(g.node(c).depth == 1);
  CHECK(g.node(c).retrievals == 0);
  CHECK(g.node(c).active);
  CHECK(g.children(s) == std::vector<NodeId>{c});
  CHECK_THROWS_AS(g.insert_node(ex("$open"), "", NodeId{99}, 0.1), NotFoundError);
  CHECK_THROWS_AS(g.insert_node(ex("Rank( $close )"), "", s, 0.1), DuplicateError);
}

TEST_CASE("trace") {
  FactorGraph g;
  const NodeId a = g.insert_node(ex("$close"), "", std::nullopt, 0.1);
  const NodeId b = g.insert_node(ex("Rank($close)"), "", a, 0.1);
  const NodeId c = g.insert_node(ex("Abs(Rank($close))"), "", b, 0.1);
  CHECK(g.trace(a).size() == 1);
  const auto t = g.trace(c);
  REQUIRE(t.size() == 3);
  CHECK(t[0]->id == a);
  CHECK(t[1]->id == b);
  CHECK(t[2]->id == c);
  CHECK_THROWS_AS(g.trace(42), NotFoundError);
}

TEST_CASE("eviction") {
  SUBCASE("over capacity evicts the weakest") {
    FactorGraph g(50);
    for (int i = 0; i < 51; ++i) g.insert_node(numbered(i), "", std::nullopt, 0.5 + 0.001 * ((i * 37) % 51));
    NodeId weakest = 0;
    double q = 10;
    for (NodeId id : g.active_ids())
      if (g.node(id).quality < q) q = g.node(id).quality, weakest = id;
    CHECK(g.evict_lowest() == weakest);
    CHECK(g.active_size() == 50);
    CHECK_FALSE(g.node(weakest).active);
    CHECK_FALSE(g.evict_lowest());
  }
  SUBCASE("ties go to the older node, then the smaller id") {
    FactorGraph g(1);
    const NodeId young = g.insert_node(ex("$open"), "", std::nullopt, 0.2, 5);
    const NodeId old = g.insert_node(ex("$close"), "", std::nullopt, 0.2, 1);
    CHECK(g.evict_lowest() == old);
    CHECK(g.node(young).active);
    FactorGraph h(1);
    const NodeId first = h.insert_node(ex("$open"), "", std::nullopt, 0.2, 1);
    h.insert_node(ex("$close"), "", std::nullopt, 0.2, 1);
    CHECK(h.evict_lowest() == first);
  }
  SUBCASE("evicted parent stays in the lineage") {
    FactorGraph g(1);
    const NodeId p = g.insert_node(ex("$close"), "", std::nullopt, 0.1);
    const NodeId c = g.insert_node(ex("Rank($close)"), "", p, 0.9);
    CHECK(g.evict_to_capacity() == std::vector<NodeId>{p});
    const auto t = g.trace(c);
    CHECK(t.size() == 2);
    CHECK(t[0]->id == p);
    CHECK(g.contains_expr("$close"));
    CHECK_FALSE(g.contains_expr("$close", true));
    // An evicted expression may re-enter the pool as a new node.
    CHECK_NOTHROW(g.insert_node(ex("$close"), "", std::nullopt, 0.5));
  }
}

TEST_CASE("persistence round trips") {
  SUBCASE("empty") {
    FactorGraph g;
    check_same(g, FactorGraph::from_json(g.to_json()));
  }
  SUBCASE("three-node chain") {
    FactorGraph g(2);
    const NodeId a = g.insert_node(ex("$close"), "a", std::nullopt, 0.1);
    const NodeId b = g.insert_node(ex("Rank($close)"), "b", a, 0.2, 1);
    g.insert_node(ex("Abs(Rank($close))"), "c", b, 0.3, 2);
    g.evict_to_capacity();
    std::stringstream ss;
    g.save(ss);
    const FactorGraph h = FactorGraph::load(ss, 2);
    check_same(g, h);
    CHECK_FALSE(h.node(a).active);
  }
  SUBCASE("random 200-node graph") {
    const FactorGraph g = random_graph(200, 7, 50);
    const FactorGraph h = FactorGraph::from_json(nlohmann::json::parse(g.to_json().dump()), 50);
    check_same(g, h);
    CHECK(g.to_json().dump() == h.to_json().dump());
  }
}

TEST_CASE("malformed documents are rejected") {
  using nlohmann::json;
  CHECK_THROWS_AS(FactorGraph::from_json(json::object()), SchemaError);
  CHECK_THROWS_AS(FactorGraph::from_json(json{{"schema_version", 2}, {"nodes", json::array()}}), SchemaError);
  json bad_parent = FactorGraph().to_json();
  bad_parent["nodes"].push_back({{"id", 2}, {"expr", "$close"}, {"explanation", ""}, {"quality", 0.1},
                                 {"depth", 1}, {"k", 0}, {"parent_id", 1}, {"active", true},
                                 {"created_iteration", 0}});
  CHECK_THROWS_AS(FactorGraph::from_json(bad_parent), SchemaError);
  json bad_expr = FactorGraph().to_json();
  bad_expr["nodes"].push_back({{"id", 1}, {"expr", "Add($close)"}, {"explanation", ""}, {"quality", 0.1},
                               {"depth", 0}, {"k", 0}, {"parent_id", nullptr}, {"active", true},
                               {"created_iteration", 0}});
  CHECK_THROWS_AS(FactorGraph::from_json(bad_expr), SchemaError);
}

TEST_CASE("structural invariants on random graphs") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FactorGraph g = random_graph(120, seed, 30);
    CHECK(g.active_size() <= 30);
    std::size_t edges = 0, roots = 0;
    for (NodeId id : g.all_ids()) {
      const auto& n = g.node(id);
      edges += g.children(id).size();
      roots += n.parent ? 0 : 1;
      const auto t = g.trace(id);
      CHECK(t.size() == static_cast<std::size_t>(n.depth) + 1);
      CHECK(t.back()->id == id);
      CHECK_FALSE(t.front()->parent);
    }
    CHECK(edges == g.size() - roots);
  }
}

TEST_CASE("file save is atomic and loadable") {
  const auto dir = dagalpha::testing::scratch_dir("graph");
  const FactorGraph g = random_graph(20, 3, 10);
  const std::string path = (dir / "g.json").string();
  g.save_file(path);
  check_same(g, FactorGraph::load_file(path, 10));
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
}
