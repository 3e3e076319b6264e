#include <deque>

#include "doctest.h"

#include "dagalpha/error.hpp"
#include "dagalpha/generator.hpp"

using namespace dagalpha;
using nlohmann::json;

namespace {

// Replays canned replies in order and records every request.
class ScriptedProvider final : public ChatProvider {
 public:
  explicit ScriptedProvider(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}
  std::string complete(const ChatRequest& request) override {
    requests.push_back(request);
    REQUIRE_FALSE(replies_.empty());
    std::string r = replies_.front();
    replies_.pop_front();
    return r;
  }
  std::vector<ChatRequest> requests;

 private:
  std::deque<std::string> replies_;
};

RetryPolicy fast_policy() {
  RetryPolicy p;
  p.backoff = std::chrono::milliseconds(1);
  return p;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

struct Lineage {
  FactorGraph graph;
  NodeId root, mid, leaf;
  Lineage() {
    root = graph.insert_node(parse_expr("Div($close, $open)"), "intraday move", std::nullopt, 0.1);
    mid = graph.insert_node(parse_expr("TsMean(Div($close, $open), 5)"), "smoothed move", root, 0.2);
    leaf = graph.insert_node(parse_expr("Rank(TsMean(Div($close, $open), 5))"), "ranked", mid, 0.3);
  }
};

json strategies_reply(int n) {
  json arr = json::array();
  for (int i = 0; i < n; ++i) arr.push_back("strategy " + std::to_string(i + 1));
  return json{{"strategies", arr}};
}

}  // namespace

TEST_CASE("fill_template only replaces known keys") {
  CHECK(fill_template("a {x} {y} {", {{"x", "1"}}) == "a 1 {y} {");
  CHECK(fill_template("{\"k\": [\"{x}\"]}", {{"x", "v"}}) == "{\"k\": [\"v\"]}");
}

TEST_CASE("trace rendering") {
  Lineage l;
  CHECK(render_trace(l.graph.trace(l.root)) == std::string(kEmptyTrace));
  CHECK(render_trace({}) == std::string(kEmptyTrace));
  CHECK(render_trace(l.graph.trace(l.leaf)) ==
        "\ndepth 0: Div($close, $open) — intraday move"
        "\ndepth 1: TsMean(Div($close, $open), 5) — smoothed move");
}

TEST_CASE("prompt assembly") {
  Lineage l;
  ScriptedProvider provider({});
  ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
  Generator gen(client, {});
  const auto& prompts = default_prompts();
  REQUIRE_FALSE(prompts.operators.empty());

  const ChatRequest s = gen.strategy_request(l.graph.node(l.leaf), l.graph.trace(l.leaf), "momentum");
  const std::string st = s.system + "\n" + s.user_text();
  CHECK(count_of(st, prompts.operators) == 1);
  CHECK(s.stage == "strategy");
  CHECK(s.system == prompts.system);
  CHECK(st.find("Rank(TsMean(Div($close, $open), 5))") != std::string::npos);
  CHECK(st.find("depth 1: TsMean(Div($close, $open), 5) — smoothed move") != std::string::npos);
  CHECK(st.find("momentum") != std::string::npos);
  for (const char* key : {"{topic}", "{num}", "{expressions}", "{explanations}", "{traces}"}) {
    CHECK(st.find(key) == std::string::npos);
  }

  const ChatRequest r = gen.strategy_request(l.graph.node(l.root), l.graph.trace(l.root), "t");
  CHECK(r.user_text().find(std::string(kEmptyTrace)) != std::string::npos);

  const ChatRequest e =
      gen.execution_request(l.graph.node(l.mid), l.graph.trace(l.mid), "t", {"first idea", "second idea"});
  const std::string et = e.system + "\n" + e.user_text();
  CHECK(e.stage == "execution");
  CHECK(count_of(et, prompts.operators) == 1);
  CHECK(et.find("\n1. first idea\n2. second idea") != std::string::npos);
  CHECK(et.find("{strategies}") == std::string::npos);
  CHECK(et.find("should be 5") != std::string::npos);
}

TEST_CASE("strategy count is enforced") {
  Lineage l;
  const auto& parent = l.graph.node(l.root);
  const auto trace = l.graph.trace(l.root);

  SUBCASE("extra strategies are cut") {
    ScriptedProvider provider({strategies_reply(7).dump()});
    ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
    Generator gen(client, {});
    const auto s = gen.propose_strategies(parent, trace, "t");
    REQUIRE(s.size() == 5);
    CHECK(s.front() == "strategy 1");
    CHECK(s.back() == "strategy 5");
    CHECK(provider.requests.size() == 1);
  }
  SUBCASE("a short list is re-asked once") {
    ScriptedProvider provider({strategies_reply(2).dump(), strategies_reply(5).dump()});
    ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
    Generator gen(client, {});
    CHECK(gen.propose_strategies(parent, trace, "t").size() == 5);
    CHECK(provider.requests.size() == 2);
  }
  SUBCASE("a still-short list is accepted") {
    ScriptedProvider provider({strategies_reply(3).dump(), strategies_reply(1).dump()});
    ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
    Generator gen(client, {});
    CHECK(gen.propose_strategies(parent, trace, "t").size() == 3);
    CHECK(provider.requests.size() == 2);
  }
  SUBCASE("no strategies at all") {
    ScriptedProvider provider({strategies_reply(0).dump(), strategies_reply(0).dump()});
    ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
    Generator gen(client, {});
    CHECK_THROWS_AS(gen.propose_strategies(parent, trace, "t"), GenerationFailure);
  }
  SUBCASE("missing array") {
    ScriptedProvider provider({R"({"ideas": []})"});
    ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
    Generator gen(client, {});
    CHECK_THROWS_AS(gen.propose_strategies(parent, trace, "t"), GenerationFailure);
  }
}

TEST_CASE("synthesis prefers the fixed form and drops unparseable candidates") {
  Lineage l;
  const json reply = {
      {"expressions", {"Add($close, $open)", "Sub($close $open)", "Mul($close)", "Abs($volume)"}},
      {"expressions_fixed", {"Add($close, $open)", "Sub($close, $open)", "Mul($close)", "Abs(($volume)"}},
      {"explanations", {"e1", "e2", "e3", "e4"}},
  };
  ScriptedProvider provider({reply.dump()});
  ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
  Generator gen(client, {});
  const auto out = gen.synthesize(l.graph.node(l.mid), {"s1", "s2", "s3", "s4"}, l.graph.trace(l.mid), "t");
  REQUIRE(out.candidates.size() == 3);
  CHECK(render(out.candidates[0].expr) == "Add($close, $open)");
  CHECK(out.candidates[0].notes.empty());
  CHECK(render(out.candidates[1].expr) == "Sub($close, $open)");
  CHECK(out.candidates[1].raw_text == "Sub($close, $open)");
  CHECK(out.candidates[1].notes == std::vector<std::string>{"used expressions_fixed"});
  CHECK(out.candidates[1].explanation == "e2");
  CHECK(out.candidates[1].strategy == "s2");
  // The fixed form is broken here, so the raw one is used.
  CHECK(render(out.candidates[2].expr) == "Abs($volume)");
  CHECK(out.candidates[2].explanation == "e4");
  for (const auto& c : out.candidates) CHECK(c.parent == l.mid);
  REQUIRE(out.dropped.size() == 1);
  CHECK(out.dropped[0].text == "Mul($close)");
  CHECK_FALSE(out.dropped[0].reason.empty());
}

TEST_CASE("synthesis caps at m and requires its arrays") {
  Lineage l;
  json many = {{"expressions", json::array()}, {"expressions_fixed", json::array()}, {"explanations", json::array()}};
  for (int w = 1; w <= 8; ++w) {
    const std::string e = "TsMean($close, " + std::to_string(w) + ")";
    many["expressions"].push_back(e);
    many["expressions_fixed"].push_back(e);
    many["explanations"].push_back("x");
  }
  {
    ScriptedProvider provider({many.dump()});
    ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
    Generator gen(client, {});
    CHECK(gen.synthesize(l.graph.node(l.root), {"s"}, l.graph.trace(l.root), "t").candidates.size() == 5);
  }
  {
    ScriptedProvider provider({R"j({"expressions": ["Abs($close)"], "explanations": ["x"]})j"});
    ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
    Generator gen(client, {});
    CHECK_THROWS_AS(gen.synthesize(l.graph.node(l.root), {"s"}, l.graph.trace(l.root), "t"), GenerationFailure);
  }
  {
    ScriptedProvider provider({});
    ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
    Generator gen(client, {});
    CHECK_THROWS_AS(gen.synthesize(l.graph.node(l.root), {}, l.graph.trace(l.root), "t"), ArgumentError);
  }
}

TEST_CASE("screening") {
  Lineage l;
  const NodeId gone = l.graph.insert_node(parse_expr("Abs($volume)"), "", l.root, -1.0);
  l.graph.set_capacity(3);
  REQUIRE(l.graph.evict_to_capacity() == std::vector<NodeId>{gone});

  auto cand = [](const std::string& text) {
    CandidateFactor c;
    c.expr = parse_expr(text);
    c.raw_text = text;
    return c;
  };
  std::string long_text = "$close";
  for (int i = 0; i < 40; ++i) long_text = "Abs(" + long_text + ")";
  REQUIRE(node_count(parse_expr(long_text)) == 41);

  LintOptions opts;
  opts.float_whitelist = default_float_whitelist();
  const auto out = screen({cand("Abs($volume)"), cand(long_text), cand("Add($close, 1.0)"),
                           cand("Add($close, 0.37)"), cand("Div($close, $open)"), cand("Add($close, 1.0)"),
                           cand("Add($close, $open)")},
                          opts, l.graph);
  REQUIRE(out.kept.size() == 2);
  CHECK(render(out.kept[0].expr) == "Add($close, 1.0)");
  CHECK(render(out.kept[1].expr) == "Add($close, $open)");
  REQUIRE(out.rejected.size() == 5);
  CHECK(out.rejected[0].reason == "duplicate of an existing node");
  CHECK(out.rejected[1].reason.find("length") != std::string::npos);
  CHECK(out.rejected[2].reason.find("float_whitelist") != std::string::npos);
  CHECK(out.rejected[3].reason == "duplicate of an existing node");
  CHECK(out.rejected[4].reason == "duplicate within the batch");
}

TEST_CASE("mock pipeline is deterministic") {
  Lineage l;
  auto run = [&](std::uint64_t seed) {
    MockChatOptions opts;
    opts.seed = seed;
    opts.mutation_table = {"Div($vwap, $open)", "Sub($high, $low)"};
    MockChatProvider provider(opts);
    ChatClient client(provider, fast_policy(), std::make_shared<InFlightGate>(1));
    Generator gen(client, {});
    const auto& parent = l.graph.node(l.mid);
    const auto trace = l.graph.trace(l.mid);
    const auto strategies = gen.propose_strategies(parent, trace, "t");
    CHECK(strategies.size() == 5);
    std::vector<std::string> out;
    for (const auto& c : gen.synthesize(parent, strategies, trace, "t").candidates) out.push_back(render(c.expr));
    return out;
  };
  const auto a = run(9), b = run(9);
  CHECK_FALSE(a.empty());
  CHECK(a == b);
}
