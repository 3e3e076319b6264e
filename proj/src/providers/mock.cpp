#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <regex>

#include "dagalpha/error.hpp"
#include "dagalpha/expr.hpp"
#include "dagalpha/hash.hpp"
#include "dagalpha/providers.hpp"

namespace dagalpha {

using nlohmann::json;

namespace {

constexpr std::array<int, 6> kWindows = {1, 2, 3, 5, 10, 20};

const std::vector<std::string>& strategy_bank() {
  static const std::vector<std::string> bank = {
      "Replace one price field with a related price field to shift the reference level.",
      "Smooth the signal with a rolling mean to reduce day-to-day noise.",
      "Normalize cross-sectionally with Rank so only relative ordering matters.",
      "Change the lookback window to capture a different horizon.",
      "Swap the arithmetic combination to contrast the components differently.",
      "Measure time-series standing with TsRank instead of raw levels.",
      "Simplify by removing an outer transformation.",
      "Scale by a volatility estimate to compare assets on equal footing.",
      "Use a change operator to focus on momentum rather than level.",
      "Introduce a volume-based component to confirm price moves.",
  };
  return bank;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
}

double coin(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t subexpr_count(const Expr& e) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < e.arity(); ++i) n += subexpr_count(e.child(i));
  return n;
}

Expr rebuild(const Expr& e, std::vector<Expr> kids) {
  switch (e.kind()) {
    case Expr::Kind::unary: return Expr::unary(e.op(), kids[0]);
    case Expr::Kind::binary: return Expr::binary(e.op(), kids[0], kids[1]);
    case Expr::Kind::rolling1: return Expr::rolling(e.op(), kids[0], e.window());
    case Expr::Kind::rolling2: return Expr::rolling(e.op(), kids[0], kids[1], e.window());
    default: return e;
  }
}

// Replaces the pre-order `target`-th subexpression with fn(subexpression).
template <typename Fn>
Expr replace_at(const Expr& e, std::size_t& counter, std::size_t target, Fn& fn) {
  if (counter++ == target) return fn(e);
  if (e.arity() == 0) return e;
  std::vector<Expr> kids;
  for (std::size_t i = 0; i < e.arity(); ++i) kids.push_back(replace_at(e.child(i), counter, target, fn));
  return rebuild(e, std::move(kids));
}

template <typename Pred>
std::vector<std::size_t> positions(const Expr& e, Pred pred) {
  std::vector<std::size_t> out;
  std::size_t counter = 0;
  auto walk = [&](auto&& self, const Expr& x) -> void {
    if (pred(x)) out.push_back(counter);
    ++counter;
    for (std::size_t i = 0; i < x.arity(); ++i) self(self, x.child(i));
  };
  walk(walk, e);
  return out;
}

template <typename Fn>
Expr edit(const Expr& e, std::size_t target, Fn fn) {
  std::size_t counter = 0;
  return replace_at(e, counter, target, fn);
}

Op random_rolling1(std::mt19937_64& rng) {
  static const std::vector<Op> ops = {Op::TsMean, Op::TsStd, Op::TsRank, Op::TsDelta, Op::TsMax,
                                      Op::TsMin, Op::TsWMA, Op::TsEMA, Op::TsIr, Op::TsMed};
  return ops[pick(rng, ops.size())];
}

Expr mutate(const Expr& parent, std::mt19937_64& rng) {
  for (int tries = 0; tries < 8; ++tries) {
    switch (pick(rng, 6)) {
      case 0: {  // swap a feature
        const auto at = positions(parent, [](const Expr& x) { return x.kind() == Expr::Kind::feature; });
        if (at.empty()) break;
        const auto f = static_cast<Feature>(pick(rng, kFeatureCount));
        const Expr out = edit(parent, at[pick(rng, at.size())], [&](const Expr&) { return Expr::feature(f); });
        if (!(out == parent)) return out;
        break;
      }
      case 1: {  // change a window
        const auto at = positions(parent, [](const Expr& x) {
          return x.kind() == Expr::Kind::rolling1 || x.kind() == Expr::Kind::rolling2;
        });
        if (at.empty()) break;
        const int w = kWindows[pick(rng, kWindows.size())];
        const Expr out = edit(parent, at[pick(rng, at.size())], [&](const Expr& x) {
          return x.kind() == Expr::Kind::rolling1 ? Expr::rolling(x.op(), x.child(0), w)
                                                  : Expr::rolling(x.op(), x.child(0), x.child(1), w);
        });
        if (!(out == parent)) return out;
        break;
      }
      case 2: {  // wrap the whole expression
        if (coin(rng) < 0.4) {
          static const std::vector<Op> unary = {Op::Rank, Op::Abs, Op::SLog1p, Op::Sign};
          return Expr::unary(unary[pick(rng, unary.size())], parent);
        }
        return Expr::rolling(random_rolling1(rng), parent, kWindows[1 + pick(rng, kWindows.size() - 1)]);
      }
      case 3: {  // swap a binary operator
        const auto at = positions(parent, [](const Expr& x) {
          return x.kind() == Expr::Kind::binary && x.op() != Op::Pow;
        });
        if (at.empty()) break;
        static const std::vector<Op> ops = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::GetGreater, Op::GetLess};
        const Op op = ops[pick(rng, ops.size())];
        const Expr out = edit(parent, at[pick(rng, at.size())], [&](const Expr& x) {
          return Expr::binary(op, x.child(0), x.child(1));
        });
        if (!(out == parent)) return out;
        break;
      }
      case 4: {  // unwrap a node to its first operand
        const auto at = positions(parent, [](const Expr& x) {
          return x.arity() > 0 && !x.child(0).is_const();
        });
        if (at.empty()) break;
        const Expr out = edit(parent, at[pick(rng, at.size())], [](const Expr& x) { return x.child(0); });
        if (!out.is_const() && !(out == parent)) return out;
        break;
      }
      default: {  // regrow a subtree
        RandomExprOptions opts;
        opts.max_depth = 3;
        opts.allow_inv = false;
        const std::size_t target = pick(rng, subexpr_count(parent));
        const Expr out = edit(parent, target, [&](const Expr&) { return random_expr(rng, opts); });
        if (!out.is_const() && !(out == parent)) return out;
        break;
      }
    }
  }
  return Expr::unary(Op::Rank, parent);
}

std::string describe(const Expr& e) {
  std::vector<std::string> ops, feats;
  auto walk = [&](auto&& self, const Expr& x) -> void {
    if (x.kind() == Expr::Kind::feature) {
      feats.emplace_back(feature_name(x.feature_id()));
    } else if (x.arity() > 0) {
      ops.emplace_back(op_info(x.op()).name);
    }
    for (std::size_t i = 0; i < x.arity(); ++i) self(self, x.child(i));
  };
  walk(walk, e);
  auto join = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
    return s;
  };
  std::string text = "Signal built from " + join(feats);
  if (!ops.empty()) text += " combined through " + join(ops);
  return text + ".";
}

// Renders with the first operator name upper-cased, a typical model slip.
std::string corrupt(const std::string& text) {
  std::string out = text;
  const auto paren = out.find('(');
  if (paren == std::string::npos) return out;
  for (std::size_t i = 0; i < paren; ++i) out[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[i])));
  return out;
}

std::size_t requested_count(const std::string& text) {
  static const std::regex re(R"(should be (\d+))");
  std::smatch m;
  if (std::regex_search(text, m, re)) {
    const auto n = std::stoul(m[1].str());
    if (n >= 1 && n <= 100) return n;
  }
  return 5;
}

std::optional<Expr> given_expression(const std::string& text) {
  static const std::string marker = "Given expressions: ";
  const auto at = text.find(marker);
  if (at == std::string::npos) return std::nullopt;
  const auto start = at + marker.size();
  const auto end = text.find('\n', start);
  return try_parse_expr(std::string_view(text).substr(start, end == std::string::npos ? end : end - start));
}

}  // namespace

std::string MockChatProvider::complete(const ChatRequest& request) {
  const std::string user = request.user_text();
  if (const auto it = options_.fixtures.find(user); it != options_.fixtures.end()) return it->second;

  std::mt19937_64 rng(fnv1a64(request.system + "\n" + user, options_.seed));
  const std::size_t n = requested_count(user);

  if (request.stage == "strategy") {
    std::vector<std::string> bank = strategy_bank();
    std::shuffle(bank.begin(), bank.end(), rng);
    json strategies = json::array();
    for (std::size_t i = 0; i < n; ++i) strategies.push_back(bank[i % bank.size()]);
    return json{{"strategies", strategies}}.dump();
  }

  if (request.stage == "execution") {
    const auto parent = given_expression(user);
    json raw = json::array(), fixed = json::array(), expl = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      std::optional<Expr> e;
      if (!options_.mutation_table.empty() && coin(rng) < options_.table_probability) {
        e = try_parse_expr(options_.mutation_table[pick(rng, options_.mutation_table.size())]);
      }
      if (!e) e = parent ? mutate(*parent, rng) : Expr::feature(static_cast<Feature>(pick(rng, kFeatureCount)));
      const std::string text = render(*e);
      raw.push_back(coin(rng) < options_.corrupt_probability ? corrupt(text) : text);
      fixed.push_back(text);
      expl.push_back(describe(*e));
    }
    return json{{"expressions", raw}, {"expressions_fixed", fixed}, {"explanations", expl}}.dump();
  }
  return "{}";
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t MockEmbeddingProvider::bucket(std::string_view token) const {
  return static_cast<std::size_t>(fnv1a64(token, seed_) % dim_);
}

std::vector<double> MockEmbeddingProvider::embed(std::string_view text) {
  if (text.empty()) throw ArgumentError("cannot embed empty text");
  std::vector<double> v(dim_, 0.0);
  for (const auto& tok : word_tokens(text)) v[bucket(tok)] += 1.0;
  double ss = 0.0;
  for (double x : v) ss += x * x;
  if (!(ss > 0.0)) throw ArgumentError("text has no word tokens to embed");
  const double norm = std::sqrt(ss);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace dagalpha
