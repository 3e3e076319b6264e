#include "dagalpha/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

#include "dagalpha/error.hpp"

namespace dagalpha {

namespace {

constexpr std::array<OpInfo, 38> kOps = {{
    {Op::Abs, "Abs", OpKind::unary, true},
    {Op::Sign, "Sign", OpKind::unary, true},
    {Op::Log, "Log", OpKind::unary, true},
    {Op::SLog1p, "SLog1p", OpKind::unary, true},
    {Op::Inv, "Inv", OpKind::unary, false},
    {Op::Rank, "Rank", OpKind::unary, true},
    {Op::Add, "Add", OpKind::binary, true},
    {Op::Sub, "Sub", OpKind::binary, true},
    {Op::Mul, "Mul", OpKind::binary, true},
    {Op::Div, "Div", OpKind::binary, true},
    {Op::Pow, "Pow", OpKind::binary, true},
    {Op::Greater, "Greater", OpKind::binary, true},
    {Op::Less, "Less", OpKind::binary, true},
    {Op::GetGreater, "GetGreater", OpKind::binary, true},
    {Op::GetLess, "GetLess", OpKind::binary, true},
    {Op::Ref, "Ref", OpKind::rolling1, true},
    {Op::TsMean, "TsMean", OpKind::rolling1, true},
    {Op::TsSum, "TsSum", OpKind::rolling1, true},
    {Op::TsStd, "TsStd", OpKind::rolling1, true},
    {Op::TsVar, "TsVar", OpKind::rolling1, true},
    {Op::TsMin, "TsMin", OpKind::rolling1, true},
    {Op::TsMax, "TsMax", OpKind::rolling1, true},
    {Op::TsMed, "TsMed", OpKind::rolling1, true},
    {Op::TsMad, "TsMad", OpKind::rolling1, true},
    {Op::TsMinMaxDiff, "TsMinMaxDiff", OpKind::rolling1, true},
    {Op::TsMaxDiff, "TsMaxDiff", OpKind::rolling1, true},
    {Op::TsMinDiff, "TsMinDiff", OpKind::rolling1, true},
    {Op::TsIr, "TsIr", OpKind::rolling1, true},
    {Op::TsSkew, "TsSkew", OpKind::rolling1, true},
    {Op::TsKurt, "TsKurt", OpKind::rolling1, true},
    {Op::TsRank, "TsRank", OpKind::rolling1, true},
    {Op::TsDelta, "TsDelta", OpKind::rolling1, true},
    {Op::TsRatio, "TsRatio", OpKind::rolling1, true},
    {Op::TsPctChange, "TsPctChange", OpKind::rolling1, true},
    {Op::TsWMA, "TsWMA", OpKind::rolling1, true},
    {Op::TsEMA, "TsEMA", OpKind::rolling1, true},
    {Op::TsCov, "TsCov", OpKind::rolling2, true},
    {Op::TsCorr, "TsCorr", OpKind::rolling2, true},
}};

std::string format_float(double v) {
  char buf[400];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  std::string s(buf, ptr);
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

// Recursive-descent parser over the prefix grammar.
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse_all() {
    Expr e = parse_node();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  // Parsed argument plus its byte offset, for error reporting.
  struct Arg {
    std::size_t offset;
    std::optional<Expr> expr;
  };

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& msg) const {
    throw ParseError(at, msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    if (text_[pos_] == '-' || text_[pos_] == '+') ++pos_;
    bool is_float = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E') {
        is_float = true;
        ++pos_;
        if ((c == 'e' || c == 'E') && pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
          ++pos_;
        }
      } else {
        break;
      }
    }
    std::string_view lit = text_.substr(start, pos_ - start);
    if (!lit.empty() && lit.front() == '+') lit.remove_prefix(1);
    if (is_float) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), v);
      if (ec != std::errc() || ptr != lit.data() + lit.size() || !std::isfinite(v)) {
        fail_at(start, "malformed number '" + std::string(lit) + "'");
      }
      return Expr::float_const(v);
    }
    long long v = 0;
    auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), v);
    if (ec != std::errc() || ptr != lit.data() + lit.size()) {
      fail_at(start, "malformed integer '" + std::string(lit) + "'");
    }
    if (v < 1 || v > 100000) {
      fail_at(start, "integer constant must be in [1, 100000] (use a float such as 0.0 otherwise)");
    }
    return Expr::int_const(static_cast<int>(v));
  }

  Expr parse_node() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const std::size_t start = pos_;
    const char c = text_[pos_];
    if (c == '$') {
      ++pos_;
      const auto name = ident();
      const auto f = feature_from_name(name);
      if (!f) fail_at(start, "unknown feature '$" + std::string(name) + "'");
      return Expr::feature(*f);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      return parse_number();
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) {
      fail(std::string("unexpected character '") + c + "'");
    }
    const auto name = ident();
    const auto op = op_from_name(name);
    if (!op) fail_at(start, "unknown operator '" + std::string(name) + "'");
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '(') fail("expected '(' after " + std::string(name));
    ++pos_;
    std::vector<Arg> args;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ')') {
      fail("operator " + std::string(name) + " called with no arguments");
    }
    while (true) {
      skip_ws();
      const std::size_t at = pos_;
      args.push_back({at, parse_node()});
      skip_ws();
      if (pos_ >= text_.size()) fail("unbalanced parentheses: missing ')'");
      if (text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (text_[pos_] == ')') {
        ++pos_;
        break;
      }
      fail(std::string("expected ',' or ')' but found '") + text_[pos_] + "'");
    }
    return build(*op, start, args);
  }

  int window_arg(const Arg& a, std::string_view op_name) const {
    const Expr& e = *a.expr;
    if (e.kind() == Expr::Kind::float_const) {
      fail_at(a.offset, "non-integer rolling window for " + std::string(op_name));
    }
    if (e.kind() != Expr::Kind::int_const) {
      fail_at(a.offset, "rolling window of " + std::string(op_name) + " must be an integer constant");
    }
    return e.int_value();
  }

  Expr build(Op op, std::size_t start, const std::vector<Arg>& args) const {
    const auto& info = op_info(op);
    const auto want = [&](std::size_t n) {
      if (args.size() != n) {
        fail_at(start, "arity mismatch: " + std::string(info.name) + " takes " + std::to_string(n) +
                           " argument(s), got " + std::to_string(args.size()));
      }
    };
    switch (info.kind) {
      case OpKind::unary:
        want(1);
        return Expr::unary(op, *args[0].expr);
      case OpKind::binary:
        want(2);
        if (op == Op::Pow && !args[1].expr->is_const()) {
          fail_at(args[1].offset, "Pow exponent must be a constant");
        }
        return Expr::binary(op, *args[0].expr, *args[1].expr);
      case OpKind::rolling1:
        want(2);
        return Expr::rolling(op, *args[0].expr, window_arg(args[1], info.name));
      case OpKind::rolling2:
        want(3);
        return Expr::rolling(op, *args[0].expr, *args[1].expr, window_arg(args[2], info.name));
    }
    fail_at(start, "unreachable");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void render_into(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::feature:
      out += '$';
      out += feature_name(e.feature_id());
      return;
    case Expr::Kind::int_const:
      out += std::to_string(e.int_value());
      return;
    case Expr::Kind::float_const:
      out += format_float(e.float_value());
      return;
    default:
      break;
  }
  out += op_info(e.op()).name;
  out += '(';
  for (std::size_t i = 0; i < e.arity(); ++i) {
    if (i > 0) out += ", ";
    render_into(e.child(i), out);
  }
  if (e.kind() == Expr::Kind::rolling1 || e.kind() == Expr::Kind::rolling2) {
    out += ", ";
    out += std::to_string(e.window());
  }
  out += ')';
}

void tokens_into(const Expr& e, std::vector<std::string>& out) {
  switch (e.kind()) {
    case Expr::Kind::feature:
    case Expr::Kind::int_const:
    case Expr::Kind::float_const:
      out.push_back(render(e));
      return;
    default:
      break;
  }
  out.emplace_back(op_info(e.op()).name);
  for (std::size_t i = 0; i < e.arity(); ++i) tokens_into(e.child(i), out);
  if (e.kind() == Expr::Kind::rolling1 || e.kind() == Expr::Kind::rolling2) {
    out.push_back(std::to_string(e.window()));
  }
}

std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Physical dimension as exponents of (price, volume). nullopt is a constant,
// which adapts to whatever it is combined with.
struct Dim {
  int price = 0;
  int volume = 0;
  bool operator==(const Dim&) const = default;
  bool zero() const { return price == 0 && volume == 0; }
};
using MaybeDim = std::optional<Dim>;

std::string dim_text(const Dim& d) {
  return "price^" + std::to_string(d.price) + " volume^" + std::to_string(d.volume);
}

class Linter {
 public:
  Linter(const LintOptions& options, LintReport& report) : options_(options), report_(report) {}

  MaybeDim visit(const Expr& e, const std::string& path) {
    switch (e.kind()) {
      case Expr::Kind::feature:
        return e.feature_id() == Feature::volume ? Dim{0, 1} : Dim{1, 0};
      case Expr::Kind::int_const:
        add("int_in_arithmetic",
            "integer constant " + std::to_string(e.int_value()) +
                " used in an arithmetic position; use a float constant",
            path, Severity::error);
        return std::nullopt;
      case Expr::Kind::float_const:
        if (options_.float_whitelist) {
          const auto& wl = *options_.float_whitelist;
          if (std::find(wl.begin(), wl.end(), e.float_value()) == wl.end()) {
            add("float_whitelist", "float constant " + format_float(e.float_value()) +
                                       " is not in the allowed set", path, Severity::error);
          }
        }
        return std::nullopt;
      default:
        break;
    }
    std::vector<MaybeDim> dims;
    for (std::size_t i = 0; i < e.arity(); ++i) {
      dims.push_back(visit(e.child(i), path.empty() ? std::to_string(i) : path + "." + std::to_string(i)));
    }
    return combine(e.op(), dims, path);
  }

  void add(std::string code, std::string message, std::string path, Severity severity) {
    report_.violations.push_back({std::move(code), std::move(message), std::move(path), severity});
  }

 private:
  Dim require_zero(const MaybeDim& d, Op op, const std::string& path) {
    if (options_.dimensional && d && !d->zero()) {
      add("dimension_nonzero_arg",
          std::string(op_info(op).name) + " expects a dimensionless argument, got " + dim_text(*d),
          path, Severity::warning);
    }
    return Dim{};
  }

  MaybeDim require_equal(const MaybeDim& a, const MaybeDim& b, Op op, const std::string& path) {
    if (options_.dimensional && a && b && !(*a == *b)) {
      add("dimension_mismatch",
          std::string(op_info(op).name) + " combines " + dim_text(*a) + " with " + dim_text(*b),
          path, Severity::warning);
    }
    return a ? a : b;
  }

  MaybeDim combine(Op op, const std::vector<MaybeDim>& d, const std::string& path) {
    const auto val = [](const MaybeDim& m) { return m.value_or(Dim{}); };
    switch (op) {
      case Op::Add:
      case Op::Sub:
      case Op::GetGreater:
      case Op::GetLess:
        return require_equal(d[0], d[1], op, path);
      case Op::Greater:
      case Op::Less:
        require_equal(d[0], d[1], op, path);
        return Dim{};
      case Op::Mul:
        if (!d[0] && !d[1]) return std::nullopt;
        return Dim{val(d[0]).price + val(d[1]).price, val(d[0]).volume + val(d[1]).volume};
      case Op::Div:
        if (!d[0] && !d[1]) return std::nullopt;
        return Dim{val(d[0]).price - val(d[1]).price, val(d[0]).volume - val(d[1]).volume};
      case Op::Log:
      case Op::SLog1p:
        return require_zero(d[0], op, path);
      case Op::Pow:
        return require_zero(d[0], op, path);
      case Op::Inv:
        if (!d[0]) return std::nullopt;
        return Dim{-d[0]->price, -d[0]->volume};
      case Op::Rank:
      case Op::TsRank:
      case Op::TsCorr:
      case Op::TsIr:
      case Op::Sign:
      case Op::TsPctChange:
      case Op::TsRatio:
      case Op::TsSkew:
      case Op::TsKurt:
        return Dim{};
      case Op::TsVar:
        if (!d[0]) return std::nullopt;
        return Dim{2 * d[0]->price, 2 * d[0]->volume};
      case Op::TsCov:
        if (!d[0] && !d[1]) return std::nullopt;
        return Dim{val(d[0]).price + val(d[1]).price, val(d[0]).volume + val(d[1]).volume};
      default:
        return d[0];
    }
  }

  const LintOptions& options_;
  LintReport& report_;
};

}  // namespace

const OpInfo& op_info(Op op) { return kOps[static_cast<std::size_t>(op)]; }

std::span<const OpInfo> all_ops() { return kOps; }

std::optional<Op> op_from_name(std::string_view name) {
  if (name == "Slog1p") return Op::SLog1p;
  if (name == "TsDiv") return Op::TsRatio;
  for (const auto& info : kOps) {
    if (info.name == name) return info.op;
  }
  return std::nullopt;
}

Expr::Expr() : Expr(feature(Feature::close)) {}

Expr Expr::feature(Feature f) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::feature;
  n->feature = f;
  return Expr(std::move(n));
}

Expr Expr::int_const(int value) {
  if (value < 1) throw ArgumentError("integer constant must be >= 1");
  auto n = std::make_shared<Node>();
  n->kind = Kind::int_const;
  n->ivalue = value;
  return Expr(std::move(n));
}

Expr Expr::float_const(double value) {
  if (!std::isfinite(value)) throw ArgumentError("float constant must be finite");
  auto n = std::make_shared<Node>();
  n->kind = Kind::float_const;
  n->fvalue = value;
  return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr child) {
  if (op_info(op).kind != OpKind::unary) throw ArgumentError("not a unary operator");
  auto n = std::make_shared<Node>();
  n->kind = Kind::unary;
  n->op = op;
  n->children = {std::move(child)};
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr left, Expr right) {
  if (op_info(op).kind != OpKind::binary) throw ArgumentError("not a binary operator");
  if (op == Op::Pow && !right.is_const()) throw ArgumentError("Pow exponent must be a constant");
  auto n = std::make_shared<Node>();
  n->kind = Kind::binary;
  n->op = op;
  n->children = {std::move(left), std::move(right)};
  return Expr(std::move(n));
}

Expr Expr::rolling(Op op, Expr child, int window) {
  if (op_info(op).kind != OpKind::rolling1) throw ArgumentError("not a one-series rolling operator");
  if (window < 1) throw ArgumentError("rolling window must be >= 1");
  auto n = std::make_shared<Node>();
  n->kind = Kind::rolling1;
  n->op = op;
  n->ivalue = window;
  n->children = {std::move(child)};
  return Expr(std::move(n));
}

Expr Expr::rolling(Op op, Expr left, Expr right, int window) {
  if (op_info(op).kind != OpKind::rolling2) throw ArgumentError("not a two-series rolling operator");
  if (window < 1) throw ArgumentError("rolling window must be >= 1");
  auto n = std::make_shared<Node>();
  n->kind = Kind::rolling2;
  n->op = op;
  n->ivalue = window;
  n->children = {std::move(left), std::move(right)};
  return Expr(std::move(n));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::feature:
      return a.feature_id() == b.feature_id();
    case Expr::Kind::int_const:
      return a.int_value() == b.int_value();
    case Expr::Kind::float_const:
      return a.float_value() == b.float_value() &&
             std::signbit(a.float_value()) == std::signbit(b.float_value());
    default:
      break;
  }
  if (a.op() != b.op() || a.arity() != b.arity()) return false;
  if ((a.kind() == Expr::Kind::rolling1 || a.kind() == Expr::Kind::rolling2) &&
      a.window() != b.window()) {
    return false;
  }
  for (std::size_t i = 0; i < a.arity(); ++i) {
    if (!(a.child(i) == b.child(i))) return false;
  }
  return true;
}

Expr parse_expr(std::string_view text) { return Parser(text).parse_all(); }

std::optional<Expr> try_parse_expr(std::string_view text, std::string* error) {
  try {
    return parse_expr(text);
  } catch (const ParseError& e) {
    if (error != nullptr) *error = e.what();
    return std::nullopt;
  }
}

std::string render(const Expr& e) {
  std::string out;
  render_into(e, out);
  return out;
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < e.arity(); ++i) n += node_count(e.child(i));
  if (e.kind() == Expr::Kind::rolling1 || e.kind() == Expr::Kind::rolling2) ++n;
  return n;
}

std::vector<std::string> tokens(const Expr& e) {
  std::vector<std::string> out;
  tokens_into(e, out);
  return out;
}

double syntactic_distance(const Expr& a, const Expr& b) {
  const auto ta = tokens(a);
  const auto tb = tokens(b);
  return static_cast<double>(levenshtein(ta, tb)) / static_cast<double>(ta.size() + tb.size());
}

bool LintReport::has_errors() const { return error_count() > 0; }

std::size_t LintReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(), [](const auto& v) {
    return v.severity == Severity::error;
  }));
}

const std::vector<double>& default_float_whitelist() {
  static const std::vector<double> kList = {0.0001, 0.01, 0.0, 1.0, 2.0};
  return kList;
}

LintReport lint(const Expr& e, const LintOptions& options) {
  LintReport report;
  Linter linter(options, report);
  const std::size_t len = node_count(e);
  if (len > options.max_len) {
    linter.add("length",
               "expression has " + std::to_string(len) + " nodes, limit is " +
                   std::to_string(options.max_len),
               "", Severity::error);
  }
  const MaybeDim root = linter.visit(e, "");
  if (options.dimensional && root && !root->zero()) {
    linter.add("not_dimensionless", "expression has dimension " + dim_text(*root), "",
               Severity::warning);
  }
  return report;
}

LintReport lint(const Expr& e, std::size_t max_len, const std::vector<double>& float_whitelist) {
  LintOptions options;
  options.max_len = max_len;
  options.float_whitelist = float_whitelist;
  return lint(e, options);
}

int expr_depth(const Expr& e) {
  int d = 0;
  for (std::size_t i = 0; i < e.arity(); ++i) d = std::max(d, expr_depth(e.child(i)));
  return d + 1;
}

namespace {

Expr random_leaf(std::mt19937_64& rng, const RandomExprOptions& o) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (o.allow_int_leaves && u(rng) < 0.05) {
    return Expr::int_const(o.windows[std::uniform_int_distribution<std::size_t>(0, o.windows.size() - 1)(rng)]);
  }
  if (u(rng) < 0.85 || o.floats.empty()) {
    return Expr::feature(static_cast<Feature>(std::uniform_int_distribution<int>(0, 5)(rng)));
  }
  return Expr::float_const(o.floats[std::uniform_int_distribution<std::size_t>(0, o.floats.size() - 1)(rng)]);
}

Expr random_const(std::mt19937_64& rng, const RandomExprOptions& o) {
  if (o.floats.empty()) return Expr::float_const(1.0);
  return Expr::float_const(o.floats[std::uniform_int_distribution<std::size_t>(0, o.floats.size() - 1)(rng)]);
}

Expr random_node(std::mt19937_64& rng, const RandomExprOptions& o, int depth_left) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (depth_left <= 1 || u(rng) < o.leaf_probability) return random_leaf(rng, o);
  std::vector<Op> ops;
  for (const auto& info : kOps) {
    if (info.op == Op::Inv && !o.allow_inv) continue;
    ops.push_back(info.op);
  }
  const Op op = ops[std::uniform_int_distribution<std::size_t>(0, ops.size() - 1)(rng)];
  const int window = o.windows[std::uniform_int_distribution<std::size_t>(0, o.windows.size() - 1)(rng)];
  switch (op_info(op).kind) {
    case OpKind::unary:
      return Expr::unary(op, random_node(rng, o, depth_left - 1));
    case OpKind::binary:
      if (op == Op::Pow) return Expr::binary(op, random_node(rng, o, depth_left - 1), random_const(rng, o));
      return Expr::binary(op, random_node(rng, o, depth_left - 1), random_node(rng, o, depth_left - 1));
    case OpKind::rolling1:
      return Expr::rolling(op, random_node(rng, o, depth_left - 1), window);
    case OpKind::rolling2:
      return Expr::rolling(op, random_node(rng, o, depth_left - 1), random_node(rng, o, depth_left - 1),
                           window);
  }
  return random_leaf(rng, o);
}

}  // namespace

Expr random_expr(std::mt19937_64& rng, const RandomExprOptions& options) {
  return random_node(rng, options, std::max(1, options.max_depth));
}

}  // namespace dagalpha
