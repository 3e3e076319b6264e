#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dagalpha/panel.hpp"

namespace dagalpha {

enum class Op : std::uint8_t {
  // unary
  Abs, Sign, Log, SLog1p, Inv, Rank,
  // binary
  Add, Sub, Mul, Div, Pow, Greater, Less, GetGreater, GetLess,
  // rolling, one series
  Ref, TsMean, TsSum, TsStd, TsVar, TsMin, TsMax, TsMed, TsMad, TsMinMaxDiff, TsMaxDiff,
  TsMinDiff, TsIr, TsSkew, TsKurt, TsRank, TsDelta, TsRatio, TsPctChange, TsWMA, TsEMA,
  // rolling, two series
  TsCov, TsCorr,
};

enum class OpKind : std::uint8_t { unary, binary, rolling1, rolling2 };

struct OpInfo {
  Op op;
  std::string_view name;
  OpKind kind;
  /// Offered to the generator. Inv is evaluable but never prompted.
  bool promptable;
};

const OpInfo& op_info(Op op);
std::span<const OpInfo> all_ops();
/// Accepts canonical names plus the aliases `Slog1p` and `TsDiv`.
std::optional<Op> op_from_name(std::string_view name);

/// Immutable alpha expression tree. Copies share structure.
class Expr {
 public:
  enum class Kind : std::uint8_t { feature, int_const, float_const, unary, binary, rolling1, rolling2 };

  /// The `$close` leaf.
  Expr();

  static Expr feature(Feature f);
  /// Integer literal; must be >= 1.
  static Expr int_const(int value);
  static Expr float_const(double value);
  static Expr unary(Op op, Expr child);
  /// For Pow the exponent must be a constant.
  static Expr binary(Op op, Expr left, Expr right);
  static Expr rolling(Op op, Expr child, int window);
  static Expr rolling(Op op, Expr left, Expr right, int window);

  Kind kind() const { return node_->kind; }
  bool is_leaf() const { return node_->kind <= Kind::float_const; }
  bool is_const() const { return node_->kind == Kind::int_const || node_->kind == Kind::float_const; }
  Op op() const { return node_->op; }
  Feature feature_id() const { return node_->feature; }
  int int_value() const { return node_->ivalue; }
  double float_value() const { return node_->fvalue; }
  int window() const { return node_->ivalue; }
  std::size_t arity() const { return node_->children.size(); }
  const Expr& child(std::size_t i) const { return node_->children[i]; }

  /// Structural equality (float constants compared bitwise-by-value).
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node {
    Kind kind = Kind::feature;
    Op op = Op::Abs;
    Feature feature = Feature::close;
    int ivalue = 0;
    double fvalue = 0.0;
    std::vector<Expr> children;
  };
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

/// Parses the prefix `Op(arg, ...)` grammar with `$feature` leaves. Throws
/// ParseError carrying the byte offset of the problem.
Expr parse_expr(std::string_view text);
/// Parses, returning nullopt and filling `error` on failure.
std::optional<Expr> try_parse_expr(std::string_view text, std::string* error = nullptr);

/// Canonical text: `Op(a, b)`, one space after commas, floats always carry a
/// decimal point.
std::string render(const Expr& e);

/// Total number of nodes including constant leaves and rolling windows.
std::size_t node_count(const Expr& e);

/// Pre-order node labels of the canonical form (operator names, `$feature`,
/// constants, windows). Its length equals node_count().
std::vector<std::string> tokens(const Expr& e);

/// Token-level Levenshtein distance over (len(a) + len(b)); in [0, 1].
double syntactic_distance(const Expr& a, const Expr& b);

enum class Severity : std::uint8_t { error, warning };

struct LintViolation {
  std::string code;
  std::string message;
  std::string path;  ///< child indices from the root, e.g. "0.1"; empty for root
  Severity severity = Severity::error;
};

struct LintReport {
  std::vector<LintViolation> violations;

  bool empty() const { return violations.empty(); }
  bool has_errors() const;
  std::size_t error_count() const;
};

struct LintOptions {
  std::size_t max_len = 40;
  /// Allowed arithmetic float constants. nullopt disables the check, which is
  /// how user-supplied seed expressions are linted.
  std::optional<std::vector<double>> float_whitelist;
  bool dimensional = true;
};

/// The arithmetic constants generator candidates may use.
const std::vector<double>& default_float_whitelist();

LintReport lint(const Expr& e, const LintOptions& options);
LintReport lint(const Expr& e, std::size_t max_len, const std::vector<double>& float_whitelist);

struct RandomExprOptions {
  int max_depth = 6;
  std::vector<int> windows = {1, 2, 3, 5, 10, 20};
  std::vector<double> floats = {0.0001, 0.01, 0.0, 1.0, 2.0};
  bool allow_inv = true;
  /// Emit integer literals in arithmetic positions (parse-valid, lint errors).
  bool allow_int_leaves = false;
  double leaf_probability = 0.25;
};

/// Random well-formed tree of depth <= max_depth (a single leaf has depth 1).
Expr random_expr(std::mt19937_64& rng, const RandomExprOptions& options = {});

/// Depth of the tree; a leaf has depth 1.
int expr_depth(const Expr& e);

}  // namespace dagalpha
