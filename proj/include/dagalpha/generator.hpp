#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dagalpha/expr.hpp"
#include "dagalpha/graph.hpp"
#include "dagalpha/providers.hpp"

namespace dagalpha {

struct PromptAssets {
  std::string system;
  std::string operators;
  std::string strategy;
  std::string execution;
};

/// The built-in prompt templates.
const PromptAssets& default_prompts();

/// Substitutes `{key}` occurrences for the given keys; other braces are kept.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

inline constexpr std::string_view kEmptyTrace = "(empty trace: this expression is a seed)";

/// One `depth d: <expr> — <explanation>` line per ancestor, oldest first. The
/// last node of `trace` (the parent itself) is not listed.
std::string render_trace(const std::vector<const FactorNode*>& trace);

struct GeneratorConfig {
  std::size_t m = 5;
  double temperature = 0.7;
  int max_tokens = 4096;
};

struct CandidateFactor {
  Expr expr;
  std::string raw_text;
  std::string explanation;
  std::string strategy;
  NodeId parent = 0;
  std::vector<std::string> notes;
};

struct Rejection {
  std::string text;
  std::string reason;
};

struct SynthesisResult {
  std::vector<CandidateFactor> candidates;
  std::vector<Rejection> dropped;
};

class Generator {
 public:
  Generator(ChatClient& chat, GeneratorConfig config, const PromptAssets& prompts = default_prompts())
      : chat_(chat), config_(config), prompts_(prompts) {}

  ChatRequest strategy_request(const FactorNode& parent, const std::vector<const FactorNode*>& trace,
                               const std::string& topic) const;
  ChatRequest execution_request(const FactorNode& parent, const std::vector<const FactorNode*>& trace,
                                const std::string& topic, const std::vector<std::string>& strategies) const;

  /// Exactly m strategies when the model supplies them: extra ones are cut and
  /// a short list triggers one re-ask. Throws GenerationFailure when none arrive.
  std::vector<std::string> propose_strategies(const FactorNode& parent,
                                              const std::vector<const FactorNode*>& trace,
                                              const std::string& topic);

  /// Parsed candidates, preferring the fixed form of each expression. Throws
  /// GenerationFailure when a required array is missing.
  SynthesisResult synthesize(const FactorNode& parent, const std::vector<std::string>& strategies,
                             const std::vector<const FactorNode*>& trace, const std::string& topic);

  const GeneratorConfig& config() const { return config_; }

 private:
  ChatClient& chat_;
  GeneratorConfig config_;
  const PromptAssets& prompts_;
};

struct ScreenResult {
  std::vector<CandidateFactor> kept;
  std::vector<Rejection> rejected;
};

/// Keeps candidates with no lint errors whose canonical text is new to the
/// whole graph (evicted nodes included) and to the batch so far.
ScreenResult screen(std::vector<CandidateFactor> candidates, const LintOptions& lint_options,
                    const FactorGraph& graph);

}  // namespace dagalpha
