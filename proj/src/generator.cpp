#include "dagalpha/generator.hpp"

#include <set>

#include <spdlog/spdlog.h>

#include "dagalpha/error.hpp"

namespace dagalpha {

using nlohmann::json;

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string render_trace(const std::vector<const FactorNode*>& trace) {
  if (trace.size() <= 1) return std::string(kEmptyTrace);
  std::string out;
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    const FactorNode& n = *trace[i];
    out += "\ndepth " + std::to_string(n.depth) + ": " + render(n.expr) + " — " + n.explanation;
  }
  return out;
}

namespace {

std::map<std::string, std::string> common_vars(const FactorNode& parent,
                                               const std::vector<const FactorNode*>& trace,
                                               const std::string& topic, std::size_t m) {
  return {{"topic", topic},
          {"num", std::to_string(m)},
          {"expressions", render(parent.expr)},
          {"explanations", parent.explanation},
          {"traces", render_trace(trace)}};
}

std::vector<std::string> string_array(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key) || !doc.at(key).is_array()) {
    throw GenerationFailure(std::string("reply lacks the '") + key + "' array");
  }
  std::vector<std::string> out;
  for (const auto& v : doc.at(key)) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  return out;
}

}  // namespace

ChatRequest Generator::strategy_request(const FactorNode& parent, const std::vector<const FactorNode*>& trace,
                                        const std::string& topic) const {
  ChatRequest req;
  req.system = prompts_.system;
  req.user = {prompts_.operators, fill_template(prompts_.strategy, common_vars(parent, trace, topic, config_.m))};
  req.temperature = config_.temperature;
  req.max_tokens = config_.max_tokens;
  req.stage = "strategy";
  return req;
}

ChatRequest Generator::execution_request(const FactorNode& parent, const std::vector<const FactorNode*>& trace,
                                         const std::string& topic,
                                         const std::vector<std::string>& strategies) const {
  auto vars = common_vars(parent, trace, topic, config_.m);
  std::string listed;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    listed += "\n" + std::to_string(i + 1) + ". " + strategies[i];
  }
  vars["strategies"] = listed;
  ChatRequest req;
  req.system = prompts_.system;
  req.user = {prompts_.operators, fill_template(prompts_.execution, vars)};
  req.temperature = config_.temperature;
  req.max_tokens = config_.max_tokens;
  req.stage = "execution";
  return req;
}

std::vector<std::string> Generator::propose_strategies(const FactorNode& parent,
                                                       const std::vector<const FactorNode*>& trace,
                                                       const std::string& topic) {
  const ChatRequest req = strategy_request(parent, trace, topic);
  auto strategies = string_array(*chat_.chat(req).json, "strategies");
  if (strategies.size() < config_.m) {
    spdlog::info("got {} of {} strategies; asking once more", strategies.size(), config_.m);
    auto again = string_array(*chat_.chat(req).json, "strategies");
    if (again.size() > strategies.size()) strategies = std::move(again);
  }
  if (strategies.empty()) throw GenerationFailure("strategy stage returned no strategies");
  if (strategies.size() > config_.m) strategies.resize(config_.m);
  return strategies;
}

SynthesisResult Generator::synthesize(const FactorNode& parent, const std::vector<std::string>& strategies,
                                      const std::vector<const FactorNode*>& trace, const std::string& topic) {
  if (strategies.empty()) throw ArgumentError("synthesis needs at least one strategy");
  const json doc = *chat_.chat(execution_request(parent, trace, topic, strategies)).json;
  const auto raw = string_array(doc, "expressions");
  const auto fixed = string_array(doc, "expressions_fixed");
  const auto expl = string_array(doc, "explanations");

  SynthesisResult out;
  const std::size_t n = std::min(config_.m, std::max(raw.size(), fixed.size()));
  for (std::size_t i = 0; i < n; ++i) {
    CandidateFactor c;
    c.parent = parent.id;
    c.explanation = i < expl.size() ? expl[i] : std::string();
    c.strategy = i < strategies.size() ? strategies[i] : std::string();
    std::string fixed_error, raw_error;
    std::optional<Expr> e;
    if (i < fixed.size()) e = try_parse_expr(fixed[i], &fixed_error);
    if (e) {
      c.raw_text = fixed[i];
      if (i < raw.size() && raw[i] != fixed[i]) c.notes.push_back("used expressions_fixed");
    } else if (i < raw.size()) {
      e = try_parse_expr(raw[i], &raw_error);
      c.raw_text = raw[i];
      if (e && i < fixed.size()) c.notes.push_back("fixed form unparseable: " + fixed_error);
    }
    if (!e) {
      const std::string text = i < fixed.size() ? fixed[i] : raw[i];
      const std::string reason = raw_error.empty() ? fixed_error : raw_error;
      spdlog::info("dropping candidate '{}': {}", text, reason);
      out.dropped.push_back({text, reason});
      continue;
    }
    c.expr = *e;
    out.candidates.push_back(std::move(c));
  }
  return out;
}

ScreenResult screen(std::vector<CandidateFactor> candidates, const LintOptions& lint_options,
                    const FactorGraph& graph) {
  ScreenResult out;
  std::set<std::string> batch;
  for (auto& c : candidates) {
    const std::string text = render(c.expr);
    const LintReport report = lint(c.expr, lint_options);
    if (report.has_errors()) {
      std::string reason;
      for (const auto& v : report.violations) {
        if (v.severity == Severity::error) reason += (reason.empty() ? "" : "; ") + v.code + ": " + v.message;
      }
      out.rejected.push_back({text, reason});
      continue;
    }
    if (graph.contains_expr(text)) {
      out.rejected.push_back({text, "duplicate of an existing node"});
      continue;
    }
    if (!batch.insert(text).second) {
      out.rejected.push_back({text, "duplicate within the batch"});
      continue;
    }
    for (const auto& v : report.violations) c.notes.push_back("warning " + v.code);
    out.kept.push_back(std::move(c));
  }
  return out;
}

}  // namespace dagalpha
