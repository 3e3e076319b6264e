// Command-line front end: mine, eval-factor, backtest, export-dag, report, synth.

#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "dagalpha/backtest.hpp"
#include "dagalpha/config.hpp"
#include "dagalpha/engine.hpp"
#include "dagalpha/error.hpp"
#include "dagalpha/integrator.hpp"
#include "dagalpha/metrics.hpp"
#include "dagalpha/orchestrator.hpp"
#include "dagalpha/synthetic.hpp"

using namespace dagalpha;
using nlohmann::json;

namespace {

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json metrics_json(const MetricReport& m) {
  return {{"ic", nan_to_null(m.ic)},       {"icir", nan_to_null(m.icir)},   {"ric", nan_to_null(m.ric)},
          {"ricir", nan_to_null(m.ricir)}, {"valid_days", m.valid_days}};
}

struct NamedRange {
  std::string name;
  RowRange rows;
};

// "name=START:END,..." with inclusive ISO dates.
std::vector<NamedRange> parse_splits(const std::string& spec, const Panel& panel) {
  std::vector<NamedRange> out;
  if (spec.empty()) return {{"all", {0, panel.num_dates()}}};
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    const auto colon = item.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos) {
      throw ArgumentError("split '" + item + "' is not name=START:END");
    }
    const auto start = parse_date(item.substr(eq + 1, colon - eq - 1));
    const auto end = parse_date(item.substr(colon + 1));
    if (!start || !end || *end < *start) throw ArgumentError("split '" + item + "' has bad dates");
    const std::size_t first = panel.lower_bound(*start);
    std::size_t last = first;
    while (last < panel.num_dates() && !(*end < panel.dates()[last])) ++last;
    out.push_back({item.substr(0, eq), {first, last - first}});
  }
  return out;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw Error("cannot write '" + path + "'");
  return file;
}

int cmd_mine(const std::string& config_path, const std::string& data, const std::string& resume,
             const std::string& out_dir, const std::string& dump_dir) {
  MiningConfig config = load_config_file(config_path);
  apply_env_overrides(config);
  const Panel panel = load_panel_file(data);
  auto providers = make_providers(config);
  Miner miner(config, panel, *providers.chat, *providers.embedder, MinerOptions{out_dir, dump_dir});
  if (resume.empty()) {
    miner.start();
  } else {
    miner.resume(resume);
  }
  const RunReport report = miner.run();
  json summary = {{"status", report.status},
                  {"iterations_completed", report.iterations_completed},
                  {"candidate_evaluations", report.candidate_evaluations},
                  {"active", miner.graph().active_size()},
                  {"nodes", miner.graph().size()},
                  {"run_dir", out_dir}};
  for (const auto& s : report.splits) {
    summary["mega"][s.name] = s.mega ? metrics_json(*s.mega) : json(nullptr);
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_eval(const std::string& expr_text, const std::string& data, const std::string& splits, int horizon) {
  const Expr expr = parse_expr(expr_text);
  const Panel panel = load_panel_file(data);
  const Matrix values = evaluate(expr, panel);
  const ReturnMatrix returns = forward_returns(panel, horizon);
  json out = {{"expr", render(expr)}, {"nodes", node_count(expr)}, {"horizon", horizon}};
  LintOptions lo;
  const LintReport lr = lint(expr, lo);
  json lint_json = json::array();
  for (const auto& v : lr.violations) {
    lint_json.push_back({{"code", v.code}, {"severity", v.severity == Severity::error ? "error" : "warning"},
                         {"message", v.message}});
  }
  out["lint"] = lint_json;
  for (const auto& s : parse_splits(splits, panel)) {
    const MatrixView f = values.view().slice_rows(s.rows.first, s.rows.count);
    const MatrixView r = returns.values.view().slice_rows(s.rows.first, s.rows.count);
    try {
      const MetricReport m = ic_suite(f, r);
      json j = metrics_json(m);
      j["quality"] = quality(f, r);
      out["splits"][s.name] = j;
    } catch (const ArgumentError& e) {
      out["splits"][s.name] = {{"error", e.what()}};
    }
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_backtest(const std::string& graph_path, const std::string& data, const std::string& config_path,
                 const std::string& split, const std::string& curve_path) {
  MiningConfig config;
  if (!config_path.empty()) config = load_config_file(config_path);
  const Panel panel = load_panel_file(data);
  const FactorGraph graph = FactorGraph::load_file(graph_path, std::max(config.capacity, std::size_t{1} << 20));
  const ReturnMatrix returns = forward_returns(panel, config.horizon);
  std::vector<Matrix> values;
  std::vector<MemberFactor> members;
  const auto ids = graph.active_ids();
  values.reserve(ids.size());
  for (NodeId id : ids) values.push_back(evaluate(graph.node(id).expr, panel));
  for (std::size_t i = 0; i < ids.size(); ++i) members.push_back({ids[i], values[i]});
  const MegaResult mega = mega_factor(members, returns.values, config.integrator);

  RowRange rows{0, panel.num_dates()};
  if (split != "all") {
    const SplitRows sr = resolve_splits(config.splits, panel);
    if (split == "train") rows = sr.train;
    else if (split == "valid") rows = sr.valid;
    else if (split == "test") rows = sr.test;
    else throw ArgumentError("split must be train, valid, test or all");
  }
  if (rows.count == 0) throw ArgumentError("split '" + split + "' selects no dates");
  const BacktestResult bt = simulate(mega.values.view().slice_rows(rows.first, rows.count),
                                     panel.close().view().slice_rows(rows.first, rows.count), config.backtest);
  std::ofstream file;
  write_curve_csv(open_out(curve_path, file), panel, rows.first, bt);
  json summary = {{"split", split},
                  {"factors", ids.size()},
                  {"ar", nan_to_null(bt.perf.ar)},
                  {"mdd", nan_to_null(bt.perf.mdd)},
                  {"sr", nan_to_null(bt.perf.sr)},
                  {"cash_tranches", bt.cash_tranches}};
  (curve_path.empty() || curve_path == "-" ? std::cerr : std::cout) << summary.dump(2) << '\n';
  return 0;
}

int cmd_export(const std::string& graph_path, const std::string& format, const std::string& out_path) {
  const FactorGraph graph = FactorGraph::load_file(graph_path, std::size_t{1} << 20);
  std::ofstream file;
  std::ostream& out = open_out(out_path, file);
  if (format == "dot") {
    out << graph_to_dot(graph);
  } else {
    graph.save(out);
  }
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& out_path) {
  std::ofstream file;
  write_iteration_csv(open_out(out_path, file), run_dir);
  return 0;
}

int cmd_synth(const std::string& kind, const std::string& out_path, std::size_t dates, std::size_t assets,
              std::uint64_t seed, double nan_fraction) {
  Panel panel;
  if (kind == "planted") {
    PlantedPanelOptions o;
    o.dates = dates;
    o.assets = assets;
    o.seed = seed;
    panel = planted_panel(o);
  } else {
    RandomPanelOptions o;
    o.dates = dates;
    o.assets = assets;
    o.seed = seed;
    o.nan_fraction = nan_fraction;
    panel = random_panel(o);
  }
  std::ofstream file;
  write_panel_csv(open_out(out_path, file), panel);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dagalpha: alpha factor mining over an evolutionary factor graph"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  std::string config_path, data, resume, out_dir = "run", dump_dir;
  auto* mine = app.add_subcommand("mine", "Run the mining loop");
  mine->add_option("--config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);
  mine->add_option("--data", data, "Panel CSV")->required()->check(CLI::ExistingFile);
  mine->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  mine->add_option("--out", out_dir, "Run directory")->capture_default_str();
  mine->add_option("--dump-prompts", dump_dir, "Write every prompt and reply to this directory");

  std::string expr_text, splits;
  int horizon = 20;
  auto* eval = app.add_subcommand("eval-factor", "Print the metric suite of one expression");
  eval->add_option("--expr", expr_text, "Expression text")->required();
  eval->add_option("--data", data, "Panel CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--splits", splits, "name=START:END,... (inclusive dates); default is the whole panel");
  eval->add_option("--horizon", horizon, "Forward-return horizon in days")->capture_default_str();

  std::string graph_path, split = "test", curve_path;
  auto* bt = app.add_subcommand("backtest", "Backtest the Mega factor of a graph's active pool");
  bt->add_option("--graph", graph_path, "Graph or checkpoint JSON")->required()->check(CLI::ExistingFile);
  bt->add_option("--data", data, "Panel CSV")->required()->check(CLI::ExistingFile);
  bt->add_option("--config", config_path, "Config JSON for integrator, backtest and split settings")
      ->check(CLI::ExistingFile);
  bt->add_option("--split", split, "train, valid, test or all")->capture_default_str();
  bt->add_option("--curve", curve_path, "CSV path for the wealth curve (default stdout)");

  std::string format = "json", out_path;
  auto* exp = app.add_subcommand("export-dag", "Export the factor lineage");
  exp->add_option("--graph", graph_path, "Graph or checkpoint JSON")->required()->check(CLI::ExistingFile);
  exp->add_option("--format", format, "json or dot")->check(CLI::IsMember({"json", "dot"}))->capture_default_str();
  exp->add_option("--out", out_path, "Output path (default stdout)");

  std::string run_dir;
  auto* rep = app.add_subcommand("report", "Iteration-vs-pool-IC CSV of a run");
  rep->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", out_path, "Output path (default stdout)");

  std::string kind = "planted";
  std::size_t dates = 300, assets = 40;
  std::uint64_t seed = 1;
  double nan_fraction = 0.0;
  auto* syn = app.add_subcommand("synth", "Write a synthetic panel CSV");
  syn->add_option("--kind", kind, "planted or random")->check(CLI::IsMember({"planted", "random"}))
      ->capture_default_str();
  syn->add_option("--out", out_path, "Output path (default stdout)");
  syn->add_option("--dates", dates)->capture_default_str();
  syn->add_option("--assets", assets)->capture_default_str();
  syn->add_option("--seed", seed)->capture_default_str();
  syn->add_option("--nan-fraction", nan_fraction, "random panels only")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_default_logger(spdlog::default_logger());

  try {
    if (*mine) return cmd_mine(config_path, data, resume, out_dir, dump_dir);
    if (*eval) return cmd_eval(expr_text, data, splits, horizon);
    if (*bt) return cmd_backtest(graph_path, data, config_path, split, curve_path);
    if (*exp) return cmd_export(graph_path, format, out_path);
    if (*rep) return cmd_report(run_dir, out_path);
    if (*syn) return cmd_synth(kind, out_path, dates, assets, seed, nan_fraction);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
