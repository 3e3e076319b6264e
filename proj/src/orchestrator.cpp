#include "dagalpha/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "dagalpha/backtest.hpp"
#include "dagalpha/engine.hpp"
#include "dagalpha/error.hpp"
#include "dagalpha/gatekeeper.hpp"
#include "dagalpha/generator.hpp"
#include "dagalpha/integrator.hpp"
#include "dagalpha/retriever.hpp"

namespace dagalpha {

using nlohmann::json;

namespace {

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
double null_to_nan(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json metric_json(const MetricReport& m) {
  return {{"ic", nan_to_null(m.ic)},       {"icir", nan_to_null(m.icir)},   {"ric", nan_to_null(m.ric)},
          {"ricir", nan_to_null(m.ricir)}, {"valid_days", m.valid_days}};
}

json perf_json(const Performance& p) {
  return {{"ar", nan_to_null(p.ar)}, {"mdd", nan_to_null(p.mdd)}, {"sr", nan_to_null(p.sr)}};
}

std::vector<json> read_jsonl(const std::string& path) {
  std::vector<json> out;
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaError(path + ": line " + std::to_string(n) + " is not JSON");
    out.push_back(std::move(j));
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<json>& records) {
  std::string text;
  for (const auto& r : records) text += r.dump() + "\n";
  write_file_atomic(path, text);
}

void append_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot append to '" + path + "'");
  out << text;
}

std::string fmt_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

json IterationRecord::to_json() const {
  return {{"iteration", iteration},
          {"parents", parents},
          {"generated", generated},
          {"screened", screened},
          {"evaluated", evaluated},
          {"admitted", admitted},
          {"evicted", evicted},
          {"generation_failures", generation_failures},
          {"active", active},
          {"candidate_evaluations", candidate_evaluations},
          {"pool_mean_quality", pool_mean_quality},
          {"pool_max_quality", pool_max_quality},
          {"pool_mean_ic", nan_to_null(pool_mean_ic)},
          {"pool_max_ic", nan_to_null(pool_max_ic)}};
}

IterationRecord IterationRecord::from_json(const json& j) {
  IterationRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.parents = j.at("parents").get<std::vector<NodeId>>();
  r.generated = j.at("generated").get<std::size_t>();
  r.screened = j.at("screened").get<std::size_t>();
  r.evaluated = j.at("evaluated").get<std::size_t>();
  r.admitted = j.at("admitted").get<std::size_t>();
  r.evicted = j.at("evicted").get<std::size_t>();
  r.generation_failures = j.at("generation_failures").get<std::size_t>();
  r.active = j.at("active").get<std::size_t>();
  r.candidate_evaluations = j.at("candidate_evaluations").get<std::size_t>();
  r.pool_mean_quality = j.at("pool_mean_quality").get<double>();
  r.pool_max_quality = j.at("pool_max_quality").get<double>();
  r.pool_mean_ic = null_to_nan(j.at("pool_mean_ic"));
  r.pool_max_ic = null_to_nan(j.at("pool_max_ic"));
  return r;
}

json RunReport::to_json() const {
  json iters = json::array();
  for (const auto& r : iterations) iters.push_back(r.to_json());
  json sp = json::object();
  for (const auto& s : splits) {
    sp[s.name] = {{"first_row", s.rows.first},
                  {"rows", s.rows.count},
                  {"mega", s.mega ? metric_json(*s.mega) : json(nullptr)},
                  {"backtest", s.backtest ? perf_json(*s.backtest) : json(nullptr)}};
  }
  return {{"status", status},
          {"iterations_completed", iterations_completed},
          {"candidate_evaluations", candidate_evaluations},
          {"iterations", iters},
          {"splits", sp},
          {"final_pool", final_pool}};
}

Miner::Miner(MiningConfig config, const Panel& panel, ChatProvider& chat, EmbeddingProvider& embedder,
             MinerOptions options)
    : config_(std::move(config)), panel_(panel), options_(std::move(options)), paths_{options_.out_dir} {
  validate(config_);
  if (static_cast<std::size_t>(config_.horizon) >= panel_.num_dates()) {
    throw ConfigError("forward-return horizon needs more panel dates");
  }
  returns_ = forward_returns(panel_, config_.horizon);
  rows_ = resolve_splits(config_.splits, panel_);
  fingerprint_ = panel_.fingerprint();
  graph_ = FactorGraph(config_.capacity);
  store_ = std::make_unique<FactorStore>(rows_.train.first, rows_.train.count);
  if (!options_.out_dir.empty()) {
    std::filesystem::create_directories(options_.out_dir);
    run_log_ = std::make_unique<RunLog>(paths_.run_log());
  } else {
    run_log_ = std::make_unique<RunLog>();
  }
  gate_ = std::make_shared<InFlightGate>(config_.provider.max_in_flight);
  chat_ = std::make_unique<ChatClient>(chat, config_.provider.retry, gate_, run_log_.get(), options_.dump_prompts_dir);
  embed_ = std::make_unique<EmbeddingClient>(embedder, config_.provider.retry, gate_, run_log_.get());
}

Miner::~Miner() = default;

Matrix Miner::evaluate_full(const Expr& expr) const { return evaluate(expr, panel_); }

double Miner::train_quality(MatrixView values) const {
  return quality(values.slice_rows(rows_.train.first, rows_.train.count),
                 returns_.values.view().slice_rows(rows_.train.first, rows_.train.count));
}

double Miner::train_ic(MatrixView values) const {
  const auto daily = daily_cs_corr(values.slice_rows(rows_.train.first, rows_.train.count),
                                   returns_.values.view().slice_rows(rows_.train.first, rows_.train.count),
                                   CorrMethod::pearson);
  const auto s = series_stats(daily.values);
  return s.count == 0 ? kNaN : std::fabs(s.mean);
}

void Miner::add_to_store(NodeId id, const Matrix* values) {
  const FactorNode& n = graph_.node(id);
  Matrix v = values != nullptr ? *values : evaluate_full(n.expr);
  std::vector<double> emb;
  if (n.active) emb = embed_->embed(n.explanation.empty() ? render(n.expr) : n.explanation);
  const double ic = train_ic(v);
  store_->put(id, std::move(v), std::move(emb), ic);
}

std::string Miner::topic_of(NodeId id) const {
  const auto trace = graph_.trace(id);
  const auto it = topics_.find(trace.front()->id);
  return it == topics_.end() || it->second.empty() ? std::string("general alpha") : it->second;
}

void Miner::log(const json& record) { run_log_->append(record); }

json Miner::checkpoint_json() const {
  json doc = graph_.to_json();
  json topics = json::object();
  for (const auto& [id, t] : topics_) topics[std::to_string(id)] = t;
  doc["iteration"] = iteration_;
  doc["panel_fingerprint"] = fingerprint_;
  doc["stagnation"] = stagnation_;
  doc["candidate_evaluations"] = candidate_evaluations_;
  doc["topics"] = topics;
  return doc;
}

void Miner::save_checkpoint() const {
  if (options_.out_dir.empty()) return;
  write_file_atomic(paths_.checkpoint(), checkpoint_json().dump(2) + "\n");
}

void Miner::fill_pool_stats(IterationRecord& r) const {
  const auto ids = graph_.active_ids();
  r.active = ids.size();
  r.candidate_evaluations = candidate_evaluations_;
  if (ids.empty()) return;
  double qsum = 0.0, icsum = 0.0;
  std::size_t icn = 0;
  r.pool_max_ic = kNaN;
  for (NodeId id : ids) {
    const double q = graph_.node(id).quality;
    qsum += q;
    r.pool_max_quality = std::max(r.pool_max_quality, q);
    const double ic = store_->train_ic(id);
    if (!std::isnan(ic)) {
      icsum += ic;
      ++icn;
      r.pool_max_ic = std::isnan(r.pool_max_ic) ? ic : std::max(r.pool_max_ic, ic);
    }
  }
  r.pool_mean_quality = qsum / static_cast<double>(ids.size());
  r.pool_mean_ic = icn == 0 ? kNaN : icsum / static_cast<double>(icn);
}

void Miner::start() {
  if (graph_.size() != 0) throw ArgumentError("mining run already started");
  if (config_.seeds.empty()) throw ConfigError("config lists no seed expressions");
  if (!options_.out_dir.empty()) {
    for (const auto& p : {paths_.run_log(), paths_.iterations()}) write_file_atomic(p, "");
    write_file_atomic(paths_.scores(), "iteration,node_id,is_leaf,prior,likelihood,total\n");
  }
  for (const auto& seed : config_.seeds) {
    Expr e;
    try {
      e = parse_expr(seed.expr);
    } catch (const ParseError& err) {
      throw ConfigError("seed '" + seed.expr + "' does not parse: " + err.what());
    }
    Matrix values = evaluate_full(e);
    const MatrixView train = values.view().slice_rows(rows_.train.first, rows_.train.count);
    const bool any_valid = std::any_of(train.data(), train.data() + train.rows() * train.cols(),
                                       [](double v) { return !std::isnan(v); });
    if (!any_valid) throw ConfigError("seed '" + seed.expr + "' has no valid values on the training split");
    const std::string explanation =
        seed.explanation.empty() ? "Seed factor " + render(e) + (seed.topic.empty() ? "" : " on " + seed.topic)
                                 : seed.explanation;
    const double q = train_quality(values);
    NodeId id = 0;
    try {
      id = graph_.insert_node(e, explanation, std::nullopt, q, 0);
    } catch (const DuplicateError&) {
      throw ConfigError("seed '" + seed.expr + "' is listed twice");
    }
    topics_[id] = seed.topic;
    add_to_store(id, &values);
    log({{"type", "seed"}, {"id", id}, {"expr", render(e)}, {"explanation", explanation}, {"quality", q},
         {"topic", seed.topic}});
  }
  graph_.evict_to_capacity();
  IterationRecord r;
  fill_pool_stats(r);
  history_.push_back(r);
  if (!options_.out_dir.empty()) append_text(paths_.iterations(), r.to_json().dump() + "\n");
  save_checkpoint();
}

void Miner::resume(const std::string& checkpoint_path) {
  if (graph_.size() != 0) throw ArgumentError("mining run already started");
  std::ifstream in(checkpoint_path);
  if (!in) throw NotFoundError("cannot open checkpoint '" + checkpoint_path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  for (const char* key : {"iteration", "panel_fingerprint", "stagnation", "candidate_evaluations", "topics"}) {
    if (!doc.contains(key)) throw SchemaError(std::string("checkpoint lacks '") + key + "'");
  }
  if (doc.at("panel_fingerprint").get<std::string>() != fingerprint_) {
    throw ConfigError("checkpoint was written for a different panel (fingerprint mismatch)");
  }
  FactorGraph g = FactorGraph::from_json(doc, config_.capacity);
  if (g.active_size() > config_.capacity) {
    throw ConfigError("capacity " + std::to_string(config_.capacity) + " is below the checkpoint's " +
                      std::to_string(g.active_size()) + " active factors");
  }
  graph_ = std::move(g);
  iteration_ = doc.at("iteration").get<int>();
  stagnation_ = doc.at("stagnation").get<int>();
  candidate_evaluations_ = doc.at("candidate_evaluations").get<std::size_t>();
  stagnated_ = stagnation_ >= config_.stagnation_limit;
  for (const auto& [key, topic] : doc.at("topics").items()) topics_[std::stoull(key)] = topic.get<std::string>();
  for (NodeId id : graph_.all_ids()) add_to_store(id, nullptr);

  // Drop anything logged after the checkpoint so the audit trail matches it.
  if (!options_.out_dir.empty()) {
    auto keep = [&](const json& r) { return !r.contains("iteration") || r.at("iteration").get<int>() <= iteration_; };
    if (std::filesystem::exists(paths_.run_log())) {
      auto recs = read_jsonl(paths_.run_log());
      std::vector<json> kept;
      for (auto& r : recs) {
        if (r.value("type", "") == "chat" || r.value("type", "") == "embed" || keep(r)) kept.push_back(std::move(r));
      }
      write_jsonl(paths_.run_log(), kept);
    }
    if (std::filesystem::exists(paths_.iterations())) {
      std::vector<json> kept;
      for (auto& r : read_jsonl(paths_.iterations())) {
        if (keep(r)) {
          history_.push_back(IterationRecord::from_json(r));
          kept.push_back(std::move(r));
        }
      }
      write_jsonl(paths_.iterations(), kept);
    }
    if (!std::filesystem::exists(paths_.scores())) {
      write_file_atomic(paths_.scores(), "iteration,node_id,is_leaf,prior,likelihood,total\n");
    }
  }
  log({{"type", "resume"}, {"iteration", iteration_}});
}

IterationRecord Miner::step() {
  if (graph_.active_size() == 0) throw ArgumentError("mining needs a started or resumed run");
  const int it = iteration_ + 1;
  std::vector<json> events;
  IterationRecord rec;
  rec.iteration = it;

  const Selection sel = select_parents(graph_, *store_, config_.retriever);
  rec.parents = sel.selected;
  std::string score_rows;
  json scored = json::array();
  for (const auto& s : sel.scores) {
    score_rows += std::to_string(it) + "," + std::to_string(s.id) + "," + (s.is_leaf ? "1" : "0") + "," +
                  fmt_double(s.prior) + "," + fmt_double(s.likelihood) + "," + fmt_double(s.total) + "\n";
  }
  for (std::size_t i = 0; i < sel.selected.size(); ++i) {
    const auto& s = sel.scores[i];
    scored.push_back({{"id", s.id}, {"prior", s.prior}, {"likelihood", s.likelihood}, {"total", s.total},
                      {"is_leaf", s.is_leaf}});
  }
  events.push_back({{"type", "select"}, {"iteration", it}, {"ids", sel.selected}, {"scores", scored}});

  // Generation fans out per parent; results merge in selection order.
  struct Outcome {
    SynthesisResult synthesis;
    std::vector<std::string> strategies;
    std::string failure;
  };
  std::vector<std::future<Outcome>> futures;
  for (NodeId pid : sel.selected) {
    futures.push_back(std::async(std::launch::async, [this, pid] {
      Outcome o;
      const FactorNode& parent = graph_.node(pid);
      const auto trace = graph_.trace(pid);
      const std::string topic = topic_of(pid);
      Generator gen(*chat_, config_.generator);
      try {
        o.strategies = gen.propose_strategies(parent, trace, topic);
        o.synthesis = gen.synthesize(parent, o.strategies, trace, topic);
      } catch (const GenerationFailure& e) {
        o.failure = e.what();
      }
      return o;
    }));
  }
  std::vector<Outcome> outcomes;
  std::exception_ptr provider_failure;
  for (auto& f : futures) {
    try {
      outcomes.push_back(f.get());
    } catch (...) {
      if (!provider_failure) provider_failure = std::current_exception();
    }
  }
  if (provider_failure) {
    spdlog::error("provider failure in iteration {}; the last checkpoint (iteration {}) is the resume point", it,
                  iteration_);
    std::rethrow_exception(provider_failure);
  }

  std::vector<CandidateFactor> candidates;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.failure.empty()) {
      ++rec.generation_failures;
      events.push_back({{"type", "generation_failure"}, {"iteration", it}, {"parent", sel.selected[i]},
                        {"reason", o.failure}});
      continue;
    }
    for (const auto& d : o.synthesis.dropped) {
      events.push_back({{"type", "drop"}, {"iteration", it}, {"parent", sel.selected[i]}, {"text", d.text},
                        {"reason", d.reason}});
    }
    rec.generated += o.synthesis.candidates.size() + o.synthesis.dropped.size();
    for (auto& c : o.synthesis.candidates) candidates.push_back(std::move(c));
  }

  LintOptions lint_opts;
  lint_opts.max_len = config_.max_len;
  lint_opts.float_whitelist = config_.float_whitelist;
  ScreenResult screened = screen(std::move(candidates), lint_opts, graph_);
  for (const auto& r : screened.rejected) {
    events.push_back({{"type", "screen_reject"}, {"iteration", it}, {"text", r.text}, {"reason", r.reason}});
  }
  rec.screened = screened.kept.size();

  struct Scored {
    CandidateFactor* cand;
    Matrix values;
    double quality;
  };
  std::vector<Scored> evaluated;
  for (auto& c : screened.kept) {
    Matrix v = evaluate_full(c.expr);
    const double q = train_quality(v);
    evaluated.push_back({&c, std::move(v), q});
  }
  rec.evaluated = evaluated.size();
  candidate_evaluations_ += evaluated.size();
  std::stable_sort(evaluated.begin(), evaluated.end(),
                   [](const Scored& a, const Scored& b) { return a.quality > b.quality; });

  const std::size_t tf = rows_.train.first, tc = rows_.train.count;
  for (auto& s : evaluated) {
    const MatrixView train = s.values.view().slice_rows(tf, tc);
    double max_corr = kNaN;
    for (NodeId id : graph_.active_ids()) {
      const double c = std::fabs(factor_corr(train, store_->train_values(id)));
      if (!std::isnan(c)) max_corr = std::isnan(max_corr) ? c : std::max(max_corr, c);
    }
    const FactorNode& parent = graph_.node(s.cand->parent);
    const AdmissionDecision d = admit(s.quality, parent.quality, max_corr, config_.admission);
    const std::string text = render(s.cand->expr);
    json rec_json = {{"iteration", it},
                     {"parent", s.cand->parent},
                     {"expr", text},
                     {"explanation", s.cand->explanation},
                     {"strategy", s.cand->strategy},
                     {"quality", s.quality},
                     {"gain", d.gain},
                     {"max_abs_pool_corr", d.max_abs_pool_corr},
                     {"branch", branch_name(d.branch)}};
    if (!d.admitted) {
      rec_json["type"] = "reject";
      events.push_back(std::move(rec_json));
      continue;
    }
    const NodeId id = graph_.insert_node(s.cand->expr, s.cand->explanation, s.cand->parent, s.quality, it);
    add_to_store(id, &s.values);
    ++rec.admitted;
    rec_json["type"] = "admit";
    rec_json["id"] = id;
    events.push_back(std::move(rec_json));
  }

  const auto evicted = graph_.evict_to_capacity();
  rec.evicted = evicted.size();
  events.push_back({{"type", "evict"}, {"iteration", it}, {"ids", evicted}});

  stagnation_ = rec.admitted == 0 ? stagnation_ + 1 : 0;
  stagnated_ = stagnation_ >= config_.stagnation_limit;
  iteration_ = it;
  fill_pool_stats(rec);
  history_.push_back(rec);

  for (const auto& e : events) log(e);
  if (!options_.out_dir.empty()) {
    append_text(paths_.scores(), score_rows);
    append_text(paths_.iterations(), rec.to_json().dump() + "\n");
  }
  save_checkpoint();
  spdlog::info("iteration {}: {} generated, {} screened, {} admitted, {} evicted, pool {} (max quality {:.4f})", it,
               rec.generated, rec.screened, rec.admitted, rec.evicted, rec.active, rec.pool_max_quality);
  return rec;
}

RunReport Miner::run() {
  while (iteration_ < config_.iterations && !stagnated_) step();
  if (stagnated_) spdlog::info("stopping early: {} iterations without an admission", stagnation_);
  return final_report();
}

RunReport Miner::final_report() {
  RunReport rep;
  rep.status = stagnated_ ? "stagnated" : "completed";
  rep.iterations_completed = iteration_;
  rep.candidate_evaluations = candidate_evaluations_;
  rep.iterations = history_;

  std::vector<MemberFactor> members;
  rep.final_pool = json::array();
  for (NodeId id : graph_.active_ids()) {
    members.push_back({id, store_->values(id)});
    const FactorNode& n = graph_.node(id);
    rep.final_pool.push_back({{"id", id},
                              {"expr", render(n.expr)},
                              {"quality", n.quality},
                              {"train_ic", nan_to_null(store_->train_ic(id))},
                              {"depth", n.depth},
                              {"parent_id", n.parent ? json(*n.parent) : json(nullptr)}});
  }
  const MegaResult mega = mega_factor(members, returns_.values, config_.integrator);

  const std::pair<const char*, RowRange> splits[] = {
      {"train", rows_.train}, {"valid", rows_.valid}, {"test", rows_.test}};
  for (const auto& [name, rows] : splits) {
    SplitSummary s;
    s.name = name;
    s.rows = rows;
    if (rows.count > 0) {
      const MatrixView m = mega.values.view().slice_rows(rows.first, rows.count);
      try {
        s.mega = ic_suite(m, returns_.values.view().slice_rows(rows.first, rows.count));
      } catch (const ArgumentError&) {
        s.mega.reset();
      }
      const BacktestResult bt = simulate(m, panel_.close().view().slice_rows(rows.first, rows.count), config_.backtest);
      s.backtest = bt.perf;
      if (!options_.out_dir.empty()) {
        std::ofstream out(paths_.curve(name));
        write_curve_csv(out, panel_, rows.first, bt);
      }
    }
    rep.splits.push_back(std::move(s));
  }
  if (!options_.out_dir.empty()) {
    std::ofstream w(paths_.weights());
    write_weights_csv(w, panel_, mega.history);
    write_file_atomic(paths_.report(), rep.to_json().dump(2) + "\n");
  }
  return rep;
}

ProviderPair make_providers(const MiningConfig& config) {
  ProviderPair p;
  if (config.provider.kind == "http") {
    p.chat = std::make_unique<HttpChatProvider>(config.provider.http);
    p.embedder = std::make_unique<HttpEmbeddingProvider>(config.provider.http);
  } else {
    MockChatOptions o;
    o.seed = config.seed;
    o.fixtures = config.provider.fixtures;
    o.mutation_table = config.provider.mutation_table;
    o.table_probability = config.provider.table_probability;
    o.corrupt_probability = config.provider.corrupt_probability;
    p.chat = std::make_unique<MockChatProvider>(std::move(o));
    p.embedder = std::make_unique<MockEmbeddingProvider>(config.seed, config.provider.embedding_dim);
  }
  return p;
}

FactorGraph replay_run_log(const std::string& path, std::size_t capacity) {
  if (!std::filesystem::exists(path)) throw NotFoundError("no run log at '" + path + "'");
  FactorGraph g(capacity);
  auto expect_id = [](NodeId got, const json& r) {
    if (got != r.at("id").get<NodeId>()) {
      throw SchemaError("replay assigned id " + std::to_string(got) + " where the log has " + r.at("id").dump());
    }
  };
  try {
    for (const auto& r : read_jsonl(path)) {
      const std::string type = r.value("type", "");
      if (type == "seed") {
        expect_id(g.insert_node(parse_expr(r.at("expr").get<std::string>()), r.at("explanation").get<std::string>(),
                                std::nullopt, r.at("quality").get<double>(), 0),
                  r);
      } else if (type == "select") {
        for (NodeId id : r.at("ids").get<std::vector<NodeId>>()) g.record_retrieval(id);
      } else if (type == "admit") {
        expect_id(g.insert_node(parse_expr(r.at("expr").get<std::string>()), r.at("explanation").get<std::string>(),
                                r.at("parent").get<NodeId>(), r.at("quality").get<double>(),
                                r.at("iteration").get<int>()),
                  r);
      } else if (type == "evict") {
        const auto replayed = g.evict_to_capacity();
        if (replayed != r.at("ids").get<std::vector<NodeId>>()) {
          throw SchemaError("replayed evictions differ from the log in iteration " + r.at("iteration").dump());
        }
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed run log record: ") + e.what());
  }
  return g;
}

void write_iteration_csv(std::ostream& out, const std::string& run_dir) {
  const RunPaths paths{run_dir};
  if (!std::filesystem::exists(paths.iterations())) {
    throw NotFoundError("no iteration records in '" + run_dir + "'");
  }
  out << "iteration,candidate_evaluations,active,admitted,pool_mean_quality,pool_max_quality,pool_mean_ic,"
         "pool_max_ic\n";
  for (const auto& j : read_jsonl(paths.iterations())) {
    const auto r = IterationRecord::from_json(j);
    out << r.iteration << ',' << r.candidate_evaluations << ',' << r.active << ',' << r.admitted << ','
        << fmt_double(r.pool_mean_quality) << ',' << fmt_double(r.pool_max_quality) << ','
        << (std::isnan(r.pool_mean_ic) ? "" : fmt_double(r.pool_mean_ic)) << ','
        << (std::isnan(r.pool_max_ic) ? "" : fmt_double(r.pool_max_ic)) << '\n';
  }
}

std::string graph_to_dot(const FactorGraph& graph) {
  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  std::ostringstream out;
  out << "digraph factors {\n  node [shape=box, fontname=\"monospace\"];\n";
  for (NodeId id : graph.all_ids()) {
    const FactorNode& n = graph.node(id);
    out << "  n" << id << " [label=\"" << id << ": " << escape(render(n.expr)) << "\\nquality " << fmt_double(n.quality)
        << "\"" << (n.active ? "" : ", style=dashed") << "];\n";
  }
  for (NodeId id : graph.all_ids()) {
    const FactorNode& n = graph.node(id);
    if (n.parent) out << "  n" << *n.parent << " -> n" << id << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace dagalpha
