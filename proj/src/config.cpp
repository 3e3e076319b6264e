#include "dagalpha/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "dagalpha/error.hpp"

namespace dagalpha {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (allowed.count(key) == 0) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Date date_value(const json& j, const std::string& where) {
  const auto d = parse_date(j.get<std::string>());
  if (!d) throw ConfigError("bad date in " + where + ": " + j.dump());
  return *d;
}

std::optional<DateRange> range_value(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const json& r = j.at(key);
  if (!r.is_array() || r.size() != 2) throw ConfigError(std::string("split '") + key + "' must be [start, end]");
  return DateRange{date_value(r[0], key), date_value(r[1], key)};
}

json range_json(const std::optional<DateRange>& r) {
  return json::array({format_date(r->start), format_date(r->end)});
}

}  // namespace

MiningConfig config_from_json(const json& doc) {
  MiningConfig c;
  try {
    check_keys(doc, {"seed", "iterations", "stagnation_limit", "horizon", "retriever", "pool", "generator",
                     "admission", "splits", "integrator", "backtest", "provider", "seeds"},
               "config");
    get(doc, "seed", c.seed);
    get(doc, "iterations", c.iterations);
    get(doc, "stagnation_limit", c.stagnation_limit);
    get(doc, "horizon", c.horizon);
    if (doc.contains("retriever")) {
      const json& j = doc.at("retriever");
      check_keys(j, {"gamma", "omega", "k", "eps_q"}, "retriever");
      get(j, "gamma", c.retriever.gamma);
      get(j, "omega", c.retriever.omega);
      get(j, "k", c.retriever.k);
      get(j, "eps_q", c.retriever.eps_q);
    }
    if (doc.contains("pool")) {
      const json& j = doc.at("pool");
      check_keys(j, {"capacity", "max_len", "float_whitelist"}, "pool");
      get(j, "capacity", c.capacity);
      get(j, "max_len", c.max_len);
      get(j, "float_whitelist", c.float_whitelist);
    }
    if (doc.contains("generator")) {
      const json& j = doc.at("generator");
      check_keys(j, {"m", "temperature", "max_tokens"}, "generator");
      get(j, "m", c.generator.m);
      get(j, "temperature", c.generator.temperature);
      get(j, "max_tokens", c.generator.max_tokens);
    }
    if (doc.contains("admission")) {
      const json& j = doc.at("admission");
      check_keys(j, {"tau_q", "tau_d"}, "admission");
      get(j, "tau_q", c.admission.tau_q);
      get(j, "tau_d", c.admission.tau_d);
    }
    c.admission.eps_q = c.retriever.eps_q;
    if (doc.contains("splits")) {
      const json& j = doc.at("splits");
      check_keys(j, {"train", "valid", "test", "train_frac", "valid_frac"}, "splits");
      c.splits.train = range_value(j, "train");
      c.splits.valid = range_value(j, "valid");
      c.splits.test = range_value(j, "test");
      get(j, "train_frac", c.splits.train_frac);
      get(j, "valid_frac", c.splits.valid_frac);
    }
    if (doc.contains("integrator")) {
      const json& j = doc.at("integrator");
      check_keys(j, {"window", "threshold", "rebalance", "embargo"}, "integrator");
      get(j, "window", c.integrator.window);
      get(j, "threshold", c.integrator.threshold);
      get(j, "rebalance", c.integrator.rebalance);
      get(j, "embargo", c.integrator.embargo);
    }
    if (doc.contains("backtest")) {
      const json& j = doc.at("backtest");
      check_keys(j, {"top_frac", "hold", "cost", "periods_per_year", "risk_free"}, "backtest");
      get(j, "top_frac", c.backtest.top_frac);
      get(j, "hold", c.backtest.hold);
      get(j, "cost", c.backtest.cost);
      get(j, "periods_per_year", c.backtest.periods_per_year);
      get(j, "risk_free", c.backtest.risk_free);
    }
    if (doc.contains("provider")) {
      const json& j = doc.at("provider");
      check_keys(j, {"kind", "endpoint", "api_key", "chat_model", "embedding_model", "timeout_s", "max_in_flight",
                     "max_attempts", "backoff_ms", "json_attempts", "embedding_dim", "mutation_table", "fixtures",
                     "table_probability", "corrupt_probability"},
                 "provider");
      auto& p = c.provider;
      get(j, "kind", p.kind);
      get(j, "endpoint", p.http.endpoint);
      get(j, "api_key", p.http.api_key);
      get(j, "chat_model", p.http.chat_model);
      get(j, "embedding_model", p.http.embedding_model);
      if (j.contains("timeout_s")) p.http.timeout = std::chrono::seconds(j.at("timeout_s").get<long>());
      get(j, "max_in_flight", p.max_in_flight);
      get(j, "max_attempts", p.retry.max_attempts);
      if (j.contains("backoff_ms")) p.retry.backoff = std::chrono::milliseconds(j.at("backoff_ms").get<long>());
      get(j, "json_attempts", p.retry.json_attempts);
      get(j, "embedding_dim", p.embedding_dim);
      get(j, "mutation_table", p.mutation_table);
      get(j, "fixtures", p.fixtures);
      get(j, "table_probability", p.table_probability);
      get(j, "corrupt_probability", p.corrupt_probability);
    }
    if (doc.contains("seeds")) {
      for (const auto& s : doc.at("seeds")) {
        check_keys(s, {"expr", "topic", "explanation"}, "seed entry");
        SeedSpec spec;
        spec.expr = s.at("expr").get<std::string>();
        get(s, "topic", spec.topic);
        get(s, "explanation", spec.explanation);
        c.seeds.push_back(std::move(spec));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  validate(c);
  return c;
}

json config_to_json(const MiningConfig& c) {
  json splits = {{"train_frac", c.splits.train_frac}, {"valid_frac", c.splits.valid_frac}};
  if (c.splits.train) splits["train"] = range_json(c.splits.train);
  if (c.splits.valid) splits["valid"] = range_json(c.splits.valid);
  if (c.splits.test) splits["test"] = range_json(c.splits.test);
  json seeds = json::array();
  for (const auto& s : c.seeds) seeds.push_back({{"expr", s.expr}, {"topic", s.topic}, {"explanation", s.explanation}});
  const auto& p = c.provider;
  return {
      {"seed", c.seed},
      {"iterations", c.iterations},
      {"stagnation_limit", c.stagnation_limit},
      {"horizon", c.horizon},
      {"retriever", {{"gamma", c.retriever.gamma}, {"omega", c.retriever.omega}, {"k", c.retriever.k},
                     {"eps_q", c.retriever.eps_q}}},
      {"pool", {{"capacity", c.capacity}, {"max_len", c.max_len}, {"float_whitelist", c.float_whitelist}}},
      {"generator", {{"m", c.generator.m}, {"temperature", c.generator.temperature},
                     {"max_tokens", c.generator.max_tokens}}},
      {"admission", {{"tau_q", c.admission.tau_q}, {"tau_d", c.admission.tau_d}}},
      {"splits", splits},
      {"integrator", {{"window", c.integrator.window}, {"threshold", c.integrator.threshold},
                      {"rebalance", c.integrator.rebalance}, {"embargo", c.integrator.embargo}}},
      {"backtest", {{"top_frac", c.backtest.top_frac}, {"hold", c.backtest.hold}, {"cost", c.backtest.cost},
                    {"periods_per_year", c.backtest.periods_per_year}, {"risk_free", c.backtest.risk_free}}},
      // The credential is deliberately not echoed.
      {"provider", {{"kind", p.kind}, {"endpoint", p.http.endpoint}, {"chat_model", p.http.chat_model},
                    {"embedding_model", p.http.embedding_model}, {"timeout_s", p.http.timeout.count()},
                    {"max_in_flight", p.max_in_flight}, {"max_attempts", p.retry.max_attempts},
                    {"backoff_ms", p.retry.backoff.count()}, {"json_attempts", p.retry.json_attempts},
                    {"embedding_dim", p.embedding_dim}, {"mutation_table", p.mutation_table},
                    {"fixtures", p.fixtures}, {"table_probability", p.table_probability},
                    {"corrupt_probability", p.corrupt_probability}}},
      {"seeds", seeds},
  };
}

MiningConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

void validate(const MiningConfig& c) {
  validate(c.retriever);
  validate(c.integrator);
  validate(c.backtest);
  if (c.iterations < 0) throw ConfigError("iterations must be non-negative");
  if (c.stagnation_limit < 1) throw ConfigError("stagnation_limit must be at least 1");
  if (c.horizon < 1) throw ConfigError("horizon must be at least 1");
  if (c.capacity < 1) throw ConfigError("capacity must be at least 1");
  if (c.max_len < 1) throw ConfigError("max_len must be at least 1");
  if (c.generator.m < 1) throw ConfigError("generator m must be at least 1");
  if (!(c.admission.tau_q > 0.0)) throw ConfigError("tau_q must be positive");
  if (!(c.admission.tau_d > 0.0 && c.admission.tau_d <= 1.0)) throw ConfigError("tau_d must lie in (0, 1]");
  if (c.provider.kind != "mock" && c.provider.kind != "http") {
    throw ConfigError("provider kind must be 'mock' or 'http'");
  }
  if (c.provider.kind == "http" && c.provider.http.endpoint.empty()) {
    throw ConfigError("http provider needs an endpoint");
  }
  if (c.provider.max_in_flight < 1 || c.provider.max_in_flight > 1024) {
    throw ConfigError("max_in_flight must lie in [1, 1024]");
  }
  if (c.provider.embedding_dim < 1) throw ConfigError("embedding_dim must be positive");
  const auto& s = c.splits;
  if (!(s.train_frac > 0.0) || !(s.valid_frac >= 0.0) || s.train_frac + s.valid_frac > 1.0) {
    throw ConfigError("split fractions must satisfy 0 < train, 0 <= valid, train + valid <= 1");
  }
  if (s.train.has_value() != s.test.has_value() || (s.valid && !s.train)) {
    throw ConfigError("explicit splits need at least train and test ranges");
  }
  for (const auto* r : {&s.train, &s.valid, &s.test}) {
    if (*r && (*r)->end < (*r)->start) throw ConfigError("split range ends before it starts");
  }
  if (s.train && s.valid && !(s.train->end < s.valid->start)) throw ConfigError("train and valid splits overlap");
  if (s.valid && s.test && !(s.valid->end < s.test->start)) throw ConfigError("valid and test splits overlap");
  if (s.train && s.test && !(s.train->end < s.test->start)) throw ConfigError("train and test splits overlap");
}

void apply_env_overrides(MiningConfig& config) {
  if (const char* key = std::getenv("DAGALPHA_API_KEY"); key != nullptr && *key != '\0') {
    config.provider.http.api_key = key;
  }
}

SplitRows resolve_splits(const SplitConfig& s, const Panel& panel) {
  const std::size_t n = panel.num_dates();
  SplitRows rows;
  if (s.train) {
    auto to_rows = [&](const std::optional<DateRange>& r) {
      if (!r) return RowRange{};
      const std::size_t first = panel.lower_bound(r->start);
      std::size_t last = first;
      while (last < n && !(r->end < panel.dates()[last])) ++last;
      return RowRange{first, last - first};
    };
    rows.train = to_rows(s.train);
    rows.valid = to_rows(s.valid);
    rows.test = to_rows(s.test);
  } else {
    const auto train = static_cast<std::size_t>(static_cast<double>(n) * s.train_frac);
    const auto valid = static_cast<std::size_t>(static_cast<double>(n) * s.valid_frac);
    rows.train = {0, train};
    rows.valid = {train, valid};
    rows.test = {train + valid, n - train - valid};
  }
  if (rows.train.count == 0) throw ConfigError("training split selects no panel dates");
  return rows;
}

}  // namespace dagalpha
