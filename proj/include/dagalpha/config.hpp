#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dagalpha/backtest.hpp"
#include "dagalpha/gatekeeper.hpp"
#include "dagalpha/generator.hpp"
#include "dagalpha/integrator.hpp"
#include "dagalpha/panel.hpp"
#include "dagalpha/providers.hpp"
#include "dagalpha/retriever.hpp"

namespace dagalpha {

struct SeedSpec {
  std::string expr;
  std::string topic;
  std::string explanation;
};

struct DateRange {
  Date start;
  Date end;  ///< inclusive
};

struct SplitConfig {
  std::optional<DateRange> train, valid, test;
  /// Used when no explicit ranges are given.
  double train_frac = 0.6;
  double valid_frac = 0.2;
};

struct ProviderConfig {
  std::string kind = "mock";  ///< "mock" or "http"
  HttpSettings http;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  // mock only
  std::size_t embedding_dim = 256;
  std::vector<std::string> mutation_table;
  std::map<std::string, std::string> fixtures;
  double table_probability = 0.5;
  double corrupt_probability = 0.1;
};

struct MiningConfig {
  std::uint64_t seed = 0;
  int iterations = 30;
  int stagnation_limit = 10;
  int horizon = 20;
  RetrieverConfig retriever;
  std::size_t capacity = 50;
  std::size_t max_len = 40;
  std::vector<double> float_whitelist = default_float_whitelist();
  GeneratorConfig generator;
  AdmissionThresholds admission;
  SplitConfig splits;
  IntegratorConfig integrator;
  BacktestConfig backtest;
  ProviderConfig provider;
  std::vector<SeedSpec> seeds;
};

/// Parses a config document. Unknown keys and out-of-range values throw ConfigError.
MiningConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const MiningConfig& config);
MiningConfig load_config_file(const std::string& path);

/// Validates cross-field constraints; throws ConfigError.
void validate(const MiningConfig& config);

/// Fills the provider credential from DAGALPHA_API_KEY when that is set.
void apply_env_overrides(MiningConfig& config);

struct RowRange {
  std::size_t first = 0;
  std::size_t count = 0;
};

struct SplitRows {
  RowRange train, valid, test;
};

/// Maps the configured splits to panel rows. Ranges must be ordered and
/// disjoint, and the training range non-empty.
SplitRows resolve_splits(const SplitConfig& splits, const Panel& panel);

}  // namespace dagalpha
