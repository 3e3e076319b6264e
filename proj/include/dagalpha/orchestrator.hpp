#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dagalpha/config.hpp"
#include "dagalpha/factor_store.hpp"
#include "dagalpha/graph.hpp"
#include "dagalpha/metrics.hpp"
#include "dagalpha/panel.hpp"
#include "dagalpha/providers.hpp"

namespace dagalpha {

inline constexpr int kCheckpointSchemaVersion = 1;

/// File layout of a run directory.
struct RunPaths {
  std::string dir;

  std::string checkpoint() const { return dir + "/checkpoint.json"; }
  std::string run_log() const { return dir + "/run_log.jsonl"; }
  std::string iterations() const { return dir + "/iterations.jsonl"; }
  std::string scores() const { return dir + "/scores.csv"; }
  std::string report() const { return dir + "/run_report.json"; }
  std::string weights() const { return dir + "/mega_weights.csv"; }
  std::string curve(const std::string& split) const { return dir + "/backtest_" + split + ".csv"; }
};

struct IterationRecord {
  int iteration = 0;
  std::vector<NodeId> parents;
  std::size_t generated = 0;
  std::size_t screened = 0;
  std::size_t evaluated = 0;
  std::size_t admitted = 0;
  std::size_t evicted = 0;
  std::size_t generation_failures = 0;
  std::size_t active = 0;
  /// Candidate evaluations since the run began.
  std::size_t candidate_evaluations = 0;
  double pool_mean_quality = 0.0;
  double pool_max_quality = 0.0;
  double pool_mean_ic = 0.0;
  double pool_max_ic = 0.0;

  nlohmann::json to_json() const;
  static IterationRecord from_json(const nlohmann::json& j);
};

struct SplitSummary {
  std::string name;
  RowRange rows;
  std::optional<MetricReport> mega;
  std::optional<Performance> backtest;
};

struct RunReport {
  std::string status;  ///< "completed" or "stagnated"
  int iterations_completed = 0;
  std::size_t candidate_evaluations = 0;
  std::vector<IterationRecord> iterations;
  std::vector<SplitSummary> splits;
  nlohmann::json final_pool;

  nlohmann::json to_json() const;
};

struct MinerOptions {
  /// Run directory; empty keeps everything in memory.
  std::string out_dir;
  /// Writes every assembled prompt and reply here when set.
  std::string dump_prompts_dir;
};

/// The closed mining loop. Owns the graph; every mutation happens on the
/// calling thread.
class Miner {
 public:
  Miner(MiningConfig config, const Panel& panel, ChatProvider& chat, EmbeddingProvider& embedder,
        MinerOptions options = {});
  ~Miner();

  /// Inserts and scores the configured seeds, then writes the first checkpoint.
  void start();
  /// Restores graph and counters from a checkpoint written for the same panel.
  void resume(const std::string& checkpoint_path);
  /// Iterates until the budget or the stagnation limit, then builds the report.
  RunReport run();

  /// One loop iteration; returns its record.
  IterationRecord step();
  RunReport final_report();

  const FactorGraph& graph() const { return graph_; }
  const FactorStore& store() const { return *store_; }
  const ReturnMatrix& returns() const { return returns_; }
  const SplitRows& split_rows() const { return rows_; }
  int iteration() const { return iteration_; }
  nlohmann::json checkpoint_json() const;

 private:
  void add_to_store(NodeId id, const Matrix* values);
  Matrix evaluate_full(const Expr& expr) const;
  double train_quality(MatrixView values) const;
  double train_ic(MatrixView values) const;
  std::string topic_of(NodeId id) const;
  void save_checkpoint() const;
  void fill_pool_stats(IterationRecord& r) const;
  void log(const nlohmann::json& record);

  MiningConfig config_;
  const Panel& panel_;
  MinerOptions options_;
  RunPaths paths_;
  ReturnMatrix returns_;
  SplitRows rows_;
  std::string fingerprint_;
  FactorGraph graph_;
  std::unique_ptr<FactorStore> store_;
  std::unique_ptr<RunLog> run_log_;
  std::shared_ptr<InFlightGate> gate_;
  std::unique_ptr<ChatClient> chat_;
  std::unique_ptr<EmbeddingClient> embed_;
  std::map<NodeId, std::string> topics_;  ///< by seed id
  std::vector<IterationRecord> history_;
  int iteration_ = 0;
  int stagnation_ = 0;
  std::size_t candidate_evaluations_ = 0;
  bool stagnated_ = false;
};

struct ProviderPair {
  std::unique_ptr<ChatProvider> chat;
  std::unique_ptr<EmbeddingProvider> embedder;
};

/// Mock or HTTP providers per the config; mocks are seeded with config.seed.
ProviderPair make_providers(const MiningConfig& config);

/// Rebuilds the graph a run log describes by re-applying its seed, select,
/// admit and evict records. Throws SchemaError when the log is inconsistent.
FactorGraph replay_run_log(const std::string& path, std::size_t capacity);

/// Iteration-vs-pool-IC CSV from a run directory's iteration records.
void write_iteration_csv(std::ostream& out, const std::string& run_dir);

/// Graphviz rendering of the lineage; evicted nodes are dashed.
std::string graph_to_dot(const FactorGraph& graph);

}  // namespace dagalpha
