#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "dagalpha/error.hpp"
#include "dagalpha/hash.hpp"
#include "dagalpha/providers.hpp"

namespace dagalpha {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Releases the gate on scope exit.
class GateHold {
 public:
  explicit GateHold(InFlightGate* gate) : gate_(gate) {
    if (gate_ != nullptr) gate_->acquire();
  }
  ~GateHold() {
    if (gate_ != nullptr) gate_->release();
  }
  GateHold(const GateHold&) = delete;
  GateHold& operator=(const GateHold&) = delete;

 private:
  InFlightGate* gate_;
};

template <typename Fn>
auto with_retries(const RetryPolicy& policy, InFlightGate* gate, std::string_view what, Fn&& fn) {
  auto delay = policy.backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      GateHold hold(gate);
      return fn();
    } catch (const ProviderError& e) {
      if (!e.retriable() || attempt >= policy.max_attempts) throw;
      spdlog::warn("{} failed (attempt {}/{}): {}; retrying in {} ms", what, attempt,
                   policy.max_attempts, e.what(), delay.count());
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(delay.count()) * policy.backoff_multiplier));
    }
  }
}

long long elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - since)
      .count();
}

}  // namespace

std::string ChatRequest::user_text() const {
  std::string out;
  for (std::size_t i = 0; i < user.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += user[i];
  }
  return out;
}

std::string strip_code_fences(std::string_view raw) {
  std::string_view s = trim(raw);
  if (s.substr(0, 3) != "```") return std::string(s);
  const auto nl = s.find('\n');
  if (nl == std::string_view::npos) return std::string(s);
  s.remove_prefix(nl + 1);
  s = trim(s);
  if (s.size() >= 3 && s.substr(s.size() - 3) == "```") s.remove_suffix(3);
  return std::string(trim(s));
}

std::optional<json> parse_json_reply(std::string_view raw) {
  json doc = json::parse(strip_code_fences(raw), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) return std::nullopt;
  return doc;
}

RunLog::RunLog(std::string path) : path_(std::move(path)) {}

void RunLog::append(const json& record) {
  if (path_.empty()) return;
  const std::string line = record.dump() + "\n";
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot append to run log '" + path_ + "'");
  out << line;
}

InFlightGate::InFlightGate(std::size_t limit) : sem_(static_cast<std::ptrdiff_t>(limit)) {
  if (limit < 1 || limit > 1024) throw ConfigError("in-flight cap must lie in [1, 1024]");
}

ChatClient::ChatClient(ChatProvider& provider, RetryPolicy policy, std::shared_ptr<InFlightGate> gate,
                       RunLog* log, std::string dump_dir)
    : provider_(provider), policy_(policy), gate_(std::move(gate)), log_(log), dump_dir_(std::move(dump_dir)) {
  if (policy_.max_attempts < 1 || policy_.json_attempts < 1) {
    throw ConfigError("retry attempts must be at least 1");
  }
  if (!dump_dir_.empty()) std::filesystem::create_directories(dump_dir_);
}

std::string ChatClient::complete_with_retries(const ChatRequest& request) {
  return with_retries(policy_, gate_.get(), "chat request", [&] { return provider_.complete(request); });
}

ChatResponse ChatClient::chat(const ChatRequest& request) {
  const std::string user = request.user_text();
  const std::string request_hash = sha256_hex(request.system + "\n\x1f\n" + user);
  for (int attempt = 1; attempt <= policy_.json_attempts; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    ChatResponse resp;
    resp.raw = complete_with_retries(request);
    resp.json = parse_json_reply(resp.raw);
    if (log_ != nullptr) {
      log_->append({{"type", "chat"},
                    {"stage", request.stage},
                    {"request_sha256", request_hash},
                    {"attempt", attempt},
                    {"latency_ms", elapsed_ms(start)},
                    {"json_ok", resp.json.has_value()},
                    {"response", resp.raw}});
    }
    if (!dump_dir_.empty()) {
      const auto n = ++dump_counter_;
      std::ofstream out(std::filesystem::path(dump_dir_) /
                        (std::to_string(n) + "_" + (request.stage.empty() ? "chat" : request.stage) + ".txt"));
      out << "### system\n" << request.system << "\n\n### user\n" << user << "\n\n### response\n" << resp.raw << '\n';
    }
    if (resp.json) return resp;
    spdlog::warn("{} reply is not valid JSON (attempt {}/{})", request.stage, attempt, policy_.json_attempts);
  }
  throw GenerationFailure(request.stage + " stage: no valid JSON after " +
                          std::to_string(policy_.json_attempts) + " attempts");
}

EmbeddingClient::EmbeddingClient(EmbeddingProvider& provider, RetryPolicy policy,
                                 std::shared_ptr<InFlightGate> gate, RunLog* log)
    : provider_(provider), policy_(policy), gate_(std::move(gate)), log_(log) {}

std::vector<double> EmbeddingClient::embed(std::string_view text) {
  if (text.empty()) throw ArgumentError("cannot embed empty text");
  const auto start = std::chrono::steady_clock::now();
  auto v = with_retries(policy_, gate_.get(), "embedding request", [&] { return provider_.embed(text); });
  if (log_ != nullptr) {
    log_->append({{"type", "embed"},
                  {"request_sha256", sha256_hex(text)},
                  {"latency_ms", elapsed_ms(start)},
                  {"dimension", v.size()}});
  }
  return v;
}

}  // namespace dagalpha
