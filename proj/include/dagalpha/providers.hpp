#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dagalpha {

struct ChatRequest {
  std::string system;
  /// User-message segments, sent as one message separated by blank lines.
  std::vector<std::string> user;
  double temperature = 0.7;
  int max_tokens = 4096;
  /// Pipeline stage label ("strategy", "execution"); for logs and mocks.
  std::string stage;

  std::string user_text() const;
};

struct ChatResponse {
  std::string raw;
  std::optional<nlohmann::json> json;
};

/// One round trip to a chat model. Throws ProviderError on transport failure.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Text embedding. Throws ProviderError on transport failure and ArgumentError
/// on empty text. Returned vectors are unit length.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

/// Removes a surrounding ``` or ```json fence, if any.
std::string strip_code_fences(std::string_view raw);
/// Strict JSON parse after fence stripping; nullopt when malformed.
std::optional<nlohmann::json> parse_json_reply(std::string_view raw);

/// Append-only JSON-lines log. A default-constructed log discards records.
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(std::string path);
  void append(const nlohmann::json& record);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::mutex mu_;
};

struct RetryPolicy {
  int max_attempts = 4;  ///< transport attempts per call
  std::chrono::milliseconds backoff{500};
  double backoff_multiplier = 2.0;
  int json_attempts = 3;  ///< re-asks when the reply is not valid JSON
};

/// Bounds the number of provider calls in flight across clients.
class InFlightGate {
 public:
  explicit InFlightGate(std::size_t limit);
  void acquire() { sem_.acquire(); }
  void release() { sem_.release(); }

 private:
  std::counting_semaphore<1024> sem_;
};

/// Chat with transport retries, JSON re-asks, logging and prompt dumps.
class ChatClient {
 public:
  ChatClient(ChatProvider& provider, RetryPolicy policy, std::shared_ptr<InFlightGate> gate,
             RunLog* log = nullptr, std::string dump_dir = {});

  /// Returns the first reply that parses as JSON. Throws GenerationFailure when
  /// every JSON attempt is malformed and ProviderError when transport retries
  /// run out or the failure is not retriable.
  ChatResponse chat(const ChatRequest& request);

 private:
  std::string complete_with_retries(const ChatRequest& request);

  ChatProvider& provider_;
  RetryPolicy policy_;
  std::shared_ptr<InFlightGate> gate_;
  RunLog* log_;
  std::string dump_dir_;
  std::atomic<std::uint64_t> dump_counter_{0};
};

/// Embedding with transport retries and logging.
class EmbeddingClient {
 public:
  EmbeddingClient(EmbeddingProvider& provider, RetryPolicy policy,
                  std::shared_ptr<InFlightGate> gate, RunLog* log = nullptr);
  std::vector<double> embed(std::string_view text);

 private:
  EmbeddingProvider& provider_;
  RetryPolicy policy_;
  std::shared_ptr<InFlightGate> gate_;
  RunLog* log_;
};

// ---------------------------------------------------------------- mocks

struct MockChatOptions {
  std::uint64_t seed = 0;
  /// Exact user text -> reply, returned verbatim.
  std::map<std::string, std::string> fixtures;
  /// Expressions the execution stage may propose besides structural mutations.
  std::vector<std::string> mutation_table;
  double table_probability = 0.5;
  /// Share of candidates whose raw form is corrupted and repaired in the fixed list.
  double corrupt_probability = 0.1;
};

/// Deterministic stand-in for a chat model: a pure function of (seed, request).
class MockChatProvider final : public ChatProvider {
 public:
  explicit MockChatProvider(MockChatOptions options) : options_(std::move(options)) {}
  std::string complete(const ChatRequest& request) override;

 private:
  MockChatOptions options_;
};

/// Seeded feature hashing of lowercase word tokens, L2-normalized.
class MockEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(std::uint64_t seed = 0, std::size_t dim = 256) : seed_(seed), dim_(dim) {}
  std::vector<double> embed(std::string_view text) override;
  std::size_t dimension() const { return dim_; }
  /// Bucket of a single token, exposed for collision checks.
  std::size_t bucket(std::string_view token) const;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

/// Lowercase alphanumeric word tokens of `text`.
std::vector<std::string> word_tokens(std::string_view text);

// ----------------------------------------------------------------- HTTP

struct HttpSettings {
  /// Base URL of an OpenAI-compatible API, e.g. https://host/v1.
  std::string endpoint;
  std::string api_key;
  std::string chat_model;
  std::string embedding_model;
  std::chrono::seconds timeout{60};
};

class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(HttpSettings settings) : settings_(std::move(settings)) {}
  std::string complete(const ChatRequest& request) override;

 private:
  HttpSettings settings_;
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpSettings settings) : settings_(std::move(settings)) {}
  std::vector<double> embed(std::string_view text) override;

 private:
  HttpSettings settings_;
};

/// Scales `v` to unit length; throws ProviderError for a zero or non-finite vector.
void normalize_embedding(std::vector<double>& v);

}  // namespace dagalpha
