#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cmath>

#include "dagalpha/error.hpp"
#include "dagalpha/providers.hpp"

namespace dagalpha {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base;    // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("provider endpoint needs a scheme: '" + url + "'");
  const auto slash = url.find('/', scheme + 3);
  Endpoint ep;
  ep.origin = url.substr(0, slash);
  ep.base = slash == std::string::npos ? "" : url.substr(slash);
  while (!ep.base.empty() && ep.base.back() == '/') ep.base.pop_back();
  return ep;
}

json post_json(const HttpSettings& s, const std::string& route, const json& body) {
  const Endpoint ep = split_endpoint(s.endpoint);
  httplib::Client cli(ep.origin);
  cli.set_connection_timeout(s.timeout);
  cli.set_read_timeout(s.timeout);
  cli.set_write_timeout(s.timeout);
  if (!s.api_key.empty()) cli.set_bearer_token_auth(s.api_key);
  auto res = cli.Post(ep.base + route, body.dump(), "application/json");
  if (!res) {
    throw ProviderError("request to " + ep.origin + ep.base + route + " failed: " + httplib::to_string(res.error()),
                        /*retriable=*/true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw ProviderError("provider returned HTTP " + std::to_string(res->status), /*retriable=*/true);
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("provider returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                        /*retriable=*/false);
  }
  json doc = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw ProviderError("provider response is not JSON", /*retriable=*/true);
  return doc;
}

}  // namespace

void normalize_embedding(std::vector<double>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  if (!(ss > 0.0) || !std::isfinite(ss)) throw ProviderError("embedding has no usable norm", false);
  const double norm = std::sqrt(ss);
  for (double& x : v) x /= norm;
}

std::string HttpChatProvider::complete(const ChatRequest& request) {
  const json body = {
      {"model", settings_.chat_model},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
      {"messages", json::array({{{"role", "system"}, {"content", request.system}},
                                {{"role", "user"}, {"content", request.user_text()}}})},
  };
  const json doc = post_json(settings_, "/chat/completions", body);
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw ProviderError("chat response lacks choices[0].message.content", /*retriable=*/false);
  }
}

std::vector<double> HttpEmbeddingProvider::embed(std::string_view text) {
  if (text.empty()) throw ArgumentError("cannot embed empty text");
  const json body = {{"model", settings_.embedding_model}, {"input", std::string(text)}};
  const json doc = post_json(settings_, "/embeddings", body);
  std::vector<double> v;
  try {
    v = doc.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ProviderError("embedding response lacks data[0].embedding", /*retriable=*/false);
  }
  normalize_embedding(v);
  return v;
}

}  // namespace dagalpha
