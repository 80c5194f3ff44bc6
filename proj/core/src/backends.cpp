#include "loopdyn/backends.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "loopdyn/error.hpp"

namespace loopdyn {

namespace {

using json = nlohmann::json;

// POSTs `body` to `path`, retrying connection failures and 5xx answers with
// exponential backoff. Returns the response body.
std::string post_json(const HttpEndpoint& endpoint, const RetryPolicy& retry,
                      const std::string& path, const json& body) {
  httplib::Client client(endpoint.base_url);
  if (!client.is_valid()) {
    throw Error(ErrorKind::BackendUnreachable, "invalid backend URL '" + endpoint.base_url + "'");
  }
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const std::string payload = body.dump();
  std::string last_error;
  auto backoff = retry.initial_backoff;
  const int attempts = std::max(1, retry.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = client.Post(path, payload, "application/json");
    if (res && res->status == 200) return res->body;
    if (res && res->status < 500) {
      throw Error(ErrorKind::BackendMalformedResponse,
                  endpoint.base_url + path + " answered HTTP " + std::to_string(res->status));
    }
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorKind::BackendUnreachable, endpoint.base_url + path + " failed after " +
                                                 std::to_string(attempts) +
                                                 " attempts: " + last_error);
}

json parse_response(const std::string& body, const std::string& what) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::BackendMalformedResponse, what + ": " + e.what());
  }
}

}  // namespace

void GenerationParams::validate() const {
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw Error(ErrorKind::InvalidConfig, "temperature must be finite and non-negative");
  }
  if (top_p && (!std::isfinite(*top_p) || *top_p <= 0.0 || *top_p > 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "top_p must lie in (0, 1]");
  }
  if (top_k && *top_k <= 0) throw Error(ErrorKind::InvalidConfig, "top_k must be positive");
}

HttpEndpoint endpoint_from_env(const char* url_var, std::string default_url) {
  HttpEndpoint ep{std::move(default_url)};
  if (const char* url = std::getenv(url_var); url && *url) ep.base_url = url;
  if (const char* t = std::getenv("LOOPDYN_HTTP_TIMEOUT_S"); t && *t) {
    char* end = nullptr;
    const double secs = std::strtod(t, &end);
    if (end != t && *end == '\0' && secs > 0.0) {
      ep.timeout = std::chrono::milliseconds(static_cast<long long>(secs * 1000.0));
    }
  }
  return ep;
}

OllamaBackend::OllamaBackend(HttpEndpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {}

std::string OllamaBackend::generate(const GenerationRequest& request) {
  const auto& p = request.params;
  json options = {{"temperature", p.temperature}};
  if (p.top_p) options["top_p"] = *p.top_p;
  if (p.top_k) options["top_k"] = *p.top_k;
  if (p.seed) options["seed"] = *p.seed;
  const json body = {
      {"model", p.model}, {"prompt", request.prompt}, {"stream", false}, {"options", options}};
  const auto doc = parse_response(post_json(endpoint_, retry_, "/api/generate", body),
                                  "generation response");
  if (!doc.is_object() || !doc.contains("response") || !doc["response"].is_string()) {
    throw Error(ErrorKind::BackendMalformedResponse, "generation response lacks a 'response' string");
  }
  return doc["response"].get<std::string>();
}

TranscriptBackend::TranscriptBackend(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

TranscriptBackend TranscriptBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open transcript " + path.string());
  std::vector<std::string> responses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto doc = json::parse(line);
      responses.push_back(doc.at("response").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return TranscriptBackend(std::move(responses));
}

std::string TranscriptBackend::generate(const GenerationRequest&) {
  if (next_ >= responses_.size()) {
    throw Error(ErrorKind::BackendMalformedResponse,
                "transcript exhausted after " + std::to_string(responses_.size()) + " responses");
  }
  return responses_[next_++];
}

Embedding embed_text(EmbeddingBackend& backend, std::string_view text) {
  const auto raw = backend.embed(text);
  return Embedding::normalize(raw);
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEndpoint endpoint, std::string model, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), retry_(retry) {}

std::vector<double> HttpEmbeddingBackend::embed(std::string_view text) {
  const json body = {{"model", model_}, {"prompt", std::string(text)}};
  const auto doc = parse_response(post_json(endpoint_, retry_, "/api/embeddings", body),
                                  "embedding response");
  try {
    auto v = doc.at("embedding").get<std::vector<double>>();
    if (v.empty()) throw Error(ErrorKind::BackendMalformedResponse, "embedding response is empty");
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BackendMalformedResponse, std::string("embedding response: ") + e.what());
  }
}

LookupEmbeddingBackend::LookupEmbeddingBackend(
    std::unordered_map<std::string, std::vector<double>> table)
    : table_(std::move(table)) {}

LookupEmbeddingBackend LookupEmbeddingBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open embedding table " + path.string());
  std::unordered_map<std::string, std::vector<double>> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto doc = json::parse(line);
      table.insert_or_assign(doc.at("text").get<std::string>(),
                             doc.at("embedding").get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return LookupEmbeddingBackend(std::move(table));
}

std::vector<double> LookupEmbeddingBackend::embed(std::string_view text) {
  const auto it = table_.find(std::string(text));
  if (it == table_.end()) {
    throw Error(ErrorKind::MissingEmbeddings,
                "no precomputed embedding for text '" + std::string(text.substr(0, 60)) + "'");
  }
  return it->second;
}

StubEmbeddingBackend::StubEmbeddingBackend(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(ErrorKind::InvalidParams, "stub embedding dim must be positive");
}

std::vector<double> StubEmbeddingBackend::embed(std::string_view text) {
  std::vector<double> v(dim_, 0.0);
  if (text.empty()) {
    v[0] = 1.0;
    return v;
  }
  std::mt19937_64 rng(fnv1a64(text) ^ (seed_ * 0x9e3779b97f4a7c15ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& x : v) x = normal(rng);
  return v;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) noexcept {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace loopdyn
