#pragma once

// Pluggable generation and embedding backends.
//
// LLM wire contract (Ollama-compatible): POST <base>/api/generate with
//   {"model", "prompt", "stream": false, "options": {"temperature", ...}}
// and a response object carrying the generated text in "response".
//
// Embedding wire contract: POST <base>/api/embeddings with {"model", "prompt"}
// answering {"embedding": [floats]}.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "loopdyn/geometry.hpp"

namespace loopdyn {

struct GenerationParams {
  std::string model;
  double temperature = 0.8;
  std::optional<double> top_p;
  std::optional<int> top_k;
  std::optional<std::int64_t> seed;

  // Throws InvalidConfig.
  void validate() const;

  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

struct GenerationRequest {
  GenerationParams params;
  std::string prompt;
  // The artifact substituted into the prompt. Never sent over the wire.
  std::string source_text;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  // Throws BackendUnreachable or BackendMalformedResponse.
  virtual std::string generate(const GenerationRequest& request) = 0;
};

struct HttpEndpoint {
  std::string base_url;  // scheme://host:port
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
};

// Reads LOOPDYN_LLM_URL / LOOPDYN_EMBED_URL (per `url_var`) and
// LOOPDYN_HTTP_TIMEOUT_S, falling back to `default_url`.
HttpEndpoint endpoint_from_env(const char* url_var, std::string default_url);

class OllamaBackend final : public LlmBackend {
 public:
  explicit OllamaBackend(HttpEndpoint endpoint, RetryPolicy retry = {});
  std::string generate(const GenerationRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
};

// Replays a recorded transcript: one JSON object {"response": "..."} per line,
// consumed in order, one per generation call.
class TranscriptBackend final : public LlmBackend {
 public:
  explicit TranscriptBackend(std::vector<std::string> responses);
  // Throws Io / Parse.
  static TranscriptBackend from_file(const std::filesystem::path& path);

  std::string generate(const GenerationRequest& request) override;
  std::size_t consumed() const noexcept { return next_; }

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
};

// Returns the substituted artifact unchanged: every loop is a fixed point.
class EchoBackend final : public LlmBackend {
 public:
  std::string generate(const GenerationRequest& request) override { return request.source_text; }
};

class FunctionBackend final : public LlmBackend {
 public:
  using Fn = std::function<std::string(const GenerationRequest&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string generate(const GenerationRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  // Raw (not necessarily normalized) vector. Throws BackendUnreachable,
  // BackendMalformedResponse or MissingEmbeddings.
  virtual std::vector<double> embed(std::string_view text) = 0;
};

// Unit-normalized embedding of `text`.
Embedding embed_text(EmbeddingBackend& backend, std::string_view text);

class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  HttpEmbeddingBackend(HttpEndpoint endpoint, std::string model, RetryPolicy retry = {});
  std::vector<double> embed(std::string_view text) override;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  RetryPolicy retry_;
};

// Precomputed embeddings keyed by exact text; JSONL {"text", "embedding"}.
class LookupEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit LookupEmbeddingBackend(std::unordered_map<std::string, std::vector<double>> table);
  static LookupEmbeddingBackend from_file(const std::filesystem::path& path);
  std::vector<double> embed(std::string_view text) override;

 private:
  std::unordered_map<std::string, std::vector<double>> table_;
};

// Deterministic test encoder: FNV-1a(text) mixed with the seed drives a
// Gaussian draw. The empty string maps to the first basis vector.
class StubEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit StubEmbeddingBackend(std::size_t dim = 256, std::uint64_t seed = 0);
  std::vector<double> embed(std::string_view text) override;
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

}  // namespace loopdyn
