#pragma once

// Singular and composite agentic loops a_{t+1} = LLM_n(P_n(... LLM_1(P_1(a_t)))).

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loopdyn/backends.hpp"
#include "loopdyn/error.hpp"
#include "loopdyn/trajectory.hpp"
#include "loopdyn/trajectory_io.hpp"

namespace loopdyn {

class PromptTemplate {
 public:
  static constexpr std::string_view kPlaceholder = "{{TEXT}}";

  // Throws MissingPlaceholder.
  PromptTemplate(std::string id, std::string text);

  // Single pass: every placeholder is replaced by `artifact` verbatim; text
  // inserted from the artifact is never substituted again.
  std::string render(std::string_view artifact) const;

  const std::string& id() const noexcept { return id_; }
  const std::string& text() const noexcept { return text_; }

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;

 private:
  std::string id_;
  std::string text_;
};

struct Phase {
  PromptTemplate prompt;
  GenerationParams generation;

  friend bool operator==(const Phase&, const Phase&) = default;
};

struct PostprocessRules {
  bool strip_think = true;
  bool trim_whitespace = true;
  bool reject_empty = true;

  static PostprocessRules none() { return {false, false, false}; }
  std::string apply(std::string text) const;

  friend bool operator==(const PostprocessRules&, const PostprocessRules&) = default;
};

struct LoopConfig {
  std::string loop_id = "loop";
  std::vector<Phase> phases;
  std::string initial_text;
  std::size_t horizon = 50;
  PostprocessRules postprocess;

  // Throws InvalidConfig.
  void validate() const;
  // 16 hex digits, stable across runs and platforms.
  std::string hash() const;

  friend bool operator==(const LoopConfig&, const LoopConfig&) = default;
};

inline constexpr std::string_view kInitialSentence =
    "Music has the power to connect people across cultures and generations.";

// "contractive" (iterative paraphrase) or "exploratory" (summarize + negate).
// Throws InvalidConfig for other names.
LoopConfig preset(std::string_view name);

std::string loop_config_to_json(const LoopConfig& config);
// Throws Parse / InvalidConfig.
LoopConfig loop_config_from_json(const std::string& text);
LoopConfig load_loop_config(const std::filesystem::path& path);

using Clock = std::function<std::string()>;

// ISO-8601 UTC with milliseconds. Honors SOURCE_DATE_EPOCH for reproducible
// output.
std::string utc_now();

struct RunOutcome {
  Trajectory trajectory;
  std::optional<ErrorKind> error_kind;
  std::optional<std::string> abort_reason;

  bool aborted() const noexcept { return abort_reason.has_value(); }
};

// Records a_0 and then `horizon` iterations, persisting each record before
// the next iteration starts. Backend failures abort the run: the partial
// trajectory stays on disk with an abort marker and is returned flagged.
RunOutcome run_loop(const LoopConfig& config, LlmBackend& llm, EmbeddingBackend* embedder,
                    TrajectoryStore& store, const Clock& clock = utc_now);

// Attaches unit-normalized embeddings to every record, replacing any present.
Trajectory embed_trajectory(const Trajectory& trajectory, EmbeddingBackend& embedder);

}  // namespace loopdyn
