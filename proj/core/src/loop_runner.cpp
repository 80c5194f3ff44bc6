#include "loopdyn/loop_runner.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace loopdyn {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kContractivePrompt =
    "You are a rewriting agent.\n"
    "At each step, rewrite the sentence to make it sound slightly more natural and fluent,\n"
    "while preserving the meaning exactly.\n"
    "\n"
    "Current sentence: {{TEXT}}\n"
    "\n"
    "Provide only the new sentence.";

constexpr std::string_view kExploratoryPrompt =
    "Summarize the current text in one sentence, then negate its main idea completely in an "
    "abstract way.\n"
    "\n"
    "Current sentence: {{TEXT}}\n"
    "\n"
    "Provide only the new sentence.";

void erase_think_spans(std::string& s) {
  static constexpr std::string_view kOpen = "<think>";
  static constexpr std::string_view kClose = "</think>";
  for (;;) {
    const auto open = s.find(kOpen);
    if (open == std::string::npos) break;
    const auto close = s.find(kClose, open + kOpen.size());
    if (close == std::string::npos) {
      s.erase(open);
      break;
    }
    s.erase(open, close + kClose.size() - open);
  }
  // Some chat templates swallow the opening tag.
  if (const auto close = s.find(kClose); close != std::string::npos) {
    s.erase(0, close + kClose.size());
  }
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

ordered_json phase_to_json(const Phase& phase) {
  const auto& g = phase.generation;
  ordered_json j;
  j["prompt_id"] = phase.prompt.id();
  j["template"] = phase.prompt.text();
  j["model"] = g.model;
  j["temperature"] = g.temperature;
  j["top_p"] = g.top_p ? ordered_json(*g.top_p) : ordered_json(nullptr);
  j["top_k"] = g.top_k ? ordered_json(*g.top_k) : ordered_json(nullptr);
  j["seed"] = g.seed ? ordered_json(*g.seed) : ordered_json(nullptr);
  return j;
}

ordered_json config_to_ordered_json(const LoopConfig& c) {
  ordered_json j;
  j["loop_id"] = c.loop_id;
  j["initial_text"] = c.initial_text;
  j["horizon"] = c.horizon;
  j["postprocess"] = {{"strip_think", c.postprocess.strip_think},
                      {"trim_whitespace", c.postprocess.trim_whitespace},
                      {"reject_empty", c.postprocess.reject_empty}};
  auto& phases = j["phases"] = ordered_json::array();
  for (const auto& p : c.phases) phases.push_back(phase_to_json(p));
  return j;
}

template <typename T>
std::optional<T> nullable(const ordered_json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return obj[key].get<T>();
}

std::string describe(const Error& e) {
  return std::string(to_string(e.kind())) + ": " + e.what();
}

}  // namespace

PromptTemplate::PromptTemplate(std::string id, std::string text)
    : id_(std::move(id)), text_(std::move(text)) {
  if (text_.find(kPlaceholder) == std::string::npos) {
    throw Error(ErrorKind::MissingPlaceholder,
                "prompt template '" + id_ + "' has no {{TEXT}} placeholder");
  }
}

std::string PromptTemplate::render(std::string_view artifact) const {
  std::string out;
  out.reserve(text_.size() + artifact.size());
  std::size_t pos = 0;
  for (;;) {
    const auto hit = text_.find(kPlaceholder, pos);
    if (hit == std::string::npos) break;
    out.append(text_, pos, hit - pos);
    out.append(artifact);
    pos = hit + kPlaceholder.size();
  }
  out.append(text_, pos, std::string::npos);
  return out;
}

std::string PostprocessRules::apply(std::string text) const {
  if (strip_think) erase_think_spans(text);
  if (trim_whitespace) text = trim(text);
  return text;
}

void LoopConfig::validate() const {
  if (horizon < 1) throw Error(ErrorKind::InvalidConfig, "horizon must be at least 1");
  if (phases.empty()) throw Error(ErrorKind::InvalidConfig, "a loop needs at least one phase");
  if (loop_id.empty()) throw Error(ErrorKind::InvalidConfig, "loop_id must not be empty");
  for (const auto& p : phases) p.generation.validate();
}

std::string LoopConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_ordered_json(*this).dump())));
  return buf;
}

LoopConfig preset(std::string_view name) {
  LoopConfig c;
  c.initial_text = std::string(kInitialSentence);
  c.horizon = 50;
  const GenerationParams gen{"deepseek-r1:8b", 0.8, std::nullopt, std::nullopt, std::nullopt};
  if (name == "contractive") {
    c.loop_id = "contractive";
    c.phases.push_back({PromptTemplate("rewrite", std::string(kContractivePrompt)), gen});
  } else if (name == "exploratory") {
    c.loop_id = "exploratory";
    c.phases.push_back({PromptTemplate("negate", std::string(kExploratoryPrompt)), gen});
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::string loop_config_to_json(const LoopConfig& config) {
  return config_to_ordered_json(config).dump(2) + "\n";
}

LoopConfig loop_config_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("loop config: ") + e.what());
  }
  LoopConfig c;
  try {
    c.loop_id = j.value("loop_id", std::string("loop"));
    c.initial_text = j.at("initial_text").get<std::string>();
    const auto horizon = j.at("horizon").get<long long>();
    if (horizon < 1) throw Error(ErrorKind::InvalidConfig, "horizon must be at least 1");
    c.horizon = static_cast<std::size_t>(horizon);
    if (j.contains("postprocess")) {
      const auto& pp = j["postprocess"];
      c.postprocess.strip_think = pp.value("strip_think", true);
      c.postprocess.trim_whitespace = pp.value("trim_whitespace", true);
      c.postprocess.reject_empty = pp.value("reject_empty", true);
    }
    for (const auto& p : j.at("phases")) {
      GenerationParams g;
      g.model = p.at("model").get<std::string>();
      g.temperature = p.value("temperature", 0.8);
      g.top_p = nullable<double>(p, "top_p");
      g.top_k = nullable<int>(p, "top_k");
      g.seed = nullable<std::int64_t>(p, "seed");
      c.phases.push_back({PromptTemplate(p.value("prompt_id", std::string("prompt")),
                                         p.at("template").get<std::string>()),
                          g});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("loop config: ") + e.what());
  }
  c.validate();
  return c;
}

LoopConfig load_loop_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open loop config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return loop_config_from_json(ss.str());
}

std::string utc_now() {
  using namespace std::chrono;
  std::time_t secs = 0;
  long long millis = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    secs = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    const auto now = duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    secs = static_cast<std::time_t>(now / 1000);
    millis = now % 1000;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  const auto n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%.*s.%03lldZ", static_cast<int>(n), buf, millis);
  return out;
}

RunOutcome run_loop(const LoopConfig& config, LlmBackend& llm, EmbeddingBackend* embedder,
                    TrajectoryStore& store, const Clock& clock) {
  config.validate();
  std::vector<TrajectoryRecord> records;
  records.reserve(config.horizon + 1);

  auto persist = [&](TrajectoryRecord record) {
    if (embedder) record.embedding = embed_text(*embedder, record.text);
    store.append(record);
    records.push_back(std::move(record));
  };

  auto abort_with = [&](const Error& e) {
    const std::string reason = describe(e);
    store.mark_aborted(reason);
    Trajectory partial(std::move(records));
    partial.mark_aborted(reason);
    return RunOutcome{std::move(partial), e.kind(), reason};
  };

  std::string prompt_ids;
  std::string models;
  for (const auto& p : config.phases) {
    prompt_ids += (prompt_ids.empty() ? "" : "+") + p.prompt.id();
    models += (models.empty() ? "" : "+") + p.generation.model;
  }
  const auto& final_params = config.phases.back().generation;

  try {
    TrajectoryRecord initial;
    initial.t = 0;
    initial.text = config.initial_text;
    initial.timestamp_utc = clock();
    persist(std::move(initial));

    for (std::size_t t = 1; t <= config.horizon; ++t) {
      TrajectoryRecord record;
      record.t = t;
      std::string current = records.back().text;
      for (std::size_t i = 0; i < config.phases.size(); ++i) {
        const auto& phase = config.phases[i];
        GenerationRequest request{phase.generation, phase.prompt.render(current), current};
        std::string out = config.postprocess.apply(llm.generate(request));
        if (config.postprocess.reject_empty && out.empty()) {
          throw Error(ErrorKind::EmptyGeneration, "phase " + std::to_string(i + 1) + " at t=" +
                                                      std::to_string(t) + " produced no text");
        }
        record.phase_texts.push_back(out);
        current = std::move(out);
      }
      record.text = std::move(current);
      record.prompt_id = prompt_ids;
      record.model = models;
      record.temperature = final_params.temperature;
      record.seed = final_params.seed;
      record.timestamp_utc = clock();
      persist(std::move(record));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    return abort_with(e);
  }
  return RunOutcome{Trajectory(std::move(records)), std::nullopt, std::nullopt};
}

Trajectory embed_trajectory(const Trajectory& trajectory, EmbeddingBackend& embedder) {
  std::vector<TrajectoryRecord> records = trajectory.records();
  std::optional<std::size_t> dim;
  for (auto& r : records) {
    r.embedding = embed_text(embedder, r.text);
    if (dim && *dim != r.embedding->dim()) {
      throw Error(ErrorKind::DimMismatch, "embedding backend returned inconsistent dimensions");
    }
    dim = r.embedding->dim();
  }
  Trajectory out(std::move(records));
  if (trajectory.abort_reason()) out.mark_aborted(*trajectory.abort_reason());
  return out;
}

}  // namespace loopdyn
