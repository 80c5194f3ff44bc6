#include "loopdyn/trajectory_io.hpp"

#include <nlohmann/json.hpp>

#include "loopdyn/error.hpp"

namespace loopdyn {

namespace {

using ordered_json = nlohmann::ordered_json;

template <typename T>
ordered_json optional_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

template <typename T>
std::optional<T> optional_field(const ordered_json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return obj[key].get<T>();
}

}  // namespace

std::string record_to_json_line(const TrajectoryRecord& r) {
  ordered_json j;
  j["t"] = r.t;
  j["text"] = r.text;
  j["phase_texts"] = r.phase_texts;
  j["prompt_id"] = optional_json(r.prompt_id);
  j["model"] = optional_json(r.model);
  j["temperature"] = optional_json(r.temperature);
  j["seed"] = optional_json(r.seed);
  j["timestamp_utc"] = r.timestamp_utc;
  if (r.embedding) {
    const auto v = r.embedding->values();
    j["embedding"] = std::vector<double>(v.begin(), v.end());
  }
  return j.dump();
}

TrajectoryRecord record_from_json_line(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  try {
    TrajectoryRecord r;
    r.t = j.at("t").get<std::size_t>();
    r.text = j.at("text").get<std::string>();
    if (j.contains("phase_texts")) r.phase_texts = j["phase_texts"].get<std::vector<std::string>>();
    r.prompt_id = optional_field<std::string>(j, "prompt_id");
    r.model = optional_field<std::string>(j, "model");
    r.temperature = optional_field<double>(j, "temperature");
    r.seed = optional_field<std::int64_t>(j, "seed");
    r.timestamp_utc = j.value("timestamp_utc", std::string{});
    if (j.contains("embedding") && !j["embedding"].is_null()) {
      r.embedding = Embedding::from_unit(j["embedding"].get<std::vector<double>>());
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::Parse, std::string("embedding: ") + e.what());
  }
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open trajectory " + path.string());
  std::vector<TrajectoryRecord> records;
  std::optional<std::string> abort_reason;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      if (abort_reason) throw Error(ErrorKind::Parse, "record after the abort marker");
      if (line.find("\"aborted\"") != std::string::npos) {
        const auto j = nlohmann::json::parse(line);
        if (j.contains("aborted") && !j.contains("t")) {
          abort_reason = j.value("reason", std::string{});
          continue;
        }
      }
      records.push_back(record_from_json_line(line));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Parse,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  Trajectory traj(std::move(records));
  if (abort_reason) traj.mark_aborted(*abort_reason);
  return traj;
}

void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path) {
  TrajectoryStore store(path);
  for (const auto& r : trajectory.records()) store.append(r);
  if (trajectory.abort_reason()) store.mark_aborted(*trajectory.abort_reason());
}

std::string trajectory_file_name(std::string_view loop_id, std::string_view config_hash) {
  return std::string(loop_id) + "_" + std::string(config_hash) + ".jsonl";
}

TrajectoryStore::TrajectoryStore(std::filesystem::path path) : path_(std::move(path)) {
  out_.open(path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorKind::Io, "cannot open trajectory file " + path_.string());
}

void TrajectoryStore::append(const TrajectoryRecord& record) {
  write_line(record_to_json_line(record));
}

void TrajectoryStore::mark_aborted(std::string_view reason) {
  nlohmann::ordered_json j;
  j["aborted"] = true;
  j["reason"] = std::string(reason);
  write_line(j.dump());
}

void TrajectoryStore::write_line(const std::string& line) {
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorKind::Io, "failed writing " + path_.string());
}

}  // namespace loopdyn
