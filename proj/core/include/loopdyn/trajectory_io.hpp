#pragma once

// JSON-lines persistence of trajectories. One object per iteration:
//   {"t", "text", "phase_texts", "prompt_id", "model", "temperature", "seed",
//    "timestamp_utc", "embedding"?}
// An aborted run ends with a marker line {"aborted": true, "reason": ...}.

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <string_view>

#include "loopdyn/trajectory.hpp"

namespace loopdyn {

std::string record_to_json_line(const TrajectoryRecord& record);
// Throws Parse.
TrajectoryRecord record_from_json_line(std::string_view line);

// Throws Io, or Parse with the offending line number.
Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);

// "<loop_id>_<config_hash>.jsonl"
std::string trajectory_file_name(std::string_view loop_id, std::string_view config_hash);

// Append-only writer for a single trajectory file. Appends are serialized
// and flushed so a crash leaves every completed iteration on disk.
class TrajectoryStore {
 public:
  // Truncates `path`. Throws Io.
  explicit TrajectoryStore(std::filesystem::path path);

  TrajectoryStore(const TrajectoryStore&) = delete;
  TrajectoryStore& operator=(const TrajectoryStore&) = delete;

  void append(const TrajectoryRecord& record);
  void mark_aborted(std::string_view reason);

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void write_line(const std::string& line);

  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
};

}  // namespace loopdyn
