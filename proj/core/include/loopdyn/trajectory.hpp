#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loopdyn/geometry.hpp"

namespace loopdyn {

// One persisted loop iteration. Generation metadata is absent for the
// initial artifact a_0.
struct TrajectoryRecord {
  std::size_t t = 0;
  std::string text;
  std::vector<std::string> phase_texts;
  std::optional<std::string> prompt_id;
  std::optional<std::string> model;
  std::optional<double> temperature;
  std::optional<std::int64_t> seed;
  std::string timestamp_utc;
  std::optional<Embedding> embedding;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

// Ordered sequence of records with contiguous indices starting at 0.
class Trajectory {
 public:
  Trajectory() = default;
  // Throws MismatchedInputs on gaps, DimMismatch on mixed dimensions.
  explicit Trajectory(std::vector<TrajectoryRecord> records);

  // Synthetic trajectory: texts become "synthetic:<t>".
  static Trajectory from_embeddings(std::vector<Embedding> embeddings);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  // Index of the last point, T.
  std::size_t horizon() const;

  const std::vector<TrajectoryRecord>& records() const noexcept { return records_; }
  const TrajectoryRecord& operator[](std::size_t t) const { return records_.at(t); }

  bool has_embeddings() const noexcept;
  // Throws MissingEmbeddings when any record lacks one.
  const Embedding& embedding(std::size_t t) const;
  std::vector<Embedding> embeddings() const;

  bool aborted() const noexcept { return abort_reason_.has_value(); }
  const std::optional<std::string>& abort_reason() const noexcept { return abort_reason_; }
  void mark_aborted(std::string reason) { abort_reason_ = std::move(reason); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<TrajectoryRecord> records_;
  std::optional<std::string> abort_reason_;
};

}  // namespace loopdyn
