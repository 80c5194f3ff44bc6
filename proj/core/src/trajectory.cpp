#include "loopdyn/trajectory.hpp"

#include "loopdyn/error.hpp"

namespace loopdyn {

Trajectory::Trajectory(std::vector<TrajectoryRecord> records) : records_(std::move(records)) {
  std::optional<std::size_t> dim;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].t != i) {
      throw Error(ErrorKind::MismatchedInputs,
                  "trajectory indices must be contiguous from 0 (record " + std::to_string(i) +
                      " has t=" + std::to_string(records_[i].t) + ")");
    }
    if (const auto& e = records_[i].embedding) {
      if (dim && *dim != e->dim()) {
        throw Error(ErrorKind::DimMismatch, "trajectory embeddings have mixed dimensions");
      }
      dim = e->dim();
    }
  }
}

Trajectory Trajectory::from_embeddings(std::vector<Embedding> embeddings) {
  std::vector<TrajectoryRecord> records;
  records.reserve(embeddings.size());
  for (std::size_t t = 0; t < embeddings.size(); ++t) {
    TrajectoryRecord r;
    r.t = t;
    r.text = "synthetic:" + std::to_string(t);
    r.embedding = std::move(embeddings[t]);
    records.push_back(std::move(r));
  }
  return Trajectory(std::move(records));
}

std::size_t Trajectory::horizon() const {
  if (records_.empty()) throw Error(ErrorKind::EmptyTrajectory, "trajectory is empty");
  return records_.size() - 1;
}

bool Trajectory::has_embeddings() const noexcept {
  for (const auto& r : records_) {
    if (!r.embedding) return false;
  }
  return !records_.empty();
}

const Embedding& Trajectory::embedding(std::size_t t) const {
  const auto& r = records_.at(t);
  if (!r.embedding) {
    throw Error(ErrorKind::MissingEmbeddings, "record t=" + std::to_string(t) + " has no embedding");
  }
  return *r.embedding;
}

std::vector<Embedding> Trajectory::embeddings() const {
  std::vector<Embedding> out;
  out.reserve(records_.size());
  for (std::size_t t = 0; t < records_.size(); ++t) out.push_back(embedding(t));
  return out;
}

}  // namespace loopdyn
