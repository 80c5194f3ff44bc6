#pragma once

// Incremental cluster / attractor detection over an embedding trajectory.

#include <cstddef>
#include <span>
#include <vector>

#include "loopdyn/calibration.hpp"
#include "loopdyn/geometry.hpp"
#include "loopdyn/trajectory.hpp"

namespace loopdyn {

struct ClusterParams {
  double lambda = 0.8;           // consecutive-similarity threshold
  double rho = 0.2;              // dispersion threshold
  std::size_t kappa = 2;         // consecutive violations tolerated
  std::size_t min_members = 3;   // smallest cluster that is reported

  // Throws InvalidParams.
  void validate() const;

  friend bool operator==(const ClusterParams&, const ClusterParams&) = default;
};

struct Cluster {
  std::size_t start_t = 0;
  std::size_t end_t = 0;
  std::vector<std::size_t> member_ts;
  std::vector<std::size_t> outlier_ts;
  Embedding attractor;
  double dispersion_value = 0.0;

  std::size_t span() const noexcept { return end_t - start_t + 1; }

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

using Matrix = std::vector<std::vector<double>>;

// Single left-to-right pass. A candidate opens at the first unconsumed index.
// Each later point joins when sim(e_{t-1}, e_t) >= lambda and the dispersion of
// members + e_t stays below rho; otherwise it is an outlier and the violation
// counter grows (a success resets it). Once the counter exceeds kappa the
// candidate closes: trailing outliers are trimmed, the cluster is emitted when
// it has at least min_members members, and scanning resumes right after its
// last member.
std::vector<Cluster> detect_clusters(std::span<const Embedding> trajectory,
                                     const ClusterParams& params, const Similarity& sim);

// Throws EmptyTrajectory, MissingEmbeddings.
std::vector<Cluster> detect_clusters(const Trajectory& trajectory, const ClusterParams& params,
                                     const Similarity& sim);

// Entry (i, j) = sim(a_i, a_j). Throws MismatchedInputs on an empty list.
Matrix attractor_similarity_matrix(std::span<const Cluster> clusters, const Similarity& sim);

}  // namespace loopdyn
