#include "loopdyn/clustering.hpp"

#include <cmath>
#include <optional>

#include "loopdyn/error.hpp"

namespace loopdyn {

namespace {

struct Candidate {
  std::vector<std::size_t> member_ts;
  std::vector<std::size_t> outlier_ts;
  std::vector<Embedding> members;
  Embedding attractor;
  double dispersion_value;
};

// Dispersion of members + e, with its new center; nullopt when the mean
// degenerates.
std::optional<std::pair<Embedding, double>> tentative_insert(std::vector<Embedding>& members,
                                                             const Embedding& e,
                                                             const Similarity& sim) {
  members.push_back(e);
  std::optional<std::pair<Embedding, double>> out;
  try {
    Embedding center = center_of_gravity(members);
    const double d = dispersion(members, center, sim);
    out.emplace(std::move(center), d);
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::DegenerateMean) throw;
  }
  members.pop_back();
  return out;
}

}  // namespace

void ClusterParams::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "lambda must lie in [0, 1]");
  }
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw Error(ErrorKind::InvalidParams, "rho must be positive");
  }
  if (min_members < 2) throw Error(ErrorKind::InvalidParams, "min_members must be at least 2");
}

std::vector<Cluster> detect_clusters(std::span<const Embedding> traj, const ClusterParams& params,
                                     const Similarity& sim) {
  params.validate();
  if (traj.empty()) throw Error(ErrorKind::EmptyTrajectory, "cannot detect clusters in an empty trajectory");
  const std::size_t n = traj.size();
  for (const auto& e : traj) {
    if (e.dim() != traj.front().dim()) {
      throw Error(ErrorKind::DimMismatch, "trajectory embeddings have mixed dimensions");
    }
  }

  std::vector<Cluster> clusters;
  std::size_t start = 0;
  while (start < n) {
    Candidate cand{{start}, {}, {traj[start]}, traj[start], 0.0};
    cand.dispersion_value = dispersion(cand.members, cand.attractor, sim);

    std::size_t violations = 0;
    for (std::size_t t = start + 1; t < n; ++t) {
      bool accepted = false;
      if (sim(traj[t - 1], traj[t]) >= params.lambda) {
        if (auto next = tentative_insert(cand.members, traj[t], sim);
            next && next->second < params.rho) {
          cand.members.push_back(traj[t]);
          cand.member_ts.push_back(t);
          cand.attractor = std::move(next->first);
          cand.dispersion_value = next->second;
          accepted = true;
        }
      }
      if (accepted) {
        violations = 0;
        continue;
      }
      cand.outlier_ts.push_back(t);
      if (++violations > params.kappa) break;
    }

    const std::size_t last = cand.member_ts.back();
    while (!cand.outlier_ts.empty() && cand.outlier_ts.back() > last) cand.outlier_ts.pop_back();

    if (cand.member_ts.size() >= params.min_members) {
      clusters.push_back(Cluster{start, last, std::move(cand.member_ts), std::move(cand.outlier_ts),
                                 std::move(cand.attractor), cand.dispersion_value});
    }
    start = last + 1;
  }
  return clusters;
}

std::vector<Cluster> detect_clusters(const Trajectory& trajectory, const ClusterParams& params,
                                     const Similarity& sim) {
  if (trajectory.empty()) {
    throw Error(ErrorKind::EmptyTrajectory, "cannot detect clusters in an empty trajectory");
  }
  const auto embeddings = trajectory.embeddings();
  return detect_clusters(embeddings, params, sim);
}

Matrix attractor_similarity_matrix(std::span<const Cluster> clusters, const Similarity& sim) {
  if (clusters.empty()) throw Error(ErrorKind::MismatchedInputs, "no clusters to compare");
  const std::size_t m = clusters.size();
  Matrix out(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      out[i][j] = out[j][i] = sim(clusters[i].attractor, clusters[j].attractor);
    }
  }
  return out;
}

}  // namespace loopdyn
