#pragma once

#include <doctest.h>

#include <algorithm>
#include <span>
#include <vector>

#include "loopdyn/clustering.hpp"

namespace testutil {

// Re-derives every Cluster invariant from the raw trajectory.
inline void check_partition_soundness(std::span<const loopdyn::Embedding> traj,
                                      const std::vector<loopdyn::Cluster>& clusters,
                                      const loopdyn::ClusterParams& params,
                                      const loopdyn::Similarity& sim) {
  std::vector<int> owner(traj.size(), -1);
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const auto& c = clusters[ci];
    REQUIRE(c.start_t <= c.end_t);
    REQUIRE(c.end_t < traj.size());
    if (ci > 0) CHECK(clusters[ci - 1].end_t < c.start_t);
    CHECK(std::is_sorted(c.member_ts.begin(), c.member_ts.end()));
    CHECK(std::is_sorted(c.outlier_ts.begin(), c.outlier_ts.end()));
    CHECK(c.member_ts.front() == c.start_t);
    CHECK(c.member_ts.back() == c.end_t);
    CHECK(c.member_ts.size() >= params.min_members);
    CHECK(c.member_ts.size() + c.outlier_ts.size() == c.span());
    for (auto t : c.member_ts) {
      CHECK(owner[t] == -1);
      owner[t] = static_cast<int>(ci);
    }
    for (auto t : c.outlier_ts) {
      CHECK(owner[t] == -1);
      owner[t] = static_cast<int>(ci);
    }
    for (std::size_t t = c.start_t; t <= c.end_t; ++t) CHECK(owner[t] == static_cast<int>(ci));

    std::vector<loopdyn::Embedding> members;
    for (auto t : c.member_ts) members.push_back(traj[t]);
    const auto center = loopdyn::center_of_gravity(members);
    CHECK(center == c.attractor);
    CHECK(loopdyn::dispersion(members, center, sim) == c.dispersion_value);
    CHECK(c.dispersion_value < params.rho);
  }
}

}  // namespace testutil
