#pragma once

// Drift indicators and operational regime classification.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loopdyn/calibration.hpp"
#include "loopdyn/clustering.hpp"
#include "loopdyn/trajectory.hpp"

namespace loopdyn {

// local[t-1] = sim(e_t, e_{t-1}) and global[t-1] = sim(e_t, e_0), t = 1..T.
struct DriftSeries {
  std::vector<double> local;
  std::vector<double> global;

  friend bool operator==(const DriftSeries&, const DriftSeries&) = default;
};

// Throws TooShort for fewer than 2 points.
DriftSeries drift_series(std::span<const Embedding> trajectory, const Similarity& sim);
DriftSeries drift_series(const Trajectory& trajectory, const Similarity& sim);

enum class RegimeLabel { Contractive, Oscillatory, Exploratory, Unclassified };

std::string_view to_string(RegimeLabel label) noexcept;
// Throws Parse on an unknown name.
RegimeLabel regime_from_string(std::string_view name);

// Unset fields take their defaults from the detection parameters:
// recurrence_tau = lambda, tail_slack = kappa.
struct RegimeRules {
  std::optional<double> recurrence_tau;
  std::optional<std::size_t> tail_slack;
  std::size_t min_terminal_span = 10;
  double coverage_min = 0.25;

  RegimeRules resolved(const ClusterParams& params) const;

  friend bool operator==(const RegimeRules&, const RegimeRules&) = default;
};

struct RecurrencePair {
  std::size_t first = 0;         // cluster index i (0-based)
  std::size_t second = 0;        // cluster index j >= i + 2
  std::size_t intervening = 0;   // cluster k in (i, j) distinct from i
  double similarity = 0.0;       // sim(a_i, a_j)

  friend bool operator==(const RecurrencePair&, const RecurrencePair&) = default;
};

// Evidence behind a label. Every field is derived from the report's own data.
struct RegimeRationale {
  std::string rule;  // "recurrence", "terminal_cluster", "low_coverage" or "fallback"
  std::optional<RecurrencePair> recurrence;
  std::optional<std::size_t> terminal_start_t;
  std::optional<std::size_t> terminal_end_t;
  std::size_t horizon = 0;
  double coverage = 0.0;  // total members / (T + 1)

  friend bool operator==(const RegimeRationale&, const RegimeRationale&) = default;
};

struct RegimeReport {
  RegimeLabel label = RegimeLabel::Unclassified;
  std::vector<Cluster> clusters;
  DriftSeries drift;
  Matrix attractor_matrix;
  ClusterParams params;
  RegimeRules rules;  // resolved
  RegimeRationale rationale;
};

// Rules are applied in order: oscillatory recurrence, terminal cluster
// (contractive), low coverage (exploratory), otherwise unclassified.
// Throws MismatchedInputs if a cluster does not fit the trajectory.
RegimeReport classify_regime(const Trajectory& trajectory, std::vector<Cluster> clusters,
                             const Similarity& sim, const ClusterParams& params,
                             const RegimeRules& rules = {});
RegimeReport classify_regime(std::span<const Embedding> trajectory, std::vector<Cluster> clusters,
                             const Similarity& sim, const ClusterParams& params,
                             const RegimeRules& rules = {});

struct SummaryRow {
  std::string name;
  double mean_local = 0.0;
  double final_global = 0.0;
  std::size_t cluster_count = 0;
  RegimeLabel label = RegimeLabel::Unclassified;
};

std::vector<SummaryRow> comparative_summary(std::span<const RegimeReport> reports,
                                            std::span<const std::string> names = {});

}  // namespace loopdyn
