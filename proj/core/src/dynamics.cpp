#include "loopdyn/dynamics.hpp"

#include <numeric>

#include "loopdyn/error.hpp"

namespace loopdyn {

namespace {

void check_clusters(std::span<const Cluster> clusters, std::size_t horizon) {
  std::optional<std::size_t> prev_end;
  for (const auto& c : clusters) {
    if (c.start_t > c.end_t || c.end_t > horizon || c.member_ts.empty()) {
      throw Error(ErrorKind::MismatchedInputs, "cluster range does not fit the trajectory");
    }
    if (prev_end && c.start_t <= *prev_end) {
      throw Error(ErrorKind::MismatchedInputs, "clusters must be ordered and non-overlapping");
    }
    prev_end = c.end_t;
  }
}

std::optional<RecurrencePair> find_recurrence(const Matrix& sims, double tau) {
  const std::size_t m = sims.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 2; j < m; ++j) {
      if (sims[i][j] < tau) continue;
      for (std::size_t k = i + 1; k < j; ++k) {
        if (sims[i][k] < tau) return RecurrencePair{i, j, k, sims[i][j]};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

DriftSeries drift_series(std::span<const Embedding> traj, const Similarity& sim) {
  if (traj.size() < 2) throw Error(ErrorKind::TooShort, "drift series needs at least 2 points");
  DriftSeries out;
  out.local.reserve(traj.size() - 1);
  out.global.reserve(traj.size() - 1);
  for (std::size_t t = 1; t < traj.size(); ++t) {
    out.local.push_back(sim(traj[t], traj[t - 1]));
    out.global.push_back(sim(traj[t], traj[0]));
  }
  return out;
}

DriftSeries drift_series(const Trajectory& trajectory, const Similarity& sim) {
  if (trajectory.size() < 2) throw Error(ErrorKind::TooShort, "drift series needs at least 2 points");
  const auto embeddings = trajectory.embeddings();
  return drift_series(embeddings, sim);
}

std::string_view to_string(RegimeLabel label) noexcept {
  switch (label) {
    case RegimeLabel::Contractive: return "Contractive";
    case RegimeLabel::Oscillatory: return "Oscillatory";
    case RegimeLabel::Exploratory: return "Exploratory";
    case RegimeLabel::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

RegimeLabel regime_from_string(std::string_view name) {
  for (auto label : {RegimeLabel::Contractive, RegimeLabel::Oscillatory, RegimeLabel::Exploratory,
                     RegimeLabel::Unclassified}) {
    if (to_string(label) == name) return label;
  }
  throw Error(ErrorKind::Parse, "unknown regime label '" + std::string(name) + "'");
}

RegimeRules RegimeRules::resolved(const ClusterParams& params) const {
  RegimeRules out = *this;
  if (!out.recurrence_tau) out.recurrence_tau = params.lambda;
  if (!out.tail_slack) out.tail_slack = params.kappa;
  return out;
}

RegimeReport classify_regime(std::span<const Embedding> traj, std::vector<Cluster> clusters,
                             const Similarity& sim, const ClusterParams& params,
                             const RegimeRules& rules) {
  if (traj.empty()) throw Error(ErrorKind::EmptyTrajectory, "cannot classify an empty trajectory");
  const std::size_t horizon = traj.size() - 1;
  check_clusters(clusters, horizon);

  RegimeReport report;
  report.params = params;
  report.rules = rules.resolved(params);
  if (traj.size() >= 2) report.drift = drift_series(traj, sim);
  if (!clusters.empty()) report.attractor_matrix = attractor_similarity_matrix(clusters, sim);

  auto& why = report.rationale;
  why.horizon = horizon;
  const std::size_t covered =
      std::accumulate(clusters.begin(), clusters.end(), std::size_t{0},
                      [](std::size_t acc, const Cluster& c) { return acc + c.member_ts.size(); });
  why.coverage = static_cast<double>(covered) / static_cast<double>(horizon + 1);
  if (!clusters.empty()) {
    why.terminal_start_t = clusters.back().start_t;
    why.terminal_end_t = clusters.back().end_t;
  }

  const auto& r = report.rules;
  if (clusters.size() >= 3) {
    if (auto rec = find_recurrence(report.attractor_matrix, *r.recurrence_tau)) {
      why.rule = "recurrence";
      why.recurrence = rec;
      report.label = RegimeLabel::Oscillatory;
    }
  }
  if (why.rule.empty() && !clusters.empty()) {
    const auto& last = clusters.back();
    if (last.end_t + *r.tail_slack >= horizon && last.span() >= r.min_terminal_span) {
      why.rule = "terminal_cluster";
      report.label = RegimeLabel::Contractive;
    }
  }
  if (why.rule.empty() && why.coverage < r.coverage_min) {
    why.rule = "low_coverage";
    report.label = RegimeLabel::Exploratory;
  }
  if (why.rule.empty()) {
    why.rule = "fallback";
    report.label = RegimeLabel::Unclassified;
  }
  report.clusters = std::move(clusters);
  return report;
}

RegimeReport classify_regime(const Trajectory& trajectory, std::vector<Cluster> clusters,
                             const Similarity& sim, const ClusterParams& params,
                             const RegimeRules& rules) {
  const auto embeddings = trajectory.embeddings();
  return classify_regime(embeddings, std::move(clusters), sim, params, rules);
}

std::vector<SummaryRow> comparative_summary(std::span<const RegimeReport> reports,
                                            std::span<const std::string> names) {
  std::vector<SummaryRow> rows;
  rows.reserve(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& rep = reports[i];
    SummaryRow row;
    row.name = i < names.size() ? names[i] : "report_" + std::to_string(i + 1);
    const auto& local = rep.drift.local;
    if (!local.empty()) {
      row.mean_local = std::accumulate(local.begin(), local.end(), 0.0) /
                       static_cast<double>(local.size());
      row.final_global = rep.drift.global.back();
    }
    row.cluster_count = rep.clusters.size();
    row.label = rep.label;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace loopdyn
