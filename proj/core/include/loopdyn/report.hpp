#pragma once

// Cluster timeline figures, drift plots and machine-readable reports.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "loopdyn/calibration.hpp"
#include "loopdyn/clustering.hpp"
#include "loopdyn/dynamics.hpp"

namespace loopdyn {

struct TimelinePlotConfig {
  double alpha = 2.0;  // vertical amplification of 1 - sim
  int width = 960;
  int height = 360;

  // Throws InvalidParams.
  void validate() const;
};

enum class PointStatus { Member, Outlier };

struct TimelinePoint {
  std::size_t cluster = 0;   // 1-based baseline index
  std::size_t t = 0;
  double deviation = 0.0;    // 1 - sim(e_t, a_i)
  double y = 0.0;            // cluster + alpha * deviation
  PointStatus status = PointStatus::Member;

  friend bool operator==(const TimelinePoint&, const TimelinePoint&) = default;
};

// Grey band [cluster, cluster + alpha * rho] spanning the cluster's window.
struct TimelineBand {
  std::size_t cluster = 0;
  std::size_t start_t = 0;
  std::size_t end_t = 0;
  double y_low = 0.0;
  double y_high = 0.0;

  friend bool operator==(const TimelineBand&, const TimelineBand&) = default;
};

// One point per index of every cluster window. Throws MismatchedInputs when
// a cluster does not fit the trajectory.
std::vector<TimelinePoint> timeline_points(std::span<const Cluster> clusters,
                                           std::span<const Embedding> trajectory,
                                           const Similarity& sim, const TimelinePlotConfig& cfg);

std::vector<TimelineBand> timeline_bands(std::span<const Cluster> clusters, double rho,
                                         const TimelinePlotConfig& cfg);

// SVG 1.1. Members blue, outliers red, bands grey. Byte-stable for equal input.
std::string emit_timeline_svg(std::span<const TimelinePoint> points,
                              std::span<const TimelineBand> bands, std::size_t horizon,
                              const TimelinePlotConfig& cfg, const std::string& title = {});

// Local and global similarity line chart.
std::string emit_drift_svg(const DriftSeries& drift, const TimelinePlotConfig& cfg,
                           const std::string& title = {});

// Header "t,local,global", one row per t = 1..T.
std::string drift_csv(const DriftSeries& drift);

std::string summary_csv(std::span<const SummaryRow> rows);

struct ReportDocument {
  RegimeReport report;
  std::string calibration;  // "identity" or a description of the map
  TimelinePlotConfig plot;
  std::vector<TimelinePoint> points;
  std::vector<TimelineBand> bands;
};

// Builds timeline data for `report` and bundles everything for emission.
ReportDocument make_report_document(RegimeReport report, std::span<const Embedding> trajectory,
                                    const Similarity& sim, std::string calibration,
                                    const TimelinePlotConfig& plot = {});

// JSON with shortest round-trip float formatting.
std::string report_to_json(const ReportDocument& doc);
// Throws Parse.
ReportDocument report_from_json(const std::string& text);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace loopdyn
