#include "loopdyn/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "loopdyn/error.hpp"

namespace loopdyn {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 40.0;

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double width, height;
  double x_max;           // largest t on the axis
  double y_bottom, y_top; // plot units
  double plot_w() const { return width - kMarginLeft - kMarginRight; }
  double plot_h() const { return height - kMarginTop - kMarginBottom; }
  double y_scale() const { return plot_h() / (y_top - y_bottom); }
  double x(double t) const { return kMarginLeft + t * plot_w() / x_max; }
  double y(double v) const { return kMarginTop + (y_top - v) * y_scale(); }
};

void axes(std::ostringstream& out, const Frame& f, std::size_t horizon) {
  const double x0 = kMarginLeft;
  const double y0 = f.height - kMarginBottom;
  out << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << px(x0) << "\" y1=\"" << px(y0) << "\" x2=\"" << px(f.width - kMarginRight)
      << "\" y2=\"" << px(y0) << "\"/>\n"
      << "<line x1=\"" << px(x0) << "\" y1=\"" << px(kMarginTop) << "\" x2=\"" << px(x0)
      << "\" y2=\"" << px(y0) << "\"/>\n";
  const std::size_t step = horizon > 50 ? 20 : (horizon > 10 ? 10 : 1);
  for (std::size_t t = 0; t <= horizon; t += step) {
    out << "<line x1=\"" << px(f.x(double(t))) << "\" y1=\"" << px(y0) << "\" x2=\""
        << px(f.x(double(t))) << "\" y2=\"" << px(y0 + 4) << "\"/>\n";
  }
  out << "</g>\n<g class=\"tick-labels\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"middle\">\n";
  for (std::size_t t = 0; t <= horizon; t += step) {
    out << "<text x=\"" << px(f.x(double(t))) << "\" y=\"" << px(y0 + 16) << "\">" << t
        << "</text>\n";
  }
  out << "<text x=\"" << px(kMarginLeft + f.plot_w() / 2) << "\" y=\"" << px(f.height - 6)
      << "\">iteration t</text>\n</g>\n";
}

ordered_json cluster_to_json(std::size_t id, const Cluster& c) {
  ordered_json j;
  j["id"] = id;
  j["start_t"] = c.start_t;
  j["end_t"] = c.end_t;
  j["dispersion"] = c.dispersion_value;
  j["outlier_count"] = c.outlier_ts.size();
  j["member_ts"] = c.member_ts;
  j["outlier_ts"] = c.outlier_ts;
  const auto a = c.attractor.values();
  j["attractor"] = std::vector<double>(a.begin(), a.end());
  return j;
}

Cluster cluster_from_json(const ordered_json& j) {
  return Cluster{j.at("start_t").get<std::size_t>(),
                 j.at("end_t").get<std::size_t>(),
                 j.at("member_ts").get<std::vector<std::size_t>>(),
                 j.at("outlier_ts").get<std::vector<std::size_t>>(),
                 Embedding::from_unit(j.at("attractor").get<std::vector<double>>()),
                 j.at("dispersion").get<double>()};
}

template <typename T>
ordered_json nullable(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

template <typename T>
std::optional<T> nullable_field(const ordered_json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return obj[key].get<T>();
}

}  // namespace

void TimelinePlotConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::InvalidParams, "alpha must be positive");
  }
  if (width < 200 || height < 150) throw Error(ErrorKind::InvalidParams, "plot is too small");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<TimelinePoint> timeline_points(std::span<const Cluster> clusters,
                                           std::span<const Embedding> trajectory,
                                           const Similarity& sim, const TimelinePlotConfig& cfg) {
  cfg.validate();
  std::vector<TimelinePoint> points;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& c = clusters[i];
    if (c.start_t > c.end_t || c.end_t >= trajectory.size()) {
      throw Error(ErrorKind::MismatchedInputs, "cluster window exceeds the trajectory");
    }
    const std::size_t baseline = i + 1;
    for (std::size_t t = c.start_t; t <= c.end_t; ++t) {
      const bool outlier = std::binary_search(c.outlier_ts.begin(), c.outlier_ts.end(), t);
      if (!outlier && !std::binary_search(c.member_ts.begin(), c.member_ts.end(), t)) {
        throw Error(ErrorKind::MismatchedInputs, "cluster window has an unaccounted index");
      }
      const double deviation = 1.0 - sim(trajectory[t], c.attractor);
      points.push_back({baseline, t, deviation, static_cast<double>(baseline) + cfg.alpha * deviation,
                        outlier ? PointStatus::Outlier : PointStatus::Member});
    }
  }
  return points;
}

std::vector<TimelineBand> timeline_bands(std::span<const Cluster> clusters, double rho,
                                         const TimelinePlotConfig& cfg) {
  cfg.validate();
  std::vector<TimelineBand> bands;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const double base = static_cast<double>(i + 1);
    bands.push_back({i + 1, clusters[i].start_t, clusters[i].end_t, base, base + cfg.alpha * rho});
  }
  return bands;
}

std::string emit_timeline_svg(std::span<const TimelinePoint> points,
                              std::span<const TimelineBand> bands, std::size_t horizon,
                              const TimelinePlotConfig& cfg, const std::string& title) {
  cfg.validate();
  std::size_t clusters = 0;
  double y_max = 1.0;
  for (const auto& b : bands) {
    clusters = std::max(clusters, b.cluster);
    y_max = std::max(y_max, b.y_high);
  }
  for (const auto& p : points) {
    clusters = std::max(clusters, p.cluster);
    y_max = std::max(y_max, p.y);
  }
  y_max = std::max(y_max, static_cast<double>(clusters));
  const Frame f{double(cfg.width), double(cfg.height), double(std::max<std::size_t>(horizon, 1)),
                0.5, y_max + 0.25};

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << cfg.width
      << "\" height=\"" << cfg.height << "\" viewBox=\"0 0 " << cfg.width << ' ' << cfg.height
      << "\" data-alpha=\"" << format_double(cfg.alpha) << "\" data-y-scale=\""
      << format_double(f.y_scale()) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << cfg.width << "\" height=\"" << cfg.height
      << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << px(f.width / 2) << "\" y=\"18\" font-family=\"sans-serif\" "
        << "font-size=\"13\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n";
  }
  axes(out, f, horizon);

  out << "<g class=\"bands\">\n";
  for (const auto& b : bands) {
    const double x0 = f.x(double(b.start_t)) - 4.0;
    const double x1 = f.x(double(b.end_t)) + 4.0;
    out << "<rect class=\"band\" data-cluster=\"" << b.cluster << "\" data-y-low=\""
        << format_double(b.y_low) << "\" data-height=\"" << format_double(b.y_high - b.y_low)
        << "\" x=\"" << px(x0) << "\" y=\"" << px(f.y(b.y_high)) << "\" width=\"" << px(x1 - x0)
        << "\" height=\"" << px((b.y_high - b.y_low) * f.y_scale())
        << "\" fill=\"grey\" fill-opacity=\"0.3\"/>\n";
  }
  out << "</g>\n<g class=\"baselines\" stroke=\"grey\" stroke-dasharray=\"3,3\">\n";
  for (std::size_t i = 1; i <= clusters; ++i) {
    out << "<line x1=\"" << px(kMarginLeft) << "\" y1=\"" << px(f.y(double(i))) << "\" x2=\""
        << px(f.width - kMarginRight) << "\" y2=\"" << px(f.y(double(i))) << "\"/>\n";
  }
  out << "</g>\n<g class=\"cluster-labels\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"end\">\n";
  for (std::size_t i = 1; i <= clusters; ++i) {
    out << "<text x=\"" << px(kMarginLeft - 6) << "\" y=\"" << px(f.y(double(i)) + 4) << "\">C"
        << i << "</text>\n";
  }
  out << "</g>\n<g class=\"points\">\n";
  for (const auto& p : points) {
    const bool member = p.status == PointStatus::Member;
    out << "<circle class=\"" << (member ? "member" : "outlier") << "\" data-cluster=\""
        << p.cluster << "\" data-t=\"" << p.t << "\" data-y=\"" << format_double(p.y)
        << "\" cx=\"" << px(f.x(double(p.t))) << "\" cy=\"" << px(f.y(p.y))
        << "\" r=\"3\" fill=\"" << (member ? "blue" : "red") << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string emit_drift_svg(const DriftSeries& drift, const TimelinePlotConfig& cfg,
                           const std::string& title) {
  cfg.validate();
  double y_min = 0.0;
  for (double v : drift.local) y_min = std::min(y_min, v);
  for (double v : drift.global) y_min = std::min(y_min, v);
  y_min = y_min < 0.0 ? -1.0 : 0.0;
  const std::size_t horizon = drift.local.size();
  const Frame f{double(cfg.width), double(cfg.height), double(std::max<std::size_t>(horizon, 1)),
                y_min, 1.0};

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << cfg.width
      << "\" height=\"" << cfg.height << "\" viewBox=\"0 0 " << cfg.width << ' ' << cfg.height
      << "\">\n<rect x=\"0\" y=\"0\" width=\"" << cfg.width << "\" height=\"" << cfg.height
      << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << px(f.width / 2) << "\" y=\"18\" font-family=\"sans-serif\" "
        << "font-size=\"13\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n";
  }
  axes(out, f, horizon);
  out << "<g class=\"y-labels\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">\n";
  for (double v = y_min; v <= 1.0 + 1e-9; v += 0.25) {
    out << "<text x=\"" << px(kMarginLeft - 6) << "\" y=\"" << px(f.y(v) + 4) << "\">"
        << format_double(v) << "</text>\n";
  }
  out << "</g>\n";
  auto polyline = [&](const std::vector<double>& series, const char* cls, const char* color) {
    out << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series.size(); ++i) {
      out << (i ? " " : "") << px(f.x(double(i + 1))) << ',' << px(f.y(series[i]));
    }
    out << "\"/>\n";
  };
  polyline(drift.local, "local", "blue");
  polyline(drift.global, "global", "darkorange");
  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<text x=\"" << px(f.width - 160) << "\" y=\"" << px(kMarginTop + 12)
      << "\" fill=\"blue\">local s(e_t, e_t-1)</text>\n"
      << "<text x=\"" << px(f.width - 160) << "\" y=\"" << px(kMarginTop + 26)
      << "\" fill=\"darkorange\">global s(e_t, e_0)</text>\n</g>\n</svg>\n";
  return out.str();
}

std::string drift_csv(const DriftSeries& drift) {
  std::string out = "t,local,global\n";
  for (std::size_t i = 0; i < drift.local.size(); ++i) {
    out += std::to_string(i + 1) + ',' + format_double(drift.local[i]) + ',' +
           format_double(drift.global[i]) + '\n';
  }
  return out;
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::string out = "name,mean_local,final_global,clusters,regime\n";
  for (const auto& r : rows) {
    out += r.name + ',' + format_double(r.mean_local) + ',' + format_double(r.final_global) + ',' +
           std::to_string(r.cluster_count) + ',' + std::string(to_string(r.label)) + '\n';
  }
  return out;
}

ReportDocument make_report_document(RegimeReport report, std::span<const Embedding> trajectory,
                                    const Similarity& sim, std::string calibration,
                                    const TimelinePlotConfig& plot) {
  ReportDocument doc;
  doc.points = timeline_points(report.clusters, trajectory, sim, plot);
  doc.bands = timeline_bands(report.clusters, report.params.rho, plot);
  doc.report = std::move(report);
  doc.calibration = std::move(calibration);
  doc.plot = plot;
  return doc;
}

std::string report_to_json(const ReportDocument& doc) {
  const auto& rep = doc.report;
  ordered_json j;
  j["schema"] = "loopdyn-report/1";
  j["calibration"] = doc.calibration;
  j["params"] = {{"lambda", rep.params.lambda},
                 {"rho", rep.params.rho},
                 {"kappa", rep.params.kappa},
                 {"min_members", rep.params.min_members}};
  j["rules"] = {{"recurrence_tau", nullable(rep.rules.recurrence_tau)},
                {"tail_slack", nullable(rep.rules.tail_slack)},
                {"min_terminal_span", rep.rules.min_terminal_span},
                {"coverage_min", rep.rules.coverage_min}};
  j["regime"] = std::string(to_string(rep.label));

  const auto& why = rep.rationale;
  ordered_json rationale;
  rationale["rule"] = why.rule;
  rationale["horizon"] = why.horizon;
  rationale["coverage"] = why.coverage;
  rationale["terminal_start_t"] = nullable(why.terminal_start_t);
  rationale["terminal_end_t"] = nullable(why.terminal_end_t);
  if (why.recurrence) {
    const auto& r = *why.recurrence;
    rationale["recurrence"] = {{"first", r.first},
                               {"second", r.second},
                               {"intervening", r.intervening},
                               {"similarity", r.similarity}};
  } else {
    rationale["recurrence"] = nullptr;
  }
  j["rationale"] = rationale;

  auto& clusters = j["clusters"] = ordered_json::array();
  for (std::size_t i = 0; i < rep.clusters.size(); ++i) {
    clusters.push_back(cluster_to_json(i + 1, rep.clusters[i]));
  }
  j["attractor_matrix"] = rep.attractor_matrix;
  j["drift"] = {{"local", rep.drift.local}, {"global", rep.drift.global}};

  const auto rows = comparative_summary(std::span(&rep, 1));
  j["summary"] = {{"mean_local", rows.front().mean_local},
                  {"final_global", rows.front().final_global},
                  {"cluster_count", rows.front().cluster_count}};

  ordered_json timeline;
  timeline["alpha"] = doc.plot.alpha;
  timeline["width"] = doc.plot.width;
  timeline["height"] = doc.plot.height;
  auto& pts = timeline["points"] = ordered_json::array();
  for (const auto& p : doc.points) {
    pts.push_back({{"cluster", p.cluster},
                   {"t", p.t},
                   {"deviation", p.deviation},
                   {"y", p.y},
                   {"status", p.status == PointStatus::Member ? "member" : "outlier"}});
  }
  auto& bands = timeline["bands"] = ordered_json::array();
  for (const auto& b : doc.bands) {
    bands.push_back({{"cluster", b.cluster},
                     {"start_t", b.start_t},
                     {"end_t", b.end_t},
                     {"y_low", b.y_low},
                     {"y_high", b.y_high}});
  }
  j["timeline"] = timeline;
  return j.dump(2) + "\n";
}

ReportDocument report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("report: ") + e.what());
  }
  try {
    ReportDocument doc;
    auto& rep = doc.report;
    doc.calibration = j.at("calibration").get<std::string>();
    const auto& p = j.at("params");
    rep.params = {p.at("lambda").get<double>(), p.at("rho").get<double>(),
                  p.at("kappa").get<std::size_t>(), p.at("min_members").get<std::size_t>()};
    const auto& r = j.at("rules");
    rep.rules.recurrence_tau = nullable_field<double>(r, "recurrence_tau");
    rep.rules.tail_slack = nullable_field<std::size_t>(r, "tail_slack");
    rep.rules.min_terminal_span = r.at("min_terminal_span").get<std::size_t>();
    rep.rules.coverage_min = r.at("coverage_min").get<double>();
    rep.label = regime_from_string(j.at("regime").get<std::string>());

    const auto& why = j.at("rationale");
    rep.rationale.rule = why.at("rule").get<std::string>();
    rep.rationale.horizon = why.at("horizon").get<std::size_t>();
    rep.rationale.coverage = why.at("coverage").get<double>();
    rep.rationale.terminal_start_t = nullable_field<std::size_t>(why, "terminal_start_t");
    rep.rationale.terminal_end_t = nullable_field<std::size_t>(why, "terminal_end_t");
    if (why.contains("recurrence") && !why["recurrence"].is_null()) {
      const auto& rec = why["recurrence"];
      rep.rationale.recurrence =
          RecurrencePair{rec.at("first").get<std::size_t>(), rec.at("second").get<std::size_t>(),
                         rec.at("intervening").get<std::size_t>(), rec.at("similarity").get<double>()};
    }

    for (const auto& c : j.at("clusters")) rep.clusters.push_back(cluster_from_json(c));
    rep.attractor_matrix = j.at("attractor_matrix").get<Matrix>();
    rep.drift.local = j.at("drift").at("local").get<std::vector<double>>();
    rep.drift.global = j.at("drift").at("global").get<std::vector<double>>();

    const auto& tl = j.at("timeline");
    doc.plot.alpha = tl.at("alpha").get<double>();
    doc.plot.width = tl.at("width").get<int>();
    doc.plot.height = tl.at("height").get<int>();
    for (const auto& pt : tl.at("points")) {
      const auto status = pt.at("status").get<std::string>();
      if (status != "member" && status != "outlier") {
        throw Error(ErrorKind::Parse, "report: unknown point status '" + status + "'");
      }
      doc.points.push_back({pt.at("cluster").get<std::size_t>(), pt.at("t").get<std::size_t>(),
                            pt.at("deviation").get<double>(), pt.at("y").get<double>(),
                            status == "member" ? PointStatus::Member : PointStatus::Outlier});
    }
    for (const auto& b : tl.at("bands")) {
      doc.bands.push_back({b.at("cluster").get<std::size_t>(), b.at("start_t").get<std::size_t>(),
                           b.at("end_t").get<std::size_t>(), b.at("y_low").get<double>(),
                           b.at("y_high").get<double>()});
    }
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("report: ") + e.what());
  }
}

}  // namespace loopdyn
