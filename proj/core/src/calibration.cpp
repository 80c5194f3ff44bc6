#include "loopdyn/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "loopdyn/error.hpp"

namespace loopdyn {

namespace {

void validate_pair(const CalibrationPair& p) {
  if (!std::isfinite(p.raw) || !std::isfinite(p.target)) {
    throw Error(ErrorKind::NonFinite, "calibration pair has a non-finite value");
  }
  if (p.raw < -1.0 || p.raw > 1.0) {
    throw Error(ErrorKind::InvalidParams, "calibration raw cosine outside [-1, 1]");
  }
  if (p.target < 0.0 || p.target > 1.0) {
    throw Error(ErrorKind::InvalidParams, "calibration target outside [0, 1]");
  }
}

struct Block {
  double sum = 0.0;
  double weight = 0.0;
  std::size_t groups = 0;
  double mean() const { return sum / weight; }
};

}  // namespace

CalibrationMap CalibrationMap::from_knots(std::vector<Knot> knots, std::optional<double> tau_hcs) {
  if (knots.empty()) throw Error(ErrorKind::InvalidParams, "calibration map needs at least one knot");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto& k = knots[i];
    if (!std::isfinite(k.raw) || !std::isfinite(k.calibrated)) {
      throw Error(ErrorKind::NonFinite, "calibration knot is not finite");
    }
    if (k.calibrated < 0.0 || k.calibrated > 1.0) {
      throw Error(ErrorKind::InvalidParams, "calibrated value outside [0, 1]");
    }
    if (i > 0) {
      if (!(knots[i - 1].raw < k.raw)) {
        throw Error(ErrorKind::InvalidParams, "knots must be strictly increasing in raw");
      }
      if (knots[i - 1].calibrated > k.calibrated) {
        throw Error(ErrorKind::InvalidParams, "knots must be non-decreasing in calibrated value");
      }
    }
  }
  if (tau_hcs && (!std::isfinite(*tau_hcs) || *tau_hcs < 0.0 || *tau_hcs > 1.0)) {
    throw Error(ErrorKind::InvalidParams, "tau_hcs outside [0, 1]");
  }
  CalibrationMap map;
  map.knots_ = std::move(knots);
  map.tau_hcs_ = tau_hcs;
  return map;
}

CalibrationMap CalibrationMap::with_tau_hcs(double tau) const {
  return from_knots(knots_, tau);
}

double CalibrationMap::apply(double raw) const noexcept {
  if (raw <= knots_.front().raw) return knots_.front().calibrated;
  if (raw >= knots_.back().raw) return knots_.back().calibrated;
  const auto hi = std::upper_bound(knots_.begin(), knots_.end(), raw,
                                   [](double r, const Knot& k) { return r < k.raw; });
  const auto lo = hi - 1;
  const double frac = (raw - lo->raw) / (hi->raw - lo->raw);
  const double y = lo->calibrated + (hi->calibrated - lo->calibrated) * frac;
  return std::clamp(y, lo->calibrated, hi->calibrated);
}

CalibrationMap fit_isotonic(std::span<const CalibrationPair> pairs) {
  if (pairs.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "isotonic fit needs at least 2 pairs");
  }
  for (const auto& p : pairs) validate_pair(p);

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pairs[a].raw < pairs[b].raw; });

  // Tie pooling: one weighted group per distinct raw value.
  std::vector<double> xs;
  std::vector<Block> groups;
  for (std::size_t idx : order) {
    const auto& p = pairs[idx];
    if (xs.empty() || xs.back() != p.raw) {
      xs.push_back(p.raw);
      groups.push_back({0.0, 0.0, 1});
    }
    groups.back().sum += p.target;
    groups.back().weight += 1.0;
  }
  if (xs.size() < 2) {
    throw Error(ErrorKind::DegenerateAbscissa, "all calibration raw values are identical");
  }

  std::vector<Block> stack;
  stack.reserve(groups.size());
  for (const auto& g : groups) {
    stack.push_back(g);
    while (stack.size() > 1 && stack[stack.size() - 2].mean() > stack.back().mean()) {
      Block top = stack.back();
      stack.pop_back();
      stack.back().sum += top.sum;
      stack.back().weight += top.weight;
      stack.back().groups += top.groups;
    }
  }

  std::vector<Knot> knots;
  knots.reserve(xs.size());
  std::size_t i = 0;
  for (const auto& b : stack) {
    const double value = std::clamp(b.mean(), 0.0, 1.0);
    for (std::size_t j = 0; j < b.groups; ++j) knots.push_back({xs[i++], value});
  }
  return CalibrationMap::from_knots(std::move(knots));
}

double hcs_threshold(std::span<const CalibrationPair> pairs, const CalibrationMap& map,
                     double high_target_cut, double quantile) {
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw Error(ErrorKind::InvalidParams, "quantile must lie in (0, 1)");
  }
  std::vector<double> values;
  for (const auto& p : pairs) {
    if (p.target >= high_target_cut) values.push_back(map.apply(p.raw));
  }
  if (values.empty()) {
    throw Error(ErrorKind::NoHighSimilarityPairs, "no pair reaches the high-similarity cut");
  }
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(
      std::floor(quantile * static_cast<double>(values.size() - 1)));
  return values[idx];
}

std::string calibration_to_json(const CalibrationMap& map) {
  nlohmann::json doc;
  doc["kind"] = "isotonic";
  auto& knots = doc["knots"] = nlohmann::json::array();
  for (const auto& k : map.knots()) knots.push_back({k.raw, k.calibrated});
  doc["tau_hcs"] = map.tau_hcs() ? nlohmann::json(*map.tau_hcs()) : nlohmann::json(nullptr);
  return doc.dump(2) + "\n";
}

CalibrationMap calibration_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("calibration map: ") + e.what());
  }
  try {
    std::vector<Knot> knots;
    for (const auto& k : doc.at("knots")) {
      knots.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
    }
    std::optional<double> tau;
    if (doc.contains("tau_hcs") && !doc["tau_hcs"].is_null()) tau = doc["tau_hcs"].get<double>();
    return CalibrationMap::from_knots(std::move(knots), tau);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("calibration map: ") + e.what());
  }
}

CalibrationMap load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open calibration map " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return calibration_from_json(ss.str());
}

void save_calibration(const CalibrationMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write calibration map " + path);
  out << calibration_to_json(map);
  if (!out) throw Error(ErrorKind::Io, "failed writing calibration map " + path);
}

}  // namespace loopdyn
