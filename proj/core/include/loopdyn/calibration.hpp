#pragma once

// Isotonic calibration of raw cosine similarity and the high-confidence
// similarity threshold derived from it.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loopdyn/geometry.hpp"

namespace loopdyn {

struct CalibrationPair {
  double raw = 0.0;     // cosine of a sentence pair, in [-1, 1]
  double target = 0.0;  // normalized human similarity, in [0, 1]
};

struct Knot {
  double raw = 0.0;
  double calibrated = 0.0;

  friend bool operator==(const Knot&, const Knot&) = default;
};

// Monotone piecewise-linear map from raw cosine to calibrated similarity.
// Knots are strictly increasing in raw, non-decreasing in calibrated and
// calibrated values lie in [0, 1]. Outside the knot range the map is flat.
class CalibrationMap {
 public:
  static CalibrationMap from_knots(std::vector<Knot> knots,
                                   std::optional<double> tau_hcs = std::nullopt);

  double apply(double raw) const noexcept;

  const std::vector<Knot>& knots() const noexcept { return knots_; }
  std::optional<double> tau_hcs() const noexcept { return tau_hcs_; }
  CalibrationMap with_tau_hcs(double tau) const;

  friend bool operator==(const CalibrationMap&, const CalibrationMap&) = default;

 private:
  CalibrationMap() = default;

  std::vector<Knot> knots_;
  std::optional<double> tau_hcs_;
};

// Least-squares non-decreasing fit of target on raw (pool-adjacent-violators).
// Pairs sharing a raw value are pooled by their mean before fitting.
// Throws InsufficientData (< 2 pairs), DegenerateAbscissa (all raw equal).
CalibrationMap fit_isotonic(std::span<const CalibrationPair> pairs);

// Lower-interpolated `quantile` of calibrated similarity over pairs whose
// target is >= high_target_cut. Throws NoHighSimilarityPairs.
double hcs_threshold(std::span<const CalibrationPair> pairs, const CalibrationMap& map,
                     double high_target_cut = 0.8, double quantile = 0.05);

// Calibrated similarity s(e1, e2) = f(<e1, e2>). An empty chain is the
// identity on raw cosine; otherwise the maps are applied in order, so
// `sim.then(g)` realizes g . sim.
class Similarity {
 public:
  Similarity() = default;
  explicit Similarity(CalibrationMap map) { chain_.push_back(std::move(map)); }

  static Similarity identity() { return {}; }

  Similarity then(CalibrationMap outer) const {
    Similarity out = *this;
    out.chain_.push_back(std::move(outer));
    return out;
  }

  double calibrate(double raw) const noexcept {
    for (const auto& m : chain_) raw = m.apply(raw);
    return raw;
  }

  double operator()(const Embedding& a, const Embedding& b) const {
    return calibrate(raw_cosine(a, b));
  }

  bool is_identity() const noexcept { return chain_.empty(); }
  const std::vector<CalibrationMap>& chain() const noexcept { return chain_; }

 private:
  std::vector<CalibrationMap> chain_;
};

// Persistence: {"kind": "isotonic", "knots": [[raw, calibrated], ...], "tau_hcs": x|null}.
std::string calibration_to_json(const CalibrationMap& map);
CalibrationMap calibration_from_json(const std::string& text);
CalibrationMap load_calibration(const std::string& path);
void save_calibration(const CalibrationMap& map, const std::string& path);

}  // namespace loopdyn
