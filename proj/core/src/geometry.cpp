#include "loopdyn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loopdyn/calibration.hpp"
#include "loopdyn/error.hpp"

namespace loopdyn {

namespace {

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace

Embedding Embedding::normalize(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorKind::ZeroVector, "cannot normalize an empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "vector has a NaN or infinite entry");
  }
  const double norm = l2_norm(v);
  if (norm <= kDegenerateNorm) throw Error(ErrorKind::ZeroVector, "vector norm is zero");
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [norm](double x) { return x / norm; });
  return Embedding(std::move(out));
}

Embedding Embedding::from_unit(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorKind::ZeroVector, "embedding is empty");
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "embedding has a NaN or infinite entry");
  }
  const double norm = l2_norm(v);
  if (std::abs(norm - 1.0) > kUnitNormTolerance) {
    throw Error(ErrorKind::InvalidParams,
                "embedding is not unit length (norm " + std::to_string(norm) + ")");
  }
  return Embedding(std::move(v));
}

double raw_cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::DimMismatch, "cosine of embeddings with dims " +
                                            std::to_string(a.dim()) + " and " +
                                            std::to_string(b.dim()));
  }
  // Exact for a direction with itself, which rounding would otherwise miss.
  if (a == b) return 1.0;
  const auto x = a.values();
  const auto y = b.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  return std::clamp(dot, -1.0, 1.0);
}

Embedding center_of_gravity(std::span<const Embedding> set) {
  if (set.empty()) throw Error(ErrorKind::InsufficientData, "center of gravity of an empty set");
  const std::size_t dim = set.front().dim();
  std::vector<double> mean(dim, 0.0);
  bool identical = true;
  for (const auto& e : set) {
    if (e.dim() != dim) throw Error(ErrorKind::DimMismatch, "embedding set has mixed dimensions");
    identical = identical && e == set.front();
    const auto v = e.values();
    for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
  }
  if (identical) return set.front();
  const double k = static_cast<double>(set.size());
  for (double& m : mean) m /= k;
  if (l2_norm(mean) <= kDegenerateNorm) {
    throw Error(ErrorKind::DegenerateMean, "mean of embedding set has zero norm");
  }
  return Embedding::normalize(mean);
}

double dispersion(std::span<const Embedding> set, const Similarity& sim) {
  return dispersion(set, center_of_gravity(set), sim);
}

double dispersion(std::span<const Embedding> set, const Embedding& center,
                  const Similarity& sim) {
  double worst = 0.0;
  for (const auto& e : set) worst = std::max(worst, 1.0 - sim(e, center));
  return worst;
}

}  // namespace loopdyn
