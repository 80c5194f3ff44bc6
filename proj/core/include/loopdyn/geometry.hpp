#pragma once

// Spherical embedding arithmetic. Every Embedding lives on the unit sphere
// S^{d-1}; all helpers here are pure and deterministic.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace loopdyn {

class Similarity;

inline constexpr double kUnitNormTolerance = 1e-9;
inline constexpr double kDegenerateNorm = 1e-12;

// Immutable unit vector. Copies share storage.
class Embedding {
 public:
  // Scales `v` to unit length. Throws ZeroVector / NonFinite.
  static Embedding normalize(std::span<const double> v);

  // Adopts `v` as-is after checking it is already unit length (within
  // kUnitNormTolerance). Used when reloading persisted embeddings so that
  // stored bits are preserved.
  static Embedding from_unit(std::vector<double> v);

  std::span<const double> values() const noexcept { return *values_; }
  std::size_t dim() const noexcept { return values_->size(); }
  double operator[](std::size_t i) const noexcept { return (*values_)[i]; }

  friend bool operator==(const Embedding& a, const Embedding& b) noexcept {
    return a.values_ == b.values_ || *a.values_ == *b.values_;
  }

 private:
  explicit Embedding(std::vector<double> v)
      : values_(std::make_shared<const std::vector<double>>(std::move(v))) {}

  std::shared_ptr<const std::vector<double>> values_;
};

// Inner product clamped to [-1, 1].
double raw_cosine(const Embedding& a, const Embedding& b);

// L2-normalized arithmetic mean. Throws DegenerateMean when the mean has
// norm <= kDegenerateNorm, InsufficientData on an empty set.
Embedding center_of_gravity(std::span<const Embedding> set);

// max over members of 1 - sim(member, center_of_gravity(set)).
double dispersion(std::span<const Embedding> set, const Similarity& sim);

// Same as above when the center is already known.
double dispersion(std::span<const Embedding> set, const Embedding& center,
                  const Similarity& sim);

}  // namespace loopdyn
