#include "loopdyn/synthgen.hpp"

#include <cmath>
#include <random>

#include "loopdyn/error.hpp"

namespace loopdyn {

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  std::vector<double> gaussian(std::size_t dim) {
    std::vector<double> v(dim);
    for (double& x : v) x = normal_(rng_);
    return v;
  }

  Embedding direction(std::size_t dim) {
    for (;;) {
      auto v = gaussian(dim);
      double norm2 = 0.0;
      for (double x : v) norm2 += x * x;
      if (norm2 > 1e-20) return Embedding::normalize(v);
    }
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

Embedding jitter(const Embedding& center, double sigma, Sampler& sampler) {
  auto noise = sampler.gaussian(center.dim());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = center[i] + sigma * noise[i];
  return Embedding::normalize(noise);
}

// Second center orthogonal to the first (Gram-Schmidt on a random draw).
Embedding orthogonal_to(const Embedding& a, Sampler& sampler) {
  for (;;) {
    auto v = sampler.gaussian(a.dim());
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * a[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * a[i];
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 > 1e-20) return Embedding::normalize(v);
  }
}

}  // namespace

void SynthSpec::validate() const {
  if (dim == 0) throw Error(ErrorKind::InvalidSpec, "dim must be positive");
  if (horizon == 0) throw Error(ErrorKind::InvalidSpec, "horizon must be positive");
  switch (regime) {
    case RegimeLabel::Contractive:
      if (!(contractive.beta > 0.0 && contractive.beta <= 1.0)) {
        throw Error(ErrorKind::InvalidSpec, "beta must lie in (0, 1]");
      }
      if (!(contractive.sigma >= 0.0) || !std::isfinite(contractive.sigma)) {
        throw Error(ErrorKind::InvalidSpec, "sigma must be non-negative");
      }
      if (contractive.target && contractive.target->dim() != dim) {
        throw Error(ErrorKind::InvalidSpec, "target dimension does not match dim");
      }
      break;
    case RegimeLabel::Oscillatory:
      if (oscillatory.block_length == 0) {
        throw Error(ErrorKind::InvalidSpec, "block_length must be positive");
      }
      if (!(oscillatory.sigma >= 0.0) || !std::isfinite(oscillatory.sigma)) {
        throw Error(ErrorKind::InvalidSpec, "sigma must be non-negative");
      }
      if (oscillatory.centers.size() == 1) {
        throw Error(ErrorKind::InvalidSpec, "oscillation needs at least two centers");
      }
      for (const auto& c : oscillatory.centers) {
        if (c.dim() != dim) throw Error(ErrorKind::InvalidSpec, "center dimension does not match dim");
      }
      break;
    case RegimeLabel::Exploratory:
      break;
    case RegimeLabel::Unclassified:
      throw Error(ErrorKind::InvalidSpec, "no generator for the Unclassified label");
  }
}

Trajectory generate(const SynthSpec& spec) {
  spec.validate();
  Sampler sampler(spec.seed);
  std::vector<Embedding> points;
  points.reserve(spec.horizon + 1);

  switch (spec.regime) {
    case RegimeLabel::Contractive: {
      const auto& c = spec.contractive;
      const Embedding target = c.target ? *c.target : sampler.direction(spec.dim);
      points.push_back(sampler.direction(spec.dim));
      for (std::size_t t = 1; t <= spec.horizon; ++t) {
        const auto& prev = points.back();
        auto noise = sampler.gaussian(spec.dim);
        std::vector<double> next(spec.dim);
        for (std::size_t i = 0; i < spec.dim; ++i) {
          next[i] = (1.0 - c.beta) * prev[i] + c.beta * target[i] + c.sigma * noise[i];
        }
        points.push_back(Embedding::normalize(next));
      }
      break;
    }
    case RegimeLabel::Oscillatory: {
      const auto& o = spec.oscillatory;
      std::vector<Embedding> centers = o.centers;
      if (centers.empty()) {
        centers.push_back(sampler.direction(spec.dim));
        centers.push_back(orthogonal_to(centers.front(), sampler));
      }
      for (std::size_t t = 0; t <= spec.horizon; ++t) {
        const auto& center = centers[(t / o.block_length) % centers.size()];
        points.push_back(jitter(center, o.sigma, sampler));
      }
      break;
    }
    case RegimeLabel::Exploratory:
      for (std::size_t t = 0; t <= spec.horizon; ++t) points.push_back(sampler.direction(spec.dim));
      break;
    case RegimeLabel::Unclassified:
      break;
  }
  return Trajectory::from_embeddings(std::move(points));
}

}  // namespace loopdyn
