#pragma once

// Synthetic embedding trajectories with known ground-truth regimes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "loopdyn/dynamics.hpp"
#include "loopdyn/geometry.hpp"
#include "loopdyn/trajectory.hpp"

namespace loopdyn {

struct ContractiveSpec {
  double beta = 0.3;    // pull toward the target, in (0, 1]
  double sigma = 0.01;  // per-coordinate Gaussian noise
  std::optional<Embedding> target;  // random when unset
};

struct OscillatorySpec {
  std::vector<Embedding> centers;  // empty: two orthogonal random centers
  std::size_t block_length = 10;
  double sigma = 0.02;
};

struct SynthSpec {
  RegimeLabel regime = RegimeLabel::Contractive;
  std::size_t dim = 256;
  std::size_t horizon = 50;
  std::uint64_t seed = 0;
  ContractiveSpec contractive;
  OscillatorySpec oscillatory;

  // Throws InvalidSpec.
  void validate() const;
};

// contractive:  e_{t+1} = normalize((1 - beta) e_t + beta a* + sigma g)
// oscillatory:  block b sits around centers[b % K] with sigma jitter
// exploratory:  i.i.d. normalized Gaussian directions
// Deterministic in the seed. Throws InvalidSpec.
Trajectory generate(const SynthSpec& spec);

}  // namespace loopdyn
