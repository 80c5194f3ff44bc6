#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "loopdyn/geometry.hpp"

namespace testutil {

inline std::vector<double> gaussian(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = n(rng);
  return v;
}

inline loopdyn::Embedding random_unit(std::mt19937_64& rng, std::size_t d) {
  return loopdyn::Embedding::normalize(gaussian(rng, d));
}

inline loopdyn::Embedding emb(std::vector<double> v) { return loopdyn::Embedding::normalize(v); }

inline std::vector<double> to_vec(const loopdyn::Embedding& e) {
  return {e.values().begin(), e.values().end()};
}

// Random orthogonal matrix (rows) via Gram-Schmidt.
inline std::vector<std::vector<double>> random_rotation(std::mt19937_64& rng, std::size_t d) {
  std::vector<std::vector<double>> q;
  while (q.size() < d) {
    auto v = gaussian(rng, d);
    for (const auto& r : q) {
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += v[i] * r[i];
      for (std::size_t i = 0; i < d; ++i) v[i] -= dot * r[i];
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-6) continue;
    for (double& x : v) x /= n;
    q.push_back(v);
  }
  return q;
}

inline loopdyn::Embedding rotate(const std::vector<std::vector<double>>& q, const loopdyn::Embedding& e) {
  std::vector<double> out(q.size(), 0.0);
  for (std::size_t r = 0; r < q.size(); ++r)
    for (std::size_t i = 0; i < q.size(); ++i) out[r] += q[r][i] * e[i];
  return loopdyn::Embedding::normalize(out);
}

}  // namespace testutil
