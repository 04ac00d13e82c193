#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mixident/model.hpp"
#include "mixident/subset.hpp"

// Reference oracles for the tests.  These deliberately avoid the library's
// computation paths: moments come from summing the full joint distribution
// over all 2^n outcomes, so any agreement with the closed-form path is
// meaningful.

inline double brute_force_moment(const mixident::MixtureModel& model,
                                 const mixident::Subset& s) {
  double total = 0.0;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << model.n); ++x) {
    bool wanted = true;
    for (int bit : s) wanted = wanted && (x >> bit & 1u);
    if (!wanted) continue;
    double px = 0.0;
    for (int j = 0; j < model.k; ++j) {
      double p = model.pi(j);
      for (int i = 0; i < model.n; ++i)
        p *= (x >> i & 1u) ? model.M(i, j) : 1.0 - model.M(i, j);
      px += p;
    }
    total += px;
  }
  return total;
}

// Rejection sampling of a zeta-separated vector in [0,1]^k; independent of
// the library's grid construction.
inline std::vector<double> rejection_separated(std::mt19937& gen, int k, double zeta) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (true) {
    std::vector<double> v(k);
    for (double& x : v) x = unif(gen);
    bool ok = true;
    for (int a = 0; a < k && ok; ++a)
      for (int b = a + 1; b < k && ok; ++b) ok = std::abs(v[a] - v[b]) >= zeta;
    if (ok) return v;
  }
}

// The fixed two-component reference model used across the module tests:
// pi = (0.5, 0.5), bit 0 probabilities (0.2, 0.8), bit 1 (0.4, 0.6).
inline mixident::MixtureModel reference_model_k2() {
  mixident::MixtureModel m;
  m.k = 2;
  m.n = 2;
  m.pi.resize(2);
  m.pi << 0.5, 0.5;
  m.M.resize(2, 2);
  m.M << 0.2, 0.8, 0.4, 0.6;
  return m;
}

// Same distribution extended with a third bit (0.1, 0.9) so that family
// searches in three disjoint blocks are possible at k = 2.
inline mixident::MixtureModel reference_model_k2_n3() {
  mixident::MixtureModel m;
  m.k = 2;
  m.n = 3;
  m.pi.resize(2);
  m.pi << 0.5, 0.5;
  m.M.resize(3, 2);
  m.M << 0.2, 0.8, 0.4, 0.6, 0.1, 0.9;
  return m;
}
