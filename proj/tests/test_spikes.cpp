#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "mixident/errors.hpp"
#include "mixident/spikes.hpp"

using namespace mixident;

namespace {

SpikeDistribution reference_spikes() {
  SpikeDistribution d;
  d.support.resize(2);
  d.support << 0.2, 0.8;
  d.weights.resize(2);
  d.weights << 0.3, 0.7;
  return d;
}

Eigen::MatrixXd hankel_of(const SpikeDistribution& d) {
  const int k = d.k();
  const Eigen::VectorXd mu = spike_moments(d, 2 * k);
  Eigen::MatrixXd h(k + 1, k + 1);
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) h(i, j) = mu(i + j);
  return h;
}

}  // namespace

TEST_CASE("spike moments of the reference distribution") {
  const auto d = reference_spikes();
  const Eigen::VectorXd mu = spike_moments(d, 4);
  CHECK(mu(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mu(1) == doctest::Approx(0.62).epsilon(1e-15));
  CHECK(mu(2) == doctest::Approx(0.46).epsilon(1e-15));
  CHECK(mu(3) == doctest::Approx(0.3608).epsilon(1e-15));
  CHECK(mu(4) == doctest::Approx(0.2872).epsilon(1e-15));
}

TEST_CASE("pencil recovery inverts exact moments") {
  const auto d = reference_spikes();
  const auto back = recover_spike_distribution(hankel_of(d), 2, 0.6, 0.3);
  CHECK(back.support(0) == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(back.support(1) == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(back.weights(0) == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(back.weights(1) == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(spike_distance(d, back) < 1e-9);
  CHECK(moment_residual(back, hankel_of(d)) < 1e-12);
}

TEST_CASE("round trip over random separated instances up to k = 5") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 1; k <= 5; ++k) {
    for (int trial = 0; trial < 40; ++trial) {
      SpikeDistribution d;
      auto support = rejection_separated(gen, k, 0.2);
      std::sort(support.begin(), support.end());
      d.support = Eigen::Map<Eigen::VectorXd>(support.data(), k);
      d.weights.resize(k);
      for (int j = 0; j < k; ++j) d.weights(j) = unif(gen);
      // Floor at 0.05 so no spike gets light enough to wash out of the Hankel.
      d.weights = Eigen::VectorXd::Constant(k, 0.05) +
                  (1.0 - 0.05 * k) * d.weights / d.weights.sum();
      const auto back = recover_spike_distribution(hankel_of(d), k, 0.2, 0.05);
      CHECK(spike_distance(d, back) < 1e-8);
    }
  }
}

TEST_CASE("small moment errors stay small in the answer") {
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> sign(-1.0, 1.0);
  const auto d = reference_spikes();
  Eigen::VectorXd mu = spike_moments(d, 4);
  for (int r = 1; r <= 4; ++r) mu(r) += 1e-10 * sign(gen);
  Eigen::MatrixXd h(3, 3);
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j <= 2; ++j) h(i, j) = mu(i + j);
  const auto back = recover_spike_distribution(h, 2, 0.6, 0.3);
  CHECK(spike_distance(d, back) < 1e-4);
  CHECK(back.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("coincident spikes degenerate the principal block") {
  SpikeDistribution d;
  d.support.resize(2);
  d.support << 0.5, 0.5;
  d.weights.resize(2);
  d.weights << 0.4, 0.6;
  CHECK_THROWS_AS(recover_spike_distribution(hankel_of(d), 2, 0.5, 0.3), DegenerateHankelError);
}

TEST_CASE("a pencil that leaves the real line is reported") {
  // mu = (0, 1, 0, -1, 0) gives base [[0,1],[1,0]], shift [[1,0],[0,-1]];
  // the pencil's eigenvalues are +-i.  Not a moment sequence, which is the
  // point: the guard fires before any output is produced.
  Eigen::VectorXd mu(5);
  mu << 0.0, 1.0, 0.0, -1.0, 0.0;
  Eigen::MatrixXd h(3, 3);
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j <= 2; ++j) h(i, j) = mu(i + j);
  CHECK_THROWS_AS(recover_spike_distribution(h, 2, 0.5, 0.3), ComplexEigenvalueError);
}

TEST_CASE("recovered support is clamped into the unit interval") {
  const auto d = reference_spikes();
  Eigen::MatrixXd h = hankel_of(d);
  // Push the odd moments up so the top eigenvalue drifts past 1.
  h(1, 2) = h(2, 1) = h(0, 1) * 0.99;
  h(2, 2) = h(1, 1) * 0.98;
  const auto back = recover_spike_distribution(h, 2, 0.5, 0.3);
  CHECK(back.support.maxCoeff() <= 1.0);
  CHECK(back.support.minCoeff() >= 0.0);
  CHECK(back.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("moment residual flags inconsistent high moments") {
  const auto d = reference_spikes();
  Eigen::MatrixXd h = hankel_of(d);
  CHECK(moment_residual(d, h) < 1e-15);
  h(2, 2) += 1e-3;  // moment 4 only; the weight solve never reads it
  CHECK(moment_residual(d, h) == doctest::Approx(1e-3).epsilon(1e-9));
}

TEST_CASE("validation rejects malformed spike distributions") {
  SpikeDistribution d;
  d.support.resize(2);
  d.weights.resize(2);

  d.support << 0.8, 0.2;  // unsorted
  d.weights << 0.5, 0.5;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);

  d.support << 0.2, 0.8;
  d.weights << -0.1, 1.1;  // negative weight
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);

  d.weights << 0.5, 0.6;  // sum != 1
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);

  d.weights << 0.5, 0.5;
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("spike distance compares aligned components") {
  const auto a = reference_spikes();
  auto b = a;
  CHECK(spike_distance(a, b) == 0.0);
  b.weights(0) = 0.31;
  b.weights(1) = 0.69;
  CHECK(spike_distance(a, b) == doctest::Approx(0.01).epsilon(1e-12));
  SpikeDistribution c;
  c.support.resize(1);
  c.support << 0.5;
  c.weights.resize(1);
  c.weights << 1.0;
  CHECK_THROWS_AS(spike_distance(a, c), std::invalid_argument);
}
