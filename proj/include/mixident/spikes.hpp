#pragma once

#include <Eigen/Core>

namespace mixident {

// A distribution on k points of [0,1]: support sorted ascending, weights
// nonnegative and summing to 1, aligned with the support.
struct SpikeDistribution {
  Eigen::VectorXd support;
  Eigen::VectorXd weights;

  int k() const { return static_cast<int>(support.size()); }
  void validate() const;
};

// Raw moments mu_r = sum_j weights(j) * support(j)^r for r = 0..r_max.
Eigen::VectorXd spike_moments(const SpikeDistribution& d, int r_max);

// Recovers the k spikes behind a (k+1) x (k+1) Hankel moment matrix.  The
// support solves the generalized eigenproblem of the shifted against the
// principal k x k block; the weights then solve the square Vandermonde
// system on moments 0..k-1, are clamped nonnegative and renormalized, and
// the support is clamped into [0,1] before that solve.  Output is sorted by
// support.  Throws DegenerateHankelError when the principal block is
// numerically singular and ComplexEigenvalueError when the pencil leaves the
// real line by more than 1e-6.
SpikeDistribution recover_spike_distribution(const Eigen::MatrixXd& hankel, int k, double zeta,
                                             double pi_min);

// Diagnostic: worst absolute mismatch between the distribution's moments and
// the Hankel entries of order k..2k, the ones the weight solve never saw.
double moment_residual(const SpikeDistribution& d, const Eigen::MatrixXd& hankel);

// Max entrywise difference over (support, weights) after sorting; requires
// equal k.
double spike_distance(const SpikeDistribution& a, const SpikeDistribution& b);

}  // namespace mixident
