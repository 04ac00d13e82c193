#include "mixident/spikes.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mixident/errors.hpp"

namespace mixident {

void SpikeDistribution::validate() const {
  if (support.size() != weights.size() || support.size() == 0)
    throw std::invalid_argument("spikes: support and weights must share a positive size");
  for (int j = 0; j < k(); ++j) {
    if (!(support(j) >= 0.0 && support(j) <= 1.0))
      throw std::invalid_argument("spikes: support must lie in [0,1]");
    if (!(weights(j) >= 0.0)) throw std::invalid_argument("spikes: weights must be nonnegative");
    if (j > 0 && support(j) < support(j - 1))
      throw std::invalid_argument("spikes: support must be sorted ascending");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("spikes: weights must sum to 1");
}

Eigen::VectorXd spike_moments(const SpikeDistribution& d, int r_max) {
  if (r_max < 0) throw std::invalid_argument("spike_moments: r_max must be >= 0");
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(r_max + 1);
  Eigen::VectorXd powers = Eigen::VectorXd::Ones(d.k());
  for (int r = 0; r <= r_max; ++r) {
    mu(r) = powers.dot(d.weights);
    powers = powers.cwiseProduct(d.support);
  }
  return mu;
}

namespace {

constexpr double kSigmaFloor = 1e-13;
constexpr double kImagTol = 1e-6;

}  // namespace

SpikeDistribution recover_spike_distribution(const Eigen::MatrixXd& hankel, int k, double zeta,
                                             double pi_min) {
  (void)zeta;
  (void)pi_min;
  if (hankel.rows() != k + 1 || hankel.cols() != k + 1)
    throw std::invalid_argument("recover_spike_distribution: hankel must be (k+1) x (k+1)");

  // Principal block holds moments i+j, the shifted block i+j+1; their pencil's
  // eigenvalues are exactly the support points.
  const Eigen::MatrixXd base = hankel.topLeftCorner(k, k);
  const Eigen::MatrixXd shift = hankel.block(1, 0, k, k);

  const double sigma_min = Eigen::JacobiSVD<Eigen::MatrixXd>(base).singularValues().minCoeff();
  if (sigma_min < kSigmaFloor) throw DegenerateHankelError(sigma_min);

  Eigen::VectorXd support(k);
  if (k == 1) {
    support(0) = shift(0, 0) / base(0, 0);
  } else {
    const Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(shift, base);
    const auto alphas = ges.alphas();
    const auto betas = ges.betas();
    for (int j = 0; j < k; ++j) {
      if (std::abs(betas(j)) < kSigmaFloor) throw DegenerateHankelError(std::abs(betas(j)));
      const std::complex<double> lambda = alphas(j) / betas(j);
      if (std::abs(lambda.imag()) > kImagTol) throw ComplexEigenvalueError(std::abs(lambda.imag()));
      support(j) = lambda.real();
    }
  }
  std::sort(support.data(), support.data() + k);
  support = support.cwiseMax(0.0).cwiseMin(1.0);

  // Square Vandermonde solve on moments 0..k-1, then clamp and renormalize.
  Eigen::MatrixXd vdm(k, k);
  for (int j = 0; j < k; ++j) {
    double p = 1.0;
    for (int r = 0; r < k; ++r) {
      vdm(r, j) = p;
      p *= support(j);
    }
  }
  Eigen::VectorXd mu(k);
  for (int r = 0; r < k; ++r) mu(r) = hankel(0, r);
  Eigen::VectorXd weights = vdm.fullPivLu().solve(mu);
  weights = weights.cwiseMax(0.0);
  const double total = weights.sum();
  if (!(total > 0.0)) throw ZeroWeightError();
  weights /= total;

  SpikeDistribution out;
  out.support = support;
  out.weights = weights;
  out.validate();
  return out;
}

double moment_residual(const SpikeDistribution& d, const Eigen::MatrixXd& hankel) {
  const int k = d.k();
  if (hankel.rows() != k + 1 || hankel.cols() != k + 1)
    throw std::invalid_argument("moment_residual: hankel must be (k+1) x (k+1)");
  const Eigen::VectorXd mu = spike_moments(d, 2 * k);
  double worst = 0.0;
  for (int r = k; r <= 2 * k; ++r) {
    const int i = std::min(r, k);  // hankel(i, j) holds moment i + j
    worst = std::max(worst, std::abs(mu(r) - hankel(i, r - i)));
  }
  return worst;
}

double spike_distance(const SpikeDistribution& a, const SpikeDistribution& b) {
  if (a.k() != b.k()) throw std::invalid_argument("spike_distance: dimension mismatch");
  double d = 0.0;
  for (int j = 0; j < a.k(); ++j) {
    d = std::max(d, std::abs(a.support(j) - b.support(j)));
    d = std::max(d, std::abs(a.weights(j) - b.weights(j)));
  }
  return d;
}

}  // namespace mixident
