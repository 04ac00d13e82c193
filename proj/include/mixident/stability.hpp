#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace mixident {

// The separation-driven scale (zeta/2)^(k-1) / (3 k^3) that lower-bounds how
// far any conditional-probability row can sit from the span of the others.
// Every singular-value floor below is a power of this quantity.
double separation_constant(double zeta, int k);

// Variant with a k^2 denominator; some bounds are quoted against it.  It is
// the larger of the two, so checks run against separation_constant.
double separation_constant_alt(double zeta, int k);

// Coefficient norm sum_j j * |p_j| of the i-th Lagrange interpolation
// polynomial through the given points (0-based i).  Verifies the
// interpolation identity p(points_j) = delta_ij to 1e-9 before returning.
// For points with pairwise gaps >= zeta the value is at most
// (k-1) * (2/zeta)^(k-1).
double lagrange_coeff_norm(const Eigen::VectorXd& points, int i);

// Spectral bounds on the subset-product matrix of k-1 separated rows.
struct CoreStabilityReport {
  double sep_const = 0.0;       // separation_constant(zeta, k)
  double sep_const_alt = 0.0;   // k^2 variant, reported for comparison
  double sigma_min_full = 0.0;  // sigma_k of the 2^(k-1) x k subset-product matrix
  double sigma_max_full = 0.0;
  double bound_sigma_min_full = 0.0;  // sep_const^k 2^-k / k
  double bound_sigma_max_full = 0.0;  // k 2^(k-1)
  std::vector<int> best_rows;         // k row picks, the all-ones row always included
  double sigma_min_best = 0.0;
  double sigma_max_best = 0.0;
  double bound_sigma_min_best = 0.0;  // sep_const^k 2^(-3k/2) k^(-3/2)
  double bound_sigma_max_best = 0.0;  // k
  bool pass = false;
};

// rows: k-1 vectors in [0,1]^k whose entries are pairwise zeta-separated.
// Builds all 2^(k-1) subset products (all-ones row first), measures the
// spectrum, brute-forces the best k-row square submatrix that keeps the
// all-ones row, and compares everything against the guaranteed bounds.
CoreStabilityReport verify_core_stability(const std::vector<Eigen::RowVectorXd>& rows,
                                          double zeta);

struct InversePerturbationReport {
  bool hypothesis_met = false;  // ||perturbed - base|| <= sigma_min(base)/2
  double diff_norm = 0.0;       // ||perturbed^-1 - base^-1||
  double diff_bound = 0.0;      // 2 ||base^-1||^2 ||perturbed - base||
  double inv_norm = 0.0;        // ||perturbed^-1||
  double inv_bound = 0.0;       // 2 ||base^-1||
  bool pass = false;
};

// Checks the two inverse-perturbation inequalities; when the hypothesis does
// not hold they are not guaranteed, and the report says so instead of
// failing.
InversePerturbationReport inverse_perturbation_check(const Eigen::MatrixXd& base,
                                                     const Eigen::MatrixXd& perturbed);

// Operator norm of the inverse Vandermonde matrix on the given points (rows
// are increasing powers).  For pairwise gaps >= zeta this is at most
// 2^k / zeta^(k-1).
double vandermonde_inverse_norm(const Eigen::VectorXd& points);

// Monte-Carlo sweep over random separated instances checking each guaranteed
// bound.  worst_margin is the smallest relative slack seen (>= 0 everywhere
// means the bound held in every trial); a trial counts as a violation when
// its slack drops below -1e-12, so ties that are mathematically exact are
// not flagged for roundoff.
struct SweepResult {
  std::string name;
  int trials = 0;
  int violations = 0;
  double worst_margin = 0.0;
};

std::vector<SweepResult> run_stability_sweeps(int trials_per_sweep, std::uint64_t seed);

std::string sweeps_to_json(const std::vector<SweepResult>& sweeps);

}  // namespace mixident
