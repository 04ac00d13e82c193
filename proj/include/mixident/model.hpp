#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mixident/subset.hpp"

namespace mixident {

// A k-component mixture of product distributions on n binary variables.
// Component j is drawn with probability pi(j); bit i is then 1 with
// probability M(i, j).  Rows of M are observable bits, columns are hidden
// components.
struct MixtureModel {
  int k = 0;
  int n = 0;
  Eigen::VectorXd pi;  // k mixing weights, positive, summing to 1
  Eigen::MatrixXd M;   // n x k conditional probabilities, entries in [0,1]

  void validate() const;  // throws std::invalid_argument on violation
};

// Entrywise product of the rows of M indexed by S.  The empty set gives the
// all-ones row, so exact_moment({}) == 1.
Eigen::RowVectorXd hadamard_row(const MixtureModel& model, const Subset& s);

// E[prod_{i in S} X_i] = hadamard_row(S) . pi, the multilinear moment.
double exact_moment(const MixtureModel& model, const Subset& s);

struct SeparationReport {
  Eigen::VectorXd per_row_gap;  // min pairwise |M(i,j) - M(i,j')|; +inf for k = 1
  double min_gap = 0.0;         // min over rows
  std::vector<int> separated_rows(double zeta) const;
};

SeparationReport separation_report(const MixtureModel& model);

// Draws a model whose first `separated_rows` rows have pairwise entry gaps
// >= zeta by construction (grid placement plus order-preserving jitter, so
// no rejection loop; gaps are exact up to one rounding ulp).  Remaining rows
// are unconstrained uniforms.  Weights are uniform on the simplex slice
// {pi : pi_j >= pi_min} via stick breaking on the slack.  Deterministic per
// seed.  separated_rows < 0 means all rows.
MixtureModel random_model(int k, int n, double zeta, double pi_min, int separated_rows,
                          std::uint64_t seed);

struct ComponentAlignment {
  std::vector<int> perm;  // best column permutation: b's column perm[j] matches a's column j
  double distance = 0.0;  // max parameter error under that permutation
};

// Distance up to relabeling of hidden components: minimum over all k!
// permutations of the max absolute difference across weights and
// conditional probabilities.  Brute force; requires k <= 8.
ComponentAlignment model_distance(const MixtureModel& a, const MixtureModel& b);

// JSON round trip; floats written with 17 significant digits.
std::string model_to_json(const MixtureModel& model);
MixtureModel model_from_json(const std::string& text);
void save_model(const MixtureModel& model, const std::string& path);
MixtureModel load_model(const std::string& path);

}  // namespace mixident
