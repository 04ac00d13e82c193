#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mixident/errors.hpp"
#include "mixident/moments.hpp"
#include "mixident/subset.hpp"

namespace mixident {

// An ordered list of k subsets drawn from one ground set of bits.  Families
// index the rows and columns of moment matrices; their order is load-bearing.
struct SubsetFamily {
  std::vector<int> ground;      // sorted bit indices the members draw from
  std::vector<Subset> members;  // k subsets of `ground`

  int size() const { return static_cast<int>(members.size()); }
  bool contains_empty_first() const { return !members.empty() && members.front().empty(); }
};

// Matrix of moments over the unions of a row family and a column family:
// entry (l, i) = oracle(rows[l] union cols[i]).  For disjoint ground sets
// this factors through the model as M[rows] * diag(pi) * M[cols]^T, which is
// what makes it invertible when both family matrices are.
struct MomentMatrix {
  Eigen::MatrixXd values;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

MomentMatrix moment_matrix(const MomentOracle& oracle, const SubsetFamily& rows,
                           const SubsetFamily& cols);

// The k^2 pairwise unions of two families with disjoint grounds, row-major:
// index l*k + j holds rows[l] union other[j].  Matches kron_rows ordering.
SubsetFamily family_sum(const SubsetFamily& a, const SubsetFamily& b);

// One fully chosen configuration for the pipeline: ground sets, the probe
// family (columns of every moment matrix, empty set first), one or two basis
// families, the score that selected them, and the bit whose conditional row
// the bootstrap will exponentiate.
struct FamilySelection {
  std::vector<int> probe_ground;            // S
  std::vector<int> basis_ground;            // T
  std::vector<int> alt_ground;              // T' (empty in sequential mode)
  SubsetFamily probes;                      // column family, empty set first
  SubsetFamily basis;                       // row family
  std::optional<SubsetFamily> basis_alt;    // second row family (doubling only)
  double score = 0.0;                       // min sigma_k over the basis matrices
  int target_bit = -1;
};

std::string selection_to_json(const FamilySelection& sel);
FamilySelection selection_from_json(const std::string& text);

// Picks the probe family from subsets of S and basis families from subsets
// of T (and T' when given), maximizing the smaller of the two least singular
// values; exhaustive over all size-k families with the empty set pinned as
// the first probe.  Ties break toward the earliest candidate in enumeration
// order, so results are deterministic.  Returns a selection-stage Failure
// when the best score is below `threshold`.
std::variant<FamilySelection, Failure> select_families(
    const MomentOracle& oracle, const std::vector<int>& probe_ground,
    const std::vector<int>& basis_ground, const std::vector<int>& alt_ground, int k,
    double threshold);

enum class SearchMode { exhaustive, all_separated };
enum class Strategy { sequential, doubling };

// Default selection gate: pi_min * zeta^(c k^2), the scale at which the
// least singular value of a basis moment matrix is guaranteed for separated
// rows.  c is configurable through the identify options.
double selection_threshold(double zeta, double pi_min, int k, double exponent_scale = 10.0);

// Finds ground sets plus families.  all_separated uses the fixed leading
// blocks of [n] (target, then k-1 bits per family); exhaustive walks
// disjoint ground-set choices in lexicographic order and returns the first
// one whose selection passes the threshold.
std::variant<FamilySelection, Failure> search_triples(const MomentOracle& oracle, int n, int k,
                                                      double threshold, SearchMode mode,
                                                      Strategy strategy = Strategy::doubling);

// Visits candidate selections in the same order search_triples uses, invoking
// fn on each one that passes the threshold until fn returns true.  Lets the
// pipeline resume the search after a downstream gate rejects a candidate.
// Returns whether fn accepted one.
bool for_each_selection(const MomentOracle& oracle, int n, int k, double threshold,
                        SearchMode mode, Strategy strategy,
                        const std::function<bool(const FamilySelection&)>& fn);

// Given a wide matrix (r x c, r <= c) with sigma_r >= s, returns r column
// indices whose square submatrix keeps sigma_r >= s / sqrt(r(c-r)+1).
// Brute force when c is small, else greedy pivoted QR with an a-posteriori
// check (CheckFailedError when the bound is missed and brute force is
// infeasible).
std::vector<int> fos_column_select(const Eigen::MatrixXd& wide);

}  // namespace mixident
