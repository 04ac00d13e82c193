#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <variant>

#include "mixident/bootstrap.hpp"
#include "mixident/families.hpp"
#include "mixident/model.hpp"
#include "mixident/moments.hpp"
#include "mixident/spikes.hpp"

namespace mixident {

// Conditional-probability matrix of the probe family's members (rows =
// members, columns = hidden components) from the first k bootstrap moment
// vectors: stack v_0..v_{k-1}, undo the Vandermonde of the target row, undo
// the weights.  Throws SingularVandermondeError on near-duplicate support
// (gap < 1e-10) and ZeroWeightError on nonpositive weights.
Eigen::MatrixXd recover_probe_matrix(const std::vector<Eigen::RowVectorXd>& moment_vecs,
                                     const Eigen::VectorXd& target_row,
                                     const Eigen::VectorXd& weights);

// Conditional-probability matrix of a basis family from its moment matrix
// against the probes: undo the probe matrix from the right, then the
// weights.
Eigen::MatrixXd recover_basis_matrix(const Eigen::MatrixXd& basis_probe_values,
                                     const Eigen::MatrixXd& probe_matrix,
                                     const Eigen::VectorXd& weights);

// One conditional-probability row for a bit outside the family's ground:
// query the moments of each member with the bit adjoined, undo the family
// matrix, undo the weights.  Returned unclamped; the caller decides how much
// out-of-range drift to tolerate.
Eigen::RowVectorXd recover_row(const MomentOracle& oracle, int bit, const SubsetFamily& family,
                               const Eigen::MatrixXd& family_matrix,
                               const Eigen::VectorXd& weights);

struct PipelineDiagnostics {
  double selection_score = 0.0;
  double hankel_lambda2 = 0.0;
  double hankel_threshold = 0.0;
  double power_residual = 0.0;      // spike moments vs unused Hankel entries
  double max_row_overshoot = 0.0;   // worst pre-clamp distance outside [0,1]
  double cond_basis_probe = 0.0;
  double cond_alt_probe = 0.0;
  double cond_hankel_base = 0.0;
  double cond_vandermonde = 0.0;
  double cond_probe_matrix = 0.0;
  double ms_selection = 0.0;
  double ms_bootstrap = 0.0;
  double ms_power = 0.0;
  double ms_recover = 0.0;
  int candidates_tried = 0;
};

struct RecoveredModel {
  MixtureModel model;
  FamilySelection selection;
  SpikeDistribution target_spikes;
  BootstrapState bootstrap;
  PipelineDiagnostics diagnostics;
};

struct IdentifyOptions {
  Strategy strategy = Strategy::doubling;
  SearchMode search = SearchMode::all_separated;
  double threshold_exponent = 10.0;        // c in pi_min * zeta^(c k^2)
  std::optional<double> threshold;         // explicit gate override
  std::optional<FamilySelection> families; // skip the search entirely
};

// End-to-end source identification: find ground sets and families, bootstrap
// the target row's powers, gate the Hankel spectrum, recover the spike
// distribution, then solve for every conditional-probability row.  In
// exhaustive mode a candidate rejected by any gate is skipped and the search
// resumes; the returned Failure is the deepest-stage rejection seen.
// Components come out ordered by ascending target row.
std::variant<RecoveredModel, Failure> identify(const MomentOracle& oracle, int n, int k,
                                               double zeta, double pi_min,
                                               const IdentifyOptions& options = {});

// Report serialization for the command-line front end.
std::string recovered_to_json(const RecoveredModel& rec);
std::string bootstrap_to_json(const BootstrapState& state);

}  // namespace mixident
