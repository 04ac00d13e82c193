#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "mixident/families.hpp"
#include "mixident/moments.hpp"

namespace mixident {

// Output of a bootstrap run: moment vectors for every power of the target
// bit's conditional row, plus the coefficient vectors that express each
// synthetic power bit over the basis family (and the second basis family in
// the doubling variant).
//
// moment_vecs[r], r = 0..2k, satisfies in exact mode
//   moment_vecs[r](i) = sum_j target_row(j)^r * pi(j) * probe_matrix(i, j)
// so its first coordinate (probe member = empty set) is the r-th moment of
// the spike distribution carried by the target row.
struct BootstrapState {
  std::vector<Eigen::RowVectorXd> moment_vecs;  // v_0 .. v_{2k}
  std::map<int, Eigen::RowVectorXd> coeffs;     // r -> u_r (over the basis family)
  std::map<int, Eigen::RowVectorXd> coeffs_alt; // r -> u'_r (doubling only)
  MomentMatrix basis_probe;                     // rows = basis, cols = probes
  MomentMatrix alt_probe;                       // rows = alt basis (doubling only)
  int k = 0;
  int target_bit = -1;
};

// Row-major Kronecker product of two length-k rows: out(l*k + j) = x(l)*y(j).
// Matches the member order of family_sum.
Eigen::RowVectorXd kron_rows(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y);

// Raises the target row to powers 1..2k one multiplication at a time:
// each synthetic power is re-expressed over the basis family and then
// multiplied by the target bit again through observable moments.
// Requires target outside the probe and basis grounds.
BootstrapState bootstrap_sequential(const MomentOracle& oracle, const SubsetFamily& probes,
                                    const SubsetFamily& basis, int target_bit);

// Squares the available power each round by pairing synthetic bits over two
// disjoint basis families, reaching power 2k in 1 + lg k rounds.  Requires
// target outside the probe and second-basis grounds (the first basis may
// contain it: the target enters only through the probe moments).
BootstrapState bootstrap_doubling(const MomentOracle& oracle, const SubsetFamily& probes,
                                  const SubsetFamily& basis, const SubsetFamily& basis_alt,
                                  int target_bit);

// (k+1) x (k+1) Hankel matrix of the target spike moments: entry (i, j) is
// the first coordinate of moment_vecs[i + j].  Exactly symmetric because
// entries are read from the shared moment sequence.
Eigen::MatrixXd assemble_hankel(const BootstrapState& state);

struct GateResult {
  bool pass = false;
  double lambda2 = 0.0;    // second-smallest eigenvalue
  double threshold = 0.0;  // (pi_min/2) * (zeta/16)^(2k-2)
};

// Accepts the Hankel matrix only when its second-smallest eigenvalue clears
// the scale guaranteed for a zeta-separated target row with weights >=
// pi_min.  A failing gate flags a bad target row before any inversion.
GateResult hankel_gate(const Eigen::MatrixXd& hankel, double pi_min, double zeta);

}  // namespace mixident
