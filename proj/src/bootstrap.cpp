#include "mixident/bootstrap.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

#include "mixident/errors.hpp"

namespace mixident {

Eigen::RowVectorXd kron_rows(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
  Eigen::RowVectorXd out(x.size() * y.size());
  for (Eigen::Index l = 0; l < x.size(); ++l)
    for (Eigen::Index j = 0; j < y.size(); ++j) out(l * y.size() + j) = x(l) * y(j);
  return out;
}

namespace {

constexpr double kSigmaFloor = 1e-13;

void check_probes(const SubsetFamily& probes, int k) {
  if (probes.size() != k || !probes.contains_empty_first())
    throw std::invalid_argument("bootstrap: probe family must have k members, empty set first");
}

// Moment vector over the probes for the target row itself: v_1(i) =
// oracle(probes_i + target).  Needs target outside every probe member.
Eigen::RowVectorXd target_probe_moments(const MomentOracle& oracle, const SubsetFamily& probes,
                                        int target_bit) {
  Eigen::RowVectorXd v(probes.size());
  for (int i = 0; i < probes.size(); ++i) {
    const auto& p = probes.members[static_cast<std::size_t>(i)];
    if (subset_contains(p, target_bit))
      throw std::invalid_argument("bootstrap: target bit inside a probe member");
    v(i) = oracle(subset_union(p, {target_bit}));
  }
  return v;
}

Eigen::RowVectorXd plain_probe_moments(const MomentOracle& oracle, const SubsetFamily& probes) {
  Eigen::RowVectorXd v(probes.size());
  for (int i = 0; i < probes.size(); ++i)
    v(i) = oracle(probes.members[static_cast<std::size_t>(i)]);
  return v;
}

// Solves x * M = v for a row vector x through a prefactored LU of M^T.
struct RightSolver {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  explicit RightSolver(const Eigen::MatrixXd& m) : lu(m.transpose()) {}
  Eigen::RowVectorXd solve(const Eigen::RowVectorXd& v) const {
    return lu.solve(v.transpose()).transpose();
  }
};

}  // namespace

BootstrapState bootstrap_sequential(const MomentOracle& oracle, const SubsetFamily& probes,
                                    const SubsetFamily& basis, int target_bit) {
  const int k = probes.size();
  check_probes(probes, k);
  if (basis.size() != k) throw std::invalid_argument("bootstrap: basis family must have k members");
  if (std::binary_search(basis.ground.begin(), basis.ground.end(), target_bit) ||
      std::binary_search(probes.ground.begin(), probes.ground.end(), target_bit))
    throw std::invalid_argument(
        "bootstrap (sequential): target bit must avoid the probe and basis grounds");

  BootstrapState state;
  state.k = k;
  state.target_bit = target_bit;
  state.basis_probe = moment_matrix(oracle, basis, probes);
  if (state.basis_probe.sigma_min < kSigmaFloor)
    throw SingularMatrixError("basis/probe moment matrix", state.basis_probe.sigma_min);
  const RightSolver solver(state.basis_probe.values);

  // Moment matrix of the basis members with the target bit adjoined; its
  // product with a coefficient row multiplies the synthetic bit by one more
  // copy of the target row, all through observable moments.
  SubsetFamily raised = basis;
  for (auto& member : raised.members) member = subset_union(member, {target_bit});
  raised.ground = subset_union(Subset(raised.ground), {target_bit});
  const MomentMatrix raised_probe = moment_matrix(oracle, raised, probes);

  state.moment_vecs.resize(static_cast<std::size_t>(2 * k) + 1);
  state.moment_vecs[0] = plain_probe_moments(oracle, probes);
  Eigen::RowVectorXd coeff = solver.solve(state.moment_vecs[0]);
  state.coeffs[0] = coeff;
  for (int r = 1; r <= 2 * k; ++r) {
    state.moment_vecs[static_cast<std::size_t>(r)] = coeff * raised_probe.values;
    coeff = solver.solve(state.moment_vecs[static_cast<std::size_t>(r)]);
    state.coeffs[r] = coeff;
  }
  return state;
}

BootstrapState bootstrap_doubling(const MomentOracle& oracle, const SubsetFamily& probes,
                                  const SubsetFamily& basis, const SubsetFamily& basis_alt,
                                  int target_bit) {
  const int k = probes.size();
  check_probes(probes, k);
  if (basis.size() != k || basis_alt.size() != k)
    throw std::invalid_argument("bootstrap: basis families must have k members");
  if (std::binary_search(basis_alt.ground.begin(), basis_alt.ground.end(), target_bit) ||
      std::binary_search(probes.ground.begin(), probes.ground.end(), target_bit))
    throw std::invalid_argument(
        "bootstrap (doubling): target bit must avoid the probe and second-basis grounds");

  BootstrapState state;
  state.k = k;
  state.target_bit = target_bit;
  state.basis_probe = moment_matrix(oracle, basis, probes);
  state.alt_probe = moment_matrix(oracle, basis_alt, probes);
  if (state.basis_probe.sigma_min < kSigmaFloor)
    throw SingularMatrixError("basis/probe moment matrix", state.basis_probe.sigma_min);
  if (state.alt_probe.sigma_min < kSigmaFloor)
    throw SingularMatrixError("second basis/probe moment matrix", state.alt_probe.sigma_min);
  const RightSolver solver(state.basis_probe.values);
  const RightSolver solver_alt(state.alt_probe.values);

  const MomentMatrix paired_probe =
      moment_matrix(oracle, family_sum(basis, basis_alt), probes);

  const int top = 2 * k;
  state.moment_vecs.resize(static_cast<std::size_t>(top) + 1);
  state.moment_vecs[0] = plain_probe_moments(oracle, probes);
  state.moment_vecs[1] = target_probe_moments(oracle, probes, target_bit);
  state.coeffs[1] = solver.solve(state.moment_vecs[1]);
  state.coeffs_alt[1] = solver_alt.solve(state.moment_vecs[1]);

  // Round i makes powers 2^(i-1)+1 .. 2^i from the powers up to 2^(i-1)
  // paired with the alt coefficient at exactly 2^(i-1); power l = a + b of
  // two synthetic bits needs only their product's moments over the probes.
  for (int half = 1; half < top; half *= 2) {
    const Eigen::RowVectorXd& alt = state.coeffs_alt.at(half);
    for (int j = 1; j <= half && half + j <= top; ++j) {
      const int l = half + j;
      state.moment_vecs[static_cast<std::size_t>(l)] =
          kron_rows(state.coeffs.at(j), alt) * paired_probe.values;
      state.coeffs[l] = solver.solve(state.moment_vecs[static_cast<std::size_t>(l)]);
    }
    if (2 * half < top)  // the next round's alt pivot; skipped on the last round
      state.coeffs_alt[2 * half] = solver_alt.solve(state.moment_vecs[static_cast<std::size_t>(2 * half)]);
  }
  return state;
}

Eigen::MatrixXd assemble_hankel(const BootstrapState& state) {
  const int k = state.k;
  if (static_cast<int>(state.moment_vecs.size()) != 2 * k + 1)
    throw std::invalid_argument("assemble_hankel: need moment vectors 0..2k");
  Eigen::VectorXd mu(2 * k + 1);
  for (int r = 0; r <= 2 * k; ++r) mu(r) = state.moment_vecs[static_cast<std::size_t>(r)](0);
  Eigen::MatrixXd h(k + 1, k + 1);
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) h(i, j) = mu(i + j);
  return h;
}

GateResult hankel_gate(const Eigen::MatrixXd& hankel, double pi_min, double zeta) {
  if (hankel.rows() != hankel.cols() || hankel.rows() < 2)
    throw std::invalid_argument("hankel_gate: need a square matrix of size k+1 >= 2");
  const int k = static_cast<int>(hankel.rows()) - 1;
  GateResult res;
  res.threshold = pi_min / 2.0 * std::pow(zeta / 16.0, 2 * k - 2);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hankel, Eigen::EigenvaluesOnly);
  res.lambda2 = eig.eigenvalues()(1);  // ascending order
  res.pass = res.lambda2 >= res.threshold;
  return res;
}

}  // namespace mixident
