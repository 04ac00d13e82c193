#include "mixident/recover.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>

#include "mixident/errors.hpp"
#include "mixident/json_fmt.hpp"

namespace mixident {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double condition_of(const Eigen::MatrixXd& m) {
  const auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  return sv.minCoeff() > 0.0 ? sv.maxCoeff() / sv.minCoeff()
                             : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd vandermonde(const Eigen::VectorXd& points, int rows) {
  Eigen::MatrixXd vdm(rows, points.size());
  for (Eigen::Index j = 0; j < points.size(); ++j) {
    double p = 1.0;
    for (int r = 0; r < rows; ++r) {
      vdm(r, j) = p;
      p *= points(j);
    }
  }
  return vdm;
}

void check_weights(const Eigen::VectorXd& weights) {
  for (Eigen::Index j = 0; j < weights.size(); ++j)
    if (!(weights(j) > 0.0)) throw ZeroWeightError();
}

}  // namespace

Eigen::MatrixXd recover_probe_matrix(const std::vector<Eigen::RowVectorXd>& moment_vecs,
                                     const Eigen::VectorXd& target_row,
                                     const Eigen::VectorXd& weights) {
  const int k = static_cast<int>(target_row.size());
  if (static_cast<int>(moment_vecs.size()) < k)
    throw std::invalid_argument("recover_probe_matrix: need moment vectors 0..k-1");
  check_weights(weights);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (std::abs(target_row(a) - target_row(b)) < 1e-10)
        throw SingularVandermondeError(std::abs(target_row(a) - target_row(b)));

  Eigen::MatrixXd stacked(k, k);
  for (int r = 0; r < k; ++r) {
    if (moment_vecs[static_cast<std::size_t>(r)].size() != k)
      throw std::invalid_argument("recover_probe_matrix: moment vector length mismatch");
    stacked.row(r) = moment_vecs[static_cast<std::size_t>(r)];
  }
  // stacked = Vdm(target) * diag(weights) * probe_matrix^T
  const Eigen::MatrixXd unstacked =
      vandermonde(target_row, k).partialPivLu().solve(stacked);
  return (weights.cwiseInverse().asDiagonal() * unstacked).transpose();
}

Eigen::MatrixXd recover_basis_matrix(const Eigen::MatrixXd& basis_probe_values,
                                     const Eigen::MatrixXd& probe_matrix,
                                     const Eigen::VectorXd& weights) {
  check_weights(weights);
  if (basis_probe_values.cols() != probe_matrix.rows())
    throw std::invalid_argument("recover_basis_matrix: dimension mismatch");
  // values = basis_matrix * diag(weights) * probe_matrix^T; peel from the right.
  const Eigen::MatrixXd half =
      probe_matrix.partialPivLu().solve(basis_probe_values.transpose()).transpose();
  return half * weights.cwiseInverse().asDiagonal();
}

Eigen::RowVectorXd recover_row(const MomentOracle& oracle, int bit, const SubsetFamily& family,
                               const Eigen::MatrixXd& family_matrix,
                               const Eigen::VectorXd& weights) {
  check_weights(weights);
  if (std::binary_search(family.ground.begin(), family.ground.end(), bit))
    throw std::invalid_argument("recover_row: bit must lie outside the family ground");
  const int k = family.size();
  Eigen::RowVectorXd joint(k);
  for (int l = 0; l < k; ++l)
    joint(l) = oracle(subset_union(family.members[static_cast<std::size_t>(l)], {bit}));
  // joint = row . diag(weights) . family_matrix^T
  const Eigen::RowVectorXd half =
      family_matrix.partialPivLu().solve(joint.transpose()).transpose();
  return half.cwiseProduct(weights.cwiseInverse().transpose());
}

namespace {

struct StageTimes {
  double bootstrap = 0.0;
  double power = 0.0;
  double recover = 0.0;
};

// Runs bootstrap -> gate -> spikes -> row recovery for one candidate
// selection.  Gated rejections come back as Failure values so the caller can
// move to the next candidate.
std::variant<RecoveredModel, Failure> run_pipeline(const MomentOracle& oracle, int n, int k,
                                                   double zeta, double pi_min,
                                                   const IdentifyOptions& options,
                                                   const FamilySelection& sel,
                                                   StageTimes& times) {
  RecoveredModel rec;
  rec.selection = sel;
  rec.diagnostics.selection_score = sel.score;

  auto t0 = Clock::now();
  try {
    if (options.strategy == Strategy::doubling) {
      if (!sel.basis_alt)
        throw std::invalid_argument("identify: doubling needs a second basis family");
      rec.bootstrap =
          bootstrap_doubling(oracle, sel.probes, sel.basis, *sel.basis_alt, sel.target_bit);
    } else {
      rec.bootstrap = bootstrap_sequential(oracle, sel.probes, sel.basis, sel.target_bit);
    }
  } catch (const SingularMatrixError& e) {
    times.bootstrap += ms_since(t0);
    return Failure{Stage::selection, e.what()};
  }
  times.bootstrap += ms_since(t0);

  t0 = Clock::now();
  const Eigen::MatrixXd hankel = assemble_hankel(rec.bootstrap);
  const GateResult gate = hankel_gate(hankel, pi_min, zeta);
  rec.diagnostics.hankel_lambda2 = gate.lambda2;
  rec.diagnostics.hankel_threshold = gate.threshold;
  if (!gate.pass) {
    times.power += ms_since(t0);
    return Failure{Stage::hankel, "second-smallest Hankel eigenvalue " +
                                      fmt_double(gate.lambda2) + " below " +
                                      fmt_double(gate.threshold)};
  }
  try {
    rec.target_spikes = recover_spike_distribution(hankel, k, zeta, pi_min);
  } catch (const std::runtime_error& e) {
    times.power += ms_since(t0);
    return Failure{Stage::power, e.what()};
  }
  rec.diagnostics.power_residual = moment_residual(rec.target_spikes, hankel);
  rec.diagnostics.cond_hankel_base = condition_of(hankel.topLeftCorner(k, k));
  times.power += ms_since(t0);

  t0 = Clock::now();
  // Inversions see weights floored away from zero; the reported weights stay
  // as the spike solver produced them.
  const Eigen::VectorXd floored = rec.target_spikes.weights.cwiseMax(pi_min / 2.0);
  Eigen::MatrixXd probe_matrix;
  Eigen::MatrixXd basis_matrix;
  try {
    std::vector<Eigen::RowVectorXd> first_k(rec.bootstrap.moment_vecs.begin(),
                                            rec.bootstrap.moment_vecs.begin() + k);
    probe_matrix = recover_probe_matrix(first_k, rec.target_spikes.support, floored);
    basis_matrix = recover_basis_matrix(rec.bootstrap.basis_probe.values, probe_matrix, floored);
  } catch (const std::runtime_error& e) {
    times.recover += ms_since(t0);
    return Failure{Stage::linear_solve, e.what()};
  }
  rec.diagnostics.cond_vandermonde = condition_of(vandermonde(rec.target_spikes.support, k));
  rec.diagnostics.cond_probe_matrix = condition_of(probe_matrix);
  rec.diagnostics.cond_basis_probe =
      rec.bootstrap.basis_probe.sigma_max / rec.bootstrap.basis_probe.sigma_min;
  if (options.strategy == Strategy::doubling)
    rec.diagnostics.cond_alt_probe =
        rec.bootstrap.alt_probe.sigma_max / rec.bootstrap.alt_probe.sigma_min;

  // Place every row: the target row comes from the spikes; rows inside the
  // probe ground are solved against the basis family, everything else
  // against the probes.  Grounds are disjoint so each bit has a valid side.
  MixtureModel model;
  model.k = k;
  model.n = n;
  model.pi = rec.target_spikes.weights;
  model.M.resize(n, k);
  double overshoot = 0.0;
  try {
    for (int bit = 0; bit < n; ++bit) {
      Eigen::RowVectorXd row;
      if (bit == sel.target_bit) {
        row = rec.target_spikes.support.transpose();
      } else if (std::binary_search(sel.probe_ground.begin(), sel.probe_ground.end(), bit)) {
        row = recover_row(oracle, bit, sel.basis, basis_matrix, floored);
      } else {
        row = recover_row(oracle, bit, sel.probes, probe_matrix, floored);
      }
      for (int j = 0; j < k; ++j) {
        overshoot = std::max(overshoot, std::max(-row(j), row(j) - 1.0));
        model.M(bit, j) = std::clamp(row(j), 0.0, 1.0);
      }
    }
  } catch (const std::runtime_error& e) {
    times.recover += ms_since(t0);
    return Failure{Stage::linear_solve, e.what()};
  }
  rec.diagnostics.max_row_overshoot = std::max(overshoot, 0.0);

  for (int j = 0; j < k; ++j)
    if (!(model.pi(j) > 0.0)) {
      times.recover += ms_since(t0);
      return Failure{Stage::power, "a mixing weight collapsed to zero"};
    }
  model.pi /= model.pi.sum();
  times.recover += ms_since(t0);

  rec.model = std::move(model);
  return rec;
}

}  // namespace

std::variant<RecoveredModel, Failure> identify(const MomentOracle& oracle, int n, int k,
                                               double zeta, double pi_min,
                                               const IdentifyOptions& options) {
  if (n < 1 || n > oracle.ground_size())
    throw std::invalid_argument("identify: n out of range for this oracle");
  if (!(zeta > 0.0) || !(pi_min > 0.0))
    throw std::invalid_argument("identify: zeta and pi_min must be positive");

  const double threshold =
      options.threshold ? *options.threshold
                        : selection_threshold(zeta, pi_min, k, options.threshold_exponent);

  std::optional<RecoveredModel> success;
  std::optional<Failure> deepest;
  int tried = 0;
  StageTimes times;
  const auto consider = [&](const FamilySelection& sel) {
    ++tried;
    auto res = run_pipeline(oracle, n, k, zeta, pi_min, options, sel, times);
    if (std::holds_alternative<RecoveredModel>(res)) {
      success = std::get<RecoveredModel>(std::move(res));
      return true;
    }
    auto& fail = std::get<Failure>(res);
    if (!deepest || static_cast<int>(fail.stage) >= static_cast<int>(deepest->stage))
      deepest = std::move(fail);
    return false;
  };

  const auto total0 = Clock::now();
  if (options.families) {
    consider(*options.families);
  } else {
    for_each_selection(oracle, n, k, threshold, options.search, options.strategy, consider);
  }
  const double total_ms = ms_since(total0);

  if (!success) {
    if (deepest) return *deepest;
    return Failure{Stage::selection, "no ground-set choice passed the selection threshold"};
  }
  success->diagnostics.candidates_tried = tried;
  success->diagnostics.ms_bootstrap = times.bootstrap;
  success->diagnostics.ms_power = times.power;
  success->diagnostics.ms_recover = times.recover;
  success->diagnostics.ms_selection =
      std::max(0.0, total_ms - times.bootstrap - times.power - times.recover);
  return *success;
}

std::string bootstrap_to_json(const BootstrapState& state) {
  std::string out = "{\"k\":" + std::to_string(state.k);
  out += ",\"target_bit\":" + std::to_string(state.target_bit);
  out += ",\"moment_vecs\":[";
  for (std::size_t r = 0; r < state.moment_vecs.size(); ++r) {
    if (r) out += ",";
    out += fmt_row(state.moment_vecs[r]);
  }
  out += "],\"coeffs\":{";
  bool first = true;
  for (const auto& [r, u] : state.coeffs) {
    if (!first) out += ",";
    first = false;
    out += "\"" + std::to_string(r) + "\":" + fmt_row(u);
  }
  out += "},\"coeffs_alt\":{";
  first = true;
  for (const auto& [r, u] : state.coeffs_alt) {
    if (!first) out += ",";
    first = false;
    out += "\"" + std::to_string(r) + "\":" + fmt_row(u);
  }
  return out + "}}\n";
}

std::string recovered_to_json(const RecoveredModel& rec) {
  std::string model_json = model_to_json(rec.model);
  model_json.pop_back();  // strip newline; it nests below
  std::string sel_json = selection_to_json(rec.selection);
  sel_json.pop_back();
  const auto& d = rec.diagnostics;
  std::string out = "{\"model\":" + model_json + ",\"selection\":" + sel_json;
  out += ",\"target_spikes\":{\"support\":" + fmt_vector(rec.target_spikes.support) +
         ",\"weights\":" + fmt_vector(rec.target_spikes.weights) + "}";
  out += ",\"diagnostics\":{";
  out += "\"selection_score\":" + fmt_double(d.selection_score);
  out += ",\"hankel_lambda2\":" + fmt_double(d.hankel_lambda2);
  out += ",\"hankel_threshold\":" + fmt_double(d.hankel_threshold);
  out += ",\"power_residual\":" + fmt_double(d.power_residual);
  out += ",\"max_row_overshoot\":" + fmt_double(d.max_row_overshoot);
  out += ",\"cond_basis_probe\":" + fmt_double(d.cond_basis_probe);
  out += ",\"cond_alt_probe\":" + fmt_double(d.cond_alt_probe);
  out += ",\"cond_hankel_base\":" + fmt_double(d.cond_hankel_base);
  out += ",\"cond_vandermonde\":" + fmt_double(d.cond_vandermonde);
  out += ",\"cond_probe_matrix\":" + fmt_double(d.cond_probe_matrix);
  out += ",\"ms_selection\":" + fmt_double(d.ms_selection);
  out += ",\"ms_bootstrap\":" + fmt_double(d.ms_bootstrap);
  out += ",\"ms_power\":" + fmt_double(d.ms_power);
  out += ",\"ms_recover\":" + fmt_double(d.ms_recover);
  out += ",\"candidates_tried\":" + std::to_string(d.candidates_tried);
  return out + "}}\n";
}

}  // namespace mixident
