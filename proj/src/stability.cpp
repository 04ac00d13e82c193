#include "mixident/stability.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "mixident/errors.hpp"
#include "mixident/families.hpp"
#include "mixident/json_fmt.hpp"
#include "mixident/model.hpp"
#include "mixident/rng.hpp"

namespace mixident {
namespace {

constexpr double kTieTolerance = 1e-12;

std::pair<double, double> spectrum(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  return {sv(sv.size() - 1), sv(0)};
}

double operator_norm(const Eigen::MatrixXd& m) { return spectrum(m).second; }

// All 2^|rows| entrywise products of subsets of `rows`, binary-counter order:
// row index bit b selects rows[b], so index 0 is the all-ones row.
Eigen::MatrixXd subset_product_matrix(const std::vector<Eigen::RowVectorXd>& rows, int k) {
  const int count = 1 << static_cast<int>(rows.size());
  Eigen::MatrixXd out(count, k);
  out.row(0).setOnes();
  for (int idx = 1; idx < count; ++idx) {
    int bit = 0;
    while (((idx >> bit) & 1) == 0) ++bit;
    out.row(idx) = out.row(idx & (idx - 1)).cwiseProduct(rows[static_cast<std::size_t>(bit)]);
  }
  return out;
}

double eval_poly(const std::vector<double>& coeff, double x) {
  double value = 0.0;
  for (auto it = coeff.rbegin(); it != coeff.rend(); ++it) value = value * x + *it;
  return value;
}

double min_entry_gap(const Eigen::RowVectorXd& row) {
  double gap = std::numeric_limits<double>::infinity();
  for (int a = 0; a < row.size(); ++a)
    for (int b = a + 1; b < row.size(); ++b) gap = std::min(gap, std::abs(row(a) - row(b)));
  return gap;
}

// Advances a k-combination of {0..n-1} in lexicographic order.
bool next_combination(std::vector<int>& idx, int n) {
  const int r = static_cast<int>(idx.size());
  for (int i = r - 1; i >= 0; --i) {
    if (idx[static_cast<std::size_t>(i)] < n - r + i) {
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < r; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

double separation_constant(double zeta, int k) {
  if (!(zeta > 0.0) || zeta > 1.0 || k < 1)
    throw std::invalid_argument("separation_constant: need 0 < zeta <= 1 and k >= 1");
  const double value = std::pow(zeta / 2.0, k - 1) / (3.0 * k * k * k);
  // Sanity floor zeta^(3k) for the small-zeta regime.  The k^3 form dips
  // below that floor as zeta approaches 1/2, so the floor is asserted on the
  // k^2 variant, which satisfies it throughout.
  if (zeta <= 0.5 && separation_constant_alt(zeta, k) < std::pow(zeta, 3 * k))
    throw CheckFailedError("separation_constant: zeta^(3k) floor violated");
  return value;
}

double separation_constant_alt(double zeta, int k) {
  if (!(zeta > 0.0) || zeta > 1.0 || k < 1)
    throw std::invalid_argument("separation_constant_alt: need 0 < zeta <= 1 and k >= 1");
  return std::pow(zeta / 2.0, k - 1) / (3.0 * k * k);
}

double lagrange_coeff_norm(const Eigen::VectorXd& points, int i) {
  const int k = static_cast<int>(points.size());
  if (k < 1 || i < 0 || i >= k)
    throw std::invalid_argument("lagrange_coeff_norm: index out of range");
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (std::abs(points(a) - points(b)) < 1e-12)
        throw std::invalid_argument("lagrange_coeff_norm: duplicate points");

  // Expand prod_{j != i} (x - v_j) / (v_i - v_j) in the monomial basis.
  std::vector<double> coeff{1.0};
  double denom = 1.0;
  for (int j = 0; j < k; ++j) {
    if (j == i) continue;
    denom *= points(i) - points(j);
    std::vector<double> next(coeff.size() + 1, 0.0);
    for (std::size_t d = 0; d < coeff.size(); ++d) {
      next[d + 1] += coeff[d];
      next[d] -= points(j) * coeff[d];
    }
    coeff = std::move(next);
  }
  for (double& c : coeff) c /= denom;

  for (int j = 0; j < k; ++j) {
    const double want = j == i ? 1.0 : 0.0;
    if (std::abs(eval_poly(coeff, points(j)) - want) > 1e-9)
      throw CheckFailedError("lagrange_coeff_norm: interpolation identity drifted past 1e-9");
  }

  double norm = 0.0;
  for (std::size_t d = 1; d < coeff.size(); ++d)
    norm += static_cast<double>(d) * std::abs(coeff[d]);
  return norm;
}

CoreStabilityReport verify_core_stability(const std::vector<Eigen::RowVectorXd>& rows,
                                          double zeta) {
  const int k = static_cast<int>(rows.size()) + 1;
  if (!(zeta > 0.0) || zeta > 1.0)
    throw std::invalid_argument("verify_core_stability: zeta must be in (0, 1]");
  for (const Eigen::RowVectorXd& row : rows) {
    if (row.size() != k)
      throw std::invalid_argument("verify_core_stability: rows must have length |rows| + 1");
    for (int j = 0; j < k; ++j)
      if (!(row(j) >= 0.0 && row(j) <= 1.0))
        throw std::invalid_argument("verify_core_stability: entries must lie in [0, 1]");
    if (min_entry_gap(row) < zeta * (1.0 - 1e-12))
      throw std::invalid_argument("verify_core_stability: row entries are not zeta-separated");
  }

  CoreStabilityReport rep;
  rep.sep_const = separation_constant(zeta, k);
  rep.sep_const_alt = separation_constant_alt(zeta, k);

  const Eigen::MatrixXd full = subset_product_matrix(rows, k);
  const auto [lo_full, hi_full] = spectrum(full);
  rep.sigma_min_full = lo_full;
  rep.sigma_max_full = hi_full;
  rep.bound_sigma_min_full = std::pow(rep.sep_const, k) * std::pow(2.0, -k) / k;
  rep.bound_sigma_max_full = k * std::pow(2.0, k - 1);

  // Best square submatrix that keeps the all-ones row, by brute force over
  // the remaining rows.
  const int pool = static_cast<int>(full.rows()) - 1;
  std::vector<int> pick(static_cast<std::size_t>(k - 1));
  for (int i = 0; i < k - 1; ++i) pick[static_cast<std::size_t>(i)] = i;
  Eigen::MatrixXd square(k, k);
  square.row(0) = full.row(0);
  double best_min = -1.0;
  double best_max = 0.0;
  std::vector<int> best_pick;
  do {
    for (int i = 0; i < k - 1; ++i)
      square.row(i + 1) = full.row(pick[static_cast<std::size_t>(i)] + 1);
    const auto [lo, hi] = spectrum(square);
    if (lo > best_min) {
      best_min = lo;
      best_max = hi;
      best_pick = pick;
    }
  } while (next_combination(pick, pool));

  rep.best_rows.push_back(0);
  for (int p : best_pick) rep.best_rows.push_back(p + 1);
  rep.sigma_min_best = best_min;
  rep.sigma_max_best = best_max;
  rep.bound_sigma_min_best =
      std::pow(rep.sep_const, k) * std::pow(2.0, -1.5 * k) / std::pow(k, 1.5);
  rep.bound_sigma_max_best = static_cast<double>(k);
  rep.pass = rep.sigma_min_full >= rep.bound_sigma_min_full &&
             rep.sigma_max_full <= rep.bound_sigma_max_full &&
             rep.sigma_min_best >= rep.bound_sigma_min_best &&
             rep.sigma_max_best <= rep.bound_sigma_max_best;
  return rep;
}

InversePerturbationReport inverse_perturbation_check(const Eigen::MatrixXd& base,
                                                     const Eigen::MatrixXd& perturbed) {
  if (base.rows() != base.cols() || perturbed.rows() != base.rows() ||
      perturbed.cols() != base.cols())
    throw std::invalid_argument("inverse_perturbation_check: need square matrices of equal size");
  const auto [base_min, base_max] = spectrum(base);
  (void)base_max;
  if (base_min < 1e-300) throw SingularMatrixError("base matrix", base_min);

  InversePerturbationReport rep;
  const double delta = operator_norm(perturbed - base);
  rep.hypothesis_met = delta <= base_min / 2.0;

  const double pert_min = spectrum(perturbed).first;
  if (pert_min < 1e-300) {
    if (rep.hypothesis_met) throw SingularMatrixError("perturbed matrix", pert_min);
    rep.pass = true;  // outside the hypothesis nothing is guaranteed
    return rep;
  }

  const Eigen::MatrixXd base_inv = base.fullPivLu().inverse();
  const Eigen::MatrixXd pert_inv = perturbed.fullPivLu().inverse();
  rep.diff_norm = operator_norm(pert_inv - base_inv);
  rep.diff_bound = 2.0 / (base_min * base_min) * delta;
  rep.inv_norm = 1.0 / pert_min;
  rep.inv_bound = 2.0 / base_min;
  rep.pass =
      !rep.hypothesis_met || (rep.diff_norm <= rep.diff_bound && rep.inv_norm <= rep.inv_bound);
  return rep;
}

double vandermonde_inverse_norm(const Eigen::VectorXd& points) {
  const int k = static_cast<int>(points.size());
  if (k < 1) throw std::invalid_argument("vandermonde_inverse_norm: empty points");
  double gap = std::numeric_limits<double>::infinity();
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) gap = std::min(gap, std::abs(points(a) - points(b)));
  if (k > 1 && gap < 1e-12) throw SingularVandermondeError(gap);

  Eigen::MatrixXd v(k, k);
  v.row(0).setOnes();
  for (int r = 1; r < k; ++r) v.row(r) = v.row(r - 1).cwiseProduct(points.transpose());
  const double sigma_min = spectrum(v).first;
  if (sigma_min < 1e-300) throw SingularVandermondeError(gap);
  return 1.0 / sigma_min;
}

std::vector<SweepResult> run_stability_sweeps(int trials_per_sweep, std::uint64_t seed) {
  if (trials_per_sweep < 1)
    throw std::invalid_argument("run_stability_sweeps: need at least one trial");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<SweepResult> sweeps = {
      {"sigma-min-subset-products", trials_per_sweep, 0, inf},
      {"sigma-max-subset-products", trials_per_sweep, 0, inf},
      {"best-square-submatrix", trials_per_sweep, 0, inf},
      {"column-selection", trials_per_sweep, 0, inf},
      {"inverse-perturbation", trials_per_sweep, 0, inf},
      {"vandermonde-inverse-norm", trials_per_sweep, 0, inf},
      {"lagrange-coeff-norm", trials_per_sweep, 0, inf},
  };

  auto note = [](SweepResult& s, double margin) {
    s.worst_margin = std::min(s.worst_margin, margin);
    if (margin < -kTieTolerance) ++s.violations;
  };
  auto inst_seed = [seed](int sweep, int t) {
    return splitmix64(seed + 0x9E3779B97F4A7C15ull *
                                 (static_cast<std::uint64_t>(sweep) * 1000003ull +
                                  static_cast<std::uint64_t>(t) + 1ull));
  };
  auto separated_rows = [&](int k, std::uint64_t s, int count) {
    const MixtureModel model = random_model(k, count, 0.2, 0.1, count, s);
    std::vector<Eigen::RowVectorXd> rows;
    rows.reserve(static_cast<std::size_t>(count));
    for (int r = 0; r < count; ++r) rows.emplace_back(model.M.row(r));
    return rows;
  };

  // One batch of separated instances feeds the three core spectral checks.
  for (int t = 0; t < trials_per_sweep; ++t) {
    const int k = 2 + t % 3;
    const std::vector<Eigen::RowVectorXd> rows = separated_rows(k, inst_seed(0, t), k - 1);
    double zeta = inf;
    for (const Eigen::RowVectorXd& row : rows) zeta = std::min(zeta, min_entry_gap(row));
    const CoreStabilityReport rep = verify_core_stability(rows, zeta);
    note(sweeps[0], (rep.sigma_min_full - rep.bound_sigma_min_full) / rep.bound_sigma_min_full);
    note(sweeps[1], (rep.bound_sigma_max_full - rep.sigma_max_full) / rep.bound_sigma_max_full);
    note(sweeps[2], (rep.sigma_min_best - rep.bound_sigma_min_best) / rep.bound_sigma_min_best);
  }

  // Column selection on the transposed subset-product matrix.
  for (int t = 0; t < trials_per_sweep; ++t) {
    const int k = 2 + t % 4;
    const std::vector<Eigen::RowVectorXd> rows = separated_rows(k, inst_seed(3, t), k - 1);
    const Eigen::MatrixXd wide = subset_product_matrix(rows, k).transpose();
    const std::vector<int> cols = fos_column_select(wide);
    Eigen::MatrixXd sub(k, k);
    for (int c = 0; c < k; ++c) sub.col(c) = wide.col(cols[static_cast<std::size_t>(c)]);
    const double c_count = static_cast<double>(wide.cols());
    const double bound = spectrum(wide).first / std::sqrt(k * (c_count - k) + 1.0);
    note(sweeps[3], (spectrum(sub).first - bound) / bound);
  }

  // Controlled-spectrum random matrices with perturbations at sigma_min / 4.
  const double two_pi = 2.0 * std::acos(-1.0);
  auto gaussian_matrix = [&](std::mt19937_64& g, int k) {
    Eigen::MatrixXd m(k, k);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) {
        const double u1 = 1.0 - uniform01(g);
        const double u2 = uniform01(g);
        m(r, c) = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
      }
    return m;
  };
  for (int t = 0; t < trials_per_sweep; ++t) {
    const int k = 2 + t % 3;
    std::mt19937_64 g(inst_seed(4, t));
    const Eigen::MatrixXd qu =
        Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(g, k)).householderQ();
    const Eigen::MatrixXd qv =
        Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(g, k)).householderQ();
    Eigen::VectorXd sv(k);
    for (int j = 0; j < k; ++j) sv(j) = std::pow(10.0, -3.0 * uniform01(g));
    const Eigen::MatrixXd base = qu * sv.asDiagonal() * qv.transpose();
    Eigen::MatrixXd noise = gaussian_matrix(g, k);
    noise *= (sv.minCoeff() / 4.0) / operator_norm(noise);
    const InversePerturbationReport rep = inverse_perturbation_check(base, base + noise);
    double margin = (rep.diff_bound - rep.diff_norm) / rep.diff_bound;
    margin = std::min(margin, (rep.inv_bound - rep.inv_norm) / rep.inv_bound);
    if (!rep.hypothesis_met) margin = -1.0;  // construction must land inside the hypothesis
    note(sweeps[4], margin);
  }

  // Separated support points drive the Vandermonde and Lagrange bounds.
  for (int t = 0; t < trials_per_sweep; ++t) {
    const int k = 2 + t % 4;
    const std::vector<Eigen::RowVectorXd> rows = separated_rows(k, inst_seed(5, t), 1);
    const double zeta = min_entry_gap(rows[0]);
    const double bound = std::pow(2.0, k) / std::pow(zeta, k - 1);
    note(sweeps[5], (bound - vandermonde_inverse_norm(rows[0].transpose())) / bound);
  }
  for (int t = 0; t < trials_per_sweep; ++t) {
    const int k = 2 + t % 4;
    const std::vector<Eigen::RowVectorXd> rows = separated_rows(k, inst_seed(6, t), 1);
    const double zeta = min_entry_gap(rows[0]);
    const double bound = (k - 1) * std::pow(2.0 / zeta, k - 1);
    double worst = inf;
    for (int i = 0; i < k; ++i)
      worst = std::min(worst, (bound - lagrange_coeff_norm(rows[0].transpose(), i)) / bound);
    note(sweeps[6], worst);
  }

  return sweeps;
}

std::string sweeps_to_json(const std::vector<SweepResult>& sweeps) {
  std::ostringstream out;
  out << "{\"sweeps\":[";
  bool all_pass = true;
  for (std::size_t s = 0; s < sweeps.size(); ++s) {
    if (s) out << ",";
    const SweepResult& r = sweeps[s];
    all_pass = all_pass && r.violations == 0;
    out << "{\"name\":\"" << r.name << "\",\"trials\":" << r.trials
        << ",\"passes\":" << (r.trials - r.violations) << ",\"violations\":" << r.violations
        << ",\"worst_margin\":" << fmt_double(r.worst_margin) << "}";
  }
  out << "],\"pass\":" << (all_pass ? "true" : "false") << "}";
  return out.str();
}

}  // namespace mixident
