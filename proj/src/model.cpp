#include "mixident/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mixident/json_fmt.hpp"
#include "mixident/rng.hpp"

namespace mixident {

void MixtureModel::validate() const {
  if (k < 1) throw std::invalid_argument("model: k must be >= 1");
  if (n < 0) throw std::invalid_argument("model: n must be >= 0");
  if (pi.size() != k) throw std::invalid_argument("model: pi must have k entries");
  if (M.rows() != n || M.cols() != k)
    throw std::invalid_argument("model: M must be n x k");
  for (int j = 0; j < k; ++j)
    if (!(pi(j) > 0.0)) throw std::invalid_argument("model: weights must be positive");
  if (std::abs(pi.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("model: weights must sum to 1 within 1e-12");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j)
      if (!(M(i, j) >= 0.0 && M(i, j) <= 1.0))
        throw std::invalid_argument("model: M entries must lie in [0,1]");
}

Eigen::RowVectorXd hadamard_row(const MixtureModel& model, const Subset& s) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(model.k);
  for (int bit : s) {
    if (bit < 0 || bit >= model.n) throw std::invalid_argument("hadamard_row: bit out of range");
    row = row.cwiseProduct(model.M.row(bit));
  }
  return row;
}

double exact_moment(const MixtureModel& model, const Subset& s) {
  return hadamard_row(model, s).dot(model.pi.transpose());
}

std::vector<int> SeparationReport::separated_rows(double zeta) const {
  std::vector<int> rows;
  for (Eigen::Index i = 0; i < per_row_gap.size(); ++i)
    if (per_row_gap(i) >= zeta) rows.push_back(static_cast<int>(i));
  return rows;
}

SeparationReport separation_report(const MixtureModel& model) {
  SeparationReport rep;
  rep.per_row_gap.resize(model.n);
  for (int i = 0; i < model.n; ++i) {
    double gap = std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.k; ++a)
      for (int b = a + 1; b < model.k; ++b)
        gap = std::min(gap, std::abs(model.M(i, a) - model.M(i, b)));
    rep.per_row_gap(i) = gap;
  }
  rep.min_gap = model.n > 0 ? rep.per_row_gap.minCoeff()
                            : std::numeric_limits<double>::infinity();
  return rep;
}

namespace {

// k values in [0,1] with pairwise gaps >= zeta: pick k grid points of spacing
// zeta without replacement, add jitters sorted ascending so gaps only grow,
// then assign to components in random order.
Eigen::RowVectorXd separated_row(std::mt19937_64& gen, int k, double zeta) {
  if (k == 1) {
    Eigen::RowVectorXd row(1);
    row(0) = uniform01(gen);
    return row;
  }
  const int grid = static_cast<int>(std::floor(1.0 / zeta + 1e-9)) + 1;
  if (grid < k) throw std::invalid_argument("random_model: zeta too large for k values in [0,1]");
  std::vector<int> idx(grid);
  std::iota(idx.begin(), idx.end(), 0);
  shuffle_inplace(gen, idx);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  const double slack = 1.0 - idx.back() * zeta;
  std::vector<double> jitter(k);
  for (double& j : jitter) j = uniform_range(gen, 0.0, slack);
  std::sort(jitter.begin(), jitter.end());

  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  shuffle_inplace(gen, order);

  Eigen::RowVectorXd row(k);
  for (int j = 0; j < k; ++j) row(order[j]) = idx[j] * zeta + jitter[j];
  return row;
}

Eigen::VectorXd floored_simplex(std::mt19937_64& gen, int k, double pi_min) {
  // Uniform on the standard simplex via stick breaking, then affinely mapped
  // onto {pi : pi_j >= pi_min, sum = 1}.
  Eigen::VectorXd w(k);
  double rest = 1.0;
  for (int j = 0; j < k - 1; ++j) {
    const double frac = 1.0 - std::pow(uniform01(gen), 1.0 / (k - 1 - j));
    w(j) = rest * frac;
    rest -= w(j);
  }
  w(k - 1) = rest;
  return Eigen::VectorXd::Constant(k, pi_min) + (1.0 - k * pi_min) * w;
}

}  // namespace

MixtureModel random_model(int k, int n, double zeta, double pi_min, int separated_rows,
                          std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("random_model: k must be >= 1");
  if (n < 0) throw std::invalid_argument("random_model: n must be >= 0");
  if (k >= 2 && !(zeta > 0.0 && zeta <= 1.0 / (k - 1)))
    throw std::invalid_argument("random_model: need 0 < zeta <= 1/(k-1)");
  if (!(pi_min > 0.0 && pi_min <= 1.0 / k))
    throw std::invalid_argument("random_model: need 0 < pi_min <= 1/k");
  if (separated_rows < 0 || separated_rows > n) separated_rows = n;

  std::mt19937_64 gen(seed);
  MixtureModel model;
  model.k = k;
  model.n = n;
  model.pi = k == 1 ? Eigen::VectorXd::Ones(1).eval() : floored_simplex(gen, k, pi_min);
  model.M.resize(n, k);
  for (int i = 0; i < n; ++i) {
    if (i < separated_rows) {
      model.M.row(i) = separated_row(gen, k, zeta);
    } else {
      for (int j = 0; j < k; ++j) model.M(i, j) = uniform01(gen);
    }
  }
  model.validate();
  return model;
}

ComponentAlignment model_distance(const MixtureModel& a, const MixtureModel& b) {
  if (a.k != b.k || a.n != b.n)
    throw std::invalid_argument("model_distance: dimension mismatch");
  if (a.k > 8) throw std::invalid_argument("model_distance: permutation search needs k <= 8");

  std::vector<int> perm(a.k);
  std::iota(perm.begin(), perm.end(), 0);
  ComponentAlignment best;
  best.distance = std::numeric_limits<double>::infinity();
  do {
    double d = 0.0;
    for (int j = 0; j < a.k && d < best.distance; ++j) {
      d = std::max(d, std::abs(a.pi(j) - b.pi(perm[j])));
      for (int i = 0; i < a.n; ++i)
        d = std::max(d, std::abs(a.M(i, j) - b.M(i, perm[j])));
    }
    if (d < best.distance) {
      best.distance = d;
      best.perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::string model_to_json(const MixtureModel& model) {
  std::string out = "{\"k\":" + std::to_string(model.k) + ",\"n\":" + std::to_string(model.n);
  out += ",\"pi\":" + fmt_vector(model.pi);
  out += ",\"M\":" + fmt_matrix_rows(model.M);
  return out + "}\n";
}

MixtureModel model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MixtureModel model;
  model.k = j.at("k").get<int>();
  model.n = j.at("n").get<int>();
  const auto& pi = j.at("pi");
  const auto& rows = j.at("M");
  if (model.k < 1 || static_cast<int>(pi.size()) != model.k)
    throw std::invalid_argument("model JSON: pi must have k entries");
  if (static_cast<int>(rows.size()) != model.n)
    throw std::invalid_argument("model JSON: M must have n rows");
  model.pi.resize(model.k);
  for (int i = 0; i < model.k; ++i) model.pi(i) = pi.at(i).get<double>();
  model.M.resize(model.n, model.k);
  for (int i = 0; i < model.n; ++i) {
    if (static_cast<int>(rows.at(i).size()) != model.k)
      throw std::invalid_argument("model JSON: M rows must have k entries");
    for (int c = 0; c < model.k; ++c) model.M(i, c) = rows.at(i).at(c).get<double>();
  }
  model.validate();
  return model;
}

void save_model(const MixtureModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << model_to_json(model);
  if (!out) throw std::runtime_error("write failed: " + path);
}

MixtureModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace mixident
