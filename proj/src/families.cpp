#include "mixident/families.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mixident/json_fmt.hpp"

namespace mixident {

namespace {

// k-element index combinations of {0..m-1} in lexicographic order.
struct Combinations {
  int m, k;
  std::vector<int> idx;
  bool done = false;

  Combinations(int m, int k) : m(m), k(k), idx(static_cast<std::size_t>(k)) {
    if (k > m) {
      done = true;
      return;
    }
    std::iota(idx.begin(), idx.end(), 0);
  }
  bool next() {
    if (k == 0) {
      done = true;  // the single empty combination was already visited
      return false;
    }
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) {
      done = true;
      return false;
    }
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    return true;
  }
};

std::vector<int> pick(const std::vector<int>& pool, const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(pool[static_cast<std::size_t>(i)]);
  return out;
}

void check_ground(const std::vector<int>& g, int n, const char* name) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < 0 || g[i] >= n) throw std::invalid_argument(std::string(name) + ": bit out of range");
    if (i > 0 && g[i - 1] >= g[i])
      throw std::invalid_argument(std::string(name) + ": ground set must be sorted unique");
  }
}

}  // namespace

MomentMatrix moment_matrix(const MomentOracle& oracle, const SubsetFamily& rows,
                           const SubsetFamily& cols) {
  const int r = rows.size();
  const int c = cols.size();
  if (r == 0 || c == 0) throw std::invalid_argument("moment_matrix: empty family");
  if (!subsets_disjoint(Subset(rows.ground), Subset(cols.ground)))
    throw std::invalid_argument("moment_matrix: family grounds must be disjoint");

  std::vector<Subset> wanted;
  wanted.reserve(static_cast<std::size_t>(r) * c);
  for (const auto& b : rows.members)
    for (const auto& a : cols.members) wanted.push_back(subset_union(b, a));
  const auto table = oracle.moment_table(wanted);

  MomentMatrix out;
  out.values.resize(r, c);
  for (int l = 0; l < r; ++l)
    for (int i = 0; i < c; ++i)
      out.values(l, i) = table.at(wanted[static_cast<std::size_t>(l) * c + i]);

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.values);
  out.sigma_min = svd.singularValues().minCoeff();
  out.sigma_max = svd.singularValues().maxCoeff();
  return out;
}

SubsetFamily family_sum(const SubsetFamily& a, const SubsetFamily& b) {
  if (!subsets_disjoint(Subset(a.ground), Subset(b.ground)))
    throw std::invalid_argument("family_sum: ground sets must be disjoint");
  SubsetFamily out;
  out.ground = Subset(a.ground);
  for (int g : b.ground) out.ground.push_back(g);
  std::sort(out.ground.begin(), out.ground.end());
  out.members.reserve(static_cast<std::size_t>(a.size()) * b.size());
  for (const auto& x : a.members)
    for (const auto& y : b.members) out.members.push_back(subset_union(x, y));
  return out;
}

double selection_threshold(double zeta, double pi_min, int k, double exponent_scale) {
  return pi_min * std::pow(zeta, exponent_scale * k * k);
}

namespace {

// Probe-family candidates: the empty set pinned first, then every choice of
// k-1 further subsets of the ground, in lexicographic order over the power
// set's binary-counter enumeration.
std::vector<SubsetFamily> probe_candidates(const std::vector<int>& ground, int k) {
  const auto pool = power_set(ground);
  std::vector<SubsetFamily> out;
  if (k == 1) {
    out.push_back({ground, {Subset{}}});
    return out;
  }
  Combinations combo(static_cast<int>(pool.size()) - 1, k - 1);
  if (combo.done) return out;
  do {
    SubsetFamily fam;
    fam.ground = ground;
    fam.members.push_back(Subset{});
    for (int i : combo.idx) fam.members.push_back(pool[static_cast<std::size_t>(i) + 1]);
    out.push_back(std::move(fam));
  } while (combo.next());
  return out;
}

std::vector<SubsetFamily> basis_candidates(const std::vector<int>& ground, int k) {
  const auto pool = power_set(ground);
  std::vector<SubsetFamily> out;
  Combinations combo(static_cast<int>(pool.size()), k);
  if (combo.done) return out;
  do {
    SubsetFamily fam;
    fam.ground = ground;
    for (int i : combo.idx) fam.members.push_back(pool[static_cast<std::size_t>(i)]);
    out.push_back(std::move(fam));
  } while (combo.next());
  return out;
}

struct ProbeScore {
  SubsetFamily probes;
  SubsetFamily best_basis;
  double sigma = -1.0;  // best sigma_k over basis candidates for this probe family
};

// For every probe-family candidate, the basis family maximizing the least
// singular value of their moment matrix.  Ties keep the earliest candidate.
std::vector<ProbeScore> score_probe_basis(const MomentOracle& oracle,
                                          const std::vector<int>& probe_ground,
                                          const std::vector<int>& basis_ground, int k) {
  std::vector<ProbeScore> scores;
  for (auto& probes : probe_candidates(probe_ground, k)) {
    ProbeScore ps;
    ps.probes = std::move(probes);
    for (const auto& basis : basis_candidates(basis_ground, k)) {
      const double sigma = moment_matrix(oracle, basis, ps.probes).sigma_min;
      if (sigma > ps.sigma) {
        ps.sigma = sigma;
        ps.best_basis = basis;
      }
    }
    scores.push_back(std::move(ps));
  }
  return scores;
}

int choose_target_bit(const std::vector<int>& basis_ground, const SubsetFamily& basis) {
  // Prefer a basis-ground bit unused by the chosen members so the sequential
  // recursion's disjointness requirement can also be met; fall back to the
  // smallest ground bit.
  for (int bit : basis_ground) {
    bool used = false;
    for (const auto& s : basis.members) used = used || subset_contains(s, bit);
    if (!used) return bit;
  }
  return basis_ground.empty() ? -1 : basis_ground.front();
}

}  // namespace

std::variant<FamilySelection, Failure> select_families(const MomentOracle& oracle,
                                                       const std::vector<int>& probe_ground,
                                                       const std::vector<int>& basis_ground,
                                                       const std::vector<int>& alt_ground, int k,
                                                       double threshold) {
  if (k < 1) throw std::invalid_argument("select_families: k must be >= 1");
  const int n = oracle.ground_size();
  check_ground(probe_ground, n, "probe ground");
  check_ground(basis_ground, n, "basis ground");
  check_ground(alt_ground, n, "alt ground");
  const std::size_t want = static_cast<std::size_t>(k > 1 ? k - 1 : 0);
  if (probe_ground.size() != want || basis_ground.size() != want ||
      (!alt_ground.empty() && alt_ground.size() != want))
    throw std::invalid_argument("select_families: ground sets must have k-1 bits");
  if (!subsets_disjoint(Subset(probe_ground), Subset(basis_ground)) ||
      !subsets_disjoint(Subset(probe_ground), Subset(alt_ground)) ||
      !subsets_disjoint(Subset(basis_ground), Subset(alt_ground)))
    throw std::invalid_argument("select_families: ground sets must be pairwise disjoint");

  const bool with_alt = !alt_ground.empty() || k == 1;
  const auto primary = score_probe_basis(oracle, probe_ground, basis_ground, k);

  FamilySelection best;
  best.score = -1.0;
  if (with_alt) {
    const auto alt = score_probe_basis(oracle, probe_ground, alt_ground, k);
    for (std::size_t i = 0; i < primary.size(); ++i) {
      const double score = std::min(primary[i].sigma, alt[i].sigma);
      if (score > best.score) {
        best.score = score;
        best.probes = primary[i].probes;
        best.basis = primary[i].best_basis;
        best.basis_alt = alt[i].best_basis;
      }
    }
  } else {
    for (const auto& ps : primary) {
      if (ps.sigma > best.score) {
        best.score = ps.sigma;
        best.probes = ps.probes;
        best.basis = ps.best_basis;
      }
    }
  }

  best.probe_ground = probe_ground;
  best.basis_ground = basis_ground;
  best.alt_ground = alt_ground;
  best.target_bit = choose_target_bit(basis_ground, best.basis);
  if (best.score < threshold)
    return Failure{Stage::selection,
                   "best family score " + fmt_double(best.score) + " below threshold " +
                       fmt_double(threshold)};
  return best;
}

namespace {

std::vector<int> complement(int n, const std::vector<int>& used) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (!std::binary_search(used.begin(), used.end(), i)) out.push_back(i);
  return out;
}

bool visit_doubling(const MomentOracle& oracle, int n, int k, double threshold,
                    const std::function<bool(const FamilySelection&)>& fn) {
  // Disjoint (S, T, T') in lexicographic order.  The per-(S,T) probe/basis
  // scores are shared across every T', and a (S,T) pair whose best basis
  // score already misses the threshold cannot be rescued by any T'.
  const int w = k - 1;
  Combinations cs(n, w);
  if (cs.done) return false;
  do {
    const auto S = cs.idx;
    const auto restT = complement(n, S);
    Combinations ct(static_cast<int>(restT.size()), w);
    if (ct.done) continue;
    do {
      const auto T = pick(restT, ct.idx);
      const auto primary = score_probe_basis(oracle, S, T, k);
      double best_primary = -1.0;
      for (const auto& ps : primary) best_primary = std::max(best_primary, ps.sigma);
      if (best_primary < threshold) continue;

      auto usedST = S;
      usedST.insert(usedST.end(), T.begin(), T.end());
      std::sort(usedST.begin(), usedST.end());
      const auto restTp = complement(n, usedST);
      Combinations cp(static_cast<int>(restTp.size()), w);
      if (cp.done) continue;
      do {
        const auto Tp = pick(restTp, cp.idx);
        const auto alt = score_probe_basis(oracle, S, Tp, k);
        FamilySelection sel;
        sel.score = -1.0;
        for (std::size_t i = 0; i < primary.size(); ++i) {
          const double score = std::min(primary[i].sigma, alt[i].sigma);
          if (score > sel.score) {
            sel.score = score;
            sel.probes = primary[i].probes;
            sel.basis = primary[i].best_basis;
            sel.basis_alt = alt[i].best_basis;
          }
        }
        if (sel.score < threshold) continue;
        sel.probe_ground = S;
        sel.basis_ground = T;
        sel.alt_ground = Tp;
        sel.target_bit = choose_target_bit(T, sel.basis);
        if (fn(sel)) return true;
      } while (cp.next());
    } while (ct.next());
  } while (cs.next());
  return false;
}

bool visit_sequential(const MomentOracle& oracle, int n, int k, double threshold,
                      const std::function<bool(const FamilySelection&)>& fn) {
  const int w = k - 1;
  for (int target = 0; target < n; ++target) {
    const auto rest = complement(n, {target});
    Combinations cs(static_cast<int>(rest.size()), w);
    if (cs.done) continue;
    do {
      const auto S = pick(rest, cs.idx);
      auto used = S;
      used.push_back(target);
      std::sort(used.begin(), used.end());
      const auto restT = complement(n, used);
      Combinations ct(static_cast<int>(restT.size()), w);
      if (ct.done) continue;
      do {
        const auto T = pick(restT, ct.idx);
        auto res = select_families(oracle, S, T, {}, k, threshold);
        if (std::holds_alternative<Failure>(res)) continue;
        auto sel = std::get<FamilySelection>(std::move(res));
        sel.target_bit = target;
        if (fn(sel)) return true;
      } while (ct.next());
    } while (cs.next());
  }
  return false;
}

FamilySelection k1_selection(int target) {
  FamilySelection sel;
  sel.probes = {{}, {Subset{}}};
  sel.basis = {{}, {Subset{}}};
  sel.basis_alt = SubsetFamily{{}, {Subset{}}};
  sel.score = 1.0;  // the 1x1 moment matrix is [mom({})] = [1]
  sel.target_bit = target;
  return sel;
}

}  // namespace

bool for_each_selection(const MomentOracle& oracle, int n, int k, double threshold,
                        SearchMode mode, Strategy strategy,
                        const std::function<bool(const FamilySelection&)>& fn) {
  if (k < 1) throw std::invalid_argument("search: k must be >= 1");
  const int need = k == 1 ? 1 : (strategy == Strategy::doubling ? 3 * (k - 1) : 2 * k - 1);
  if (n < need) throw std::invalid_argument("search: not enough bits for the ground sets");

  if (k == 1) {
    if (mode == SearchMode::all_separated) return fn(k1_selection(0));
    for (int t = 0; t < n; ++t)
      if (fn(k1_selection(t))) return true;
    return false;
  }

  if (mode == SearchMode::all_separated) {
    std::vector<int> first, second, third;
    if (strategy == Strategy::doubling) {
      for (int i = 0; i < k - 1; ++i) first.push_back(i);                    // T
      for (int i = k - 1; i < 2 * k - 2; ++i) second.push_back(i);           // T'
      for (int i = 2 * k - 2; i < 3 * k - 3; ++i) third.push_back(i);        // S
      auto res = select_families(oracle, third, first, second, k, threshold);
      if (std::holds_alternative<Failure>(res)) return false;
      return fn(std::get<FamilySelection>(res));
    }
    first.push_back(0);                                                      // target
    for (int i = 1; i < k; ++i) second.push_back(i);                         // S
    for (int i = k; i < 2 * k - 1; ++i) third.push_back(i);                  // T
    auto res = select_families(oracle, second, third, {}, k, threshold);
    if (std::holds_alternative<Failure>(res)) return false;
    auto sel = std::get<FamilySelection>(std::move(res));
    sel.target_bit = 0;
    return fn(sel);
  }

  return strategy == Strategy::doubling ? visit_doubling(oracle, n, k, threshold, fn)
                                        : visit_sequential(oracle, n, k, threshold, fn);
}

std::variant<FamilySelection, Failure> search_triples(const MomentOracle& oracle, int n, int k,
                                                      double threshold, SearchMode mode,
                                                      Strategy strategy) {
  std::optional<FamilySelection> found;
  for_each_selection(oracle, n, k, threshold, mode, strategy,
                     [&](const FamilySelection& sel) {
                       found = sel;
                       return true;
                     });
  if (found) return *found;
  return Failure{Stage::selection, "no ground-set choice passed the selection threshold"};
}

namespace {

std::string family_json(const SubsetFamily& fam) {
  std::string out = "[";
  for (int i = 0; i < fam.size(); ++i) {
    if (i) out += ",";
    out += fmt_int_list(fam.members[static_cast<std::size_t>(i)]);
  }
  return out + "]";
}

SubsetFamily family_from(const nlohmann::json& arr, std::vector<int> ground) {
  SubsetFamily fam;
  fam.ground = std::move(ground);
  for (const auto& member : arr) {
    Subset s;
    for (const auto& bit : member) s.push_back(bit.get<int>());
    if (!is_canonical(s)) throw std::invalid_argument("selection JSON: member not sorted unique");
    fam.members.push_back(std::move(s));
  }
  return fam;
}

}  // namespace

std::string selection_to_json(const FamilySelection& sel) {
  std::string out = "{\"S\":" + fmt_int_list(sel.probe_ground);
  out += ",\"T\":" + fmt_int_list(sel.basis_ground);
  out += ",\"Tp\":" + fmt_int_list(sel.alt_ground);
  out += ",\"A\":" + family_json(sel.probes);
  out += ",\"B\":" + family_json(sel.basis);
  out += ",\"Bp\":" + (sel.basis_alt ? family_json(*sel.basis_alt) : std::string("[]"));
  out += ",\"score\":" + fmt_double(sel.score);
  out += ",\"target_bit\":" + std::to_string(sel.target_bit);
  return out + "}\n";
}

FamilySelection selection_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FamilySelection sel;
  for (const auto& b : j.at("S")) sel.probe_ground.push_back(b.get<int>());
  for (const auto& b : j.at("T")) sel.basis_ground.push_back(b.get<int>());
  for (const auto& b : j.at("Tp")) sel.alt_ground.push_back(b.get<int>());
  sel.probes = family_from(j.at("A"), sel.probe_ground);
  sel.basis = family_from(j.at("B"), sel.basis_ground);
  const auto& bp = j.at("Bp");
  if (!bp.empty()) sel.basis_alt = family_from(bp, sel.alt_ground);
  sel.score = j.at("score").get<double>();
  sel.target_bit = j.at("target_bit").get<int>();
  if (!sel.probes.contains_empty_first())
    throw std::invalid_argument("selection JSON: probe family must start with the empty set");
  return sel;
}

namespace {

double sigma_min_of(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().minCoeff();
}

}  // namespace

std::vector<int> fos_column_select(const Eigen::MatrixXd& wide) {
  const auto r = static_cast<int>(wide.rows());
  const auto c = static_cast<int>(wide.cols());
  if (r > c) throw std::invalid_argument("fos_column_select: matrix must be wide (r <= c)");
  std::vector<int> cols(static_cast<std::size_t>(r));
  if (r == c) {
    std::iota(cols.begin(), cols.end(), 0);
    return cols;
  }
  const double target = sigma_min_of(wide) / std::sqrt(double(r) * (c - r) + 1.0);

  if (c <= 20) {
    double best = -1.0;
    Combinations combo(c, r);
    Eigen::MatrixXd sub(r, r);
    do {
      for (int i = 0; i < r; ++i) sub.col(i) = wide.col(combo.idx[static_cast<std::size_t>(i)]);
      const double sigma = sigma_min_of(sub);
      if (sigma > best) {
        best = sigma;
        cols = combo.idx;
      }
    } while (combo.next());
    return cols;
  }

  // Greedy: column-pivoted QR ranks columns by captured volume; verify the
  // guaranteed bound afterwards since the greedy pick has no a-priori proof.
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wide);
  const auto perm = qr.colsPermutation().indices();
  for (int i = 0; i < r; ++i) cols[static_cast<std::size_t>(i)] = perm(i);
  std::sort(cols.begin(), cols.end());
  Eigen::MatrixXd sub(r, r);
  for (int i = 0; i < r; ++i) sub.col(i) = wide.col(cols[static_cast<std::size_t>(i)]);
  if (sigma_min_of(sub) < target * (1.0 - 1e-12))
    throw CheckFailedError("greedy column selection missed the guaranteed bound");
  return cols;
}

}  // namespace mixident
