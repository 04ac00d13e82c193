#include <doctest.h>

#include <Eigen/SVD>
#include <json.hpp>
#include <random>
#include <variant>

#include "helpers.hpp"
#include "mixident/families.hpp"

using namespace mixident;

namespace {

double sigma_min_ref(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().minCoeff();
}

}  // namespace

TEST_CASE("moment matrix of the reference families matches hand computation") {
  const auto oracle = MomentOracle::exact(reference_model_k2());
  const SubsetFamily basis{{0}, {{}, {0}}};
  const SubsetFamily probes{{1}, {{}, {1}}};
  const auto mm = moment_matrix(oracle, basis, probes);
  CHECK(mm.values(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mm.values(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mm.values(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mm.values(1, 1) == doctest::Approx(0.28).epsilon(1e-14));
  CHECK(mm.sigma_min == doctest::Approx(sigma_min_ref(mm.values)).epsilon(1e-12));
  CHECK(mm.sigma_min <= mm.sigma_max);
}

TEST_CASE("moment matrix factors through the hidden components") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto m = random_model(3, 4, 0.15, 0.1, -1, seed);
    const auto oracle = MomentOracle::exact(m);
    const SubsetFamily rows{{0, 1}, {{}, {0}, {0, 1}}};
    const SubsetFamily cols{{2, 3}, {{}, {2}, {2, 3}}};
    const auto mm = moment_matrix(oracle, rows, cols);
    Eigen::MatrixXd lhs(3, 3), rhs(3, 3);
    for (int i = 0; i < 3; ++i) {
      lhs.row(i) = hadamard_row(m, rows.members[static_cast<std::size_t>(i)]);
      rhs.row(i) = hadamard_row(m, cols.members[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd expect = lhs * m.pi.asDiagonal() * rhs.transpose();
    CHECK((mm.values - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("moment matrix rejects overlapping grounds") {
  const auto oracle = MomentOracle::exact(reference_model_k2_n3());
  const SubsetFamily rows{{0, 1}, {{}, {0}}};
  const SubsetFamily cols{{1, 2}, {{}, {1}}};
  CHECK_THROWS_AS(moment_matrix(oracle, rows, cols), std::invalid_argument);
}

TEST_CASE("family sum walks member pairs row-major") {
  const SubsetFamily a{{0}, {{}, {0}}};
  const SubsetFamily b{{2}, {{}, {2}}};
  const auto sum = family_sum(a, b);
  REQUIRE(sum.size() == 4);
  CHECK(sum.members[0] == Subset{});
  CHECK(sum.members[1] == Subset{2});
  CHECK(sum.members[2] == Subset{0});
  CHECK(sum.members[3] == Subset{0, 2});
  CHECK(sum.ground == std::vector<int>{0, 2});
  CHECK_THROWS_AS(family_sum(a, a), std::invalid_argument);
}

TEST_CASE("paired moment matrix agrees with direct union queries") {
  const auto m = reference_model_k2_n3();
  const auto oracle = MomentOracle::exact(m);
  const SubsetFamily basis{{0}, {{}, {0}}};
  const SubsetFamily alt{{1}, {{}, {1}}};
  const SubsetFamily probes{{2}, {{}, {2}}};
  const auto paired = moment_matrix(oracle, family_sum(basis, alt), probes);
  for (int l = 0; l < 2; ++l)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) {
        const auto want = subset_union(
            subset_union(basis.members[static_cast<std::size_t>(l)],
                         alt.members[static_cast<std::size_t>(j)]),
            probes.members[static_cast<std::size_t>(i)]);
        CHECK(paired.values(l * 2 + j, i) == doctest::Approx(oracle(want)).epsilon(1e-14));
      }
}

TEST_CASE("selection threshold scales as pi_min times a power of zeta") {
  CHECK(selection_threshold(0.5, 0.3, 2, 1.0) == doctest::Approx(0.3 * std::pow(0.5, 4)));
  CHECK(selection_threshold(0.2, 0.1, 3) == doctest::Approx(0.1 * std::pow(0.2, 90)));
}

TEST_CASE("select_families on the reference model scores the forced pair") {
  const auto oracle = MomentOracle::exact(reference_model_k2_n3());
  const auto res = select_families(oracle, {2}, {1}, {}, 2, 1e-30);
  REQUIRE(std::holds_alternative<FamilySelection>(res));
  const auto& sel = std::get<FamilySelection>(res);
  CHECK(sel.probes.members == std::vector<Subset>{{}, {2}});
  CHECK(sel.basis.members == std::vector<Subset>{{}, {1}});
  CHECK_FALSE(sel.basis_alt.has_value());
  Eigen::MatrixXd expect(2, 2);
  expect << 1.0, 0.5, 0.5, 0.29;  // moments of {}, {2}, {1}, {1,2}
  CHECK(sel.score == doctest::Approx(sigma_min_ref(expect)).epsilon(1e-12));
  CHECK(sel.target_bit == 1);  // lone basis bit is used by a member, fallback
}

TEST_CASE("select_families takes the weaker of the two basis scores") {
  const auto oracle = MomentOracle::exact(reference_model_k2_n3());
  const auto res = select_families(oracle, {2}, {0}, {1}, 2, 1e-30);
  REQUIRE(std::holds_alternative<FamilySelection>(res));
  const auto& sel = std::get<FamilySelection>(res);
  REQUIRE(sel.basis_alt.has_value());
  Eigen::MatrixXd primary(2, 2), alt(2, 2);
  primary << 1.0, 0.5, 0.5, 0.37;  // basis over bit 0
  alt << 1.0, 0.5, 0.5, 0.29;      // basis over bit 1
  const double want = std::min(sigma_min_ref(primary), sigma_min_ref(alt));
  CHECK(sel.score == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("select_families gates on the threshold") {
  const auto oracle = MomentOracle::exact(reference_model_k2_n3());
  const auto res = select_families(oracle, {2}, {1}, {}, 2, 0.5);
  REQUIRE(std::holds_alternative<Failure>(res));
  CHECK(std::get<Failure>(res).stage == Stage::selection);
}

TEST_CASE("select_families validates its ground sets") {
  const auto oracle = MomentOracle::exact(reference_model_k2_n3());
  CHECK_THROWS_AS(select_families(oracle, {1}, {1}, {}, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(select_families(oracle, {0, 1}, {2}, {}, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(select_families(oracle, {7}, {1}, {}, 2, 0.0), std::invalid_argument);
}

TEST_CASE("selection JSON round trip keeps every field") {
  const auto oracle = MomentOracle::exact(reference_model_k2_n3());
  const auto res = select_families(oracle, {2}, {0}, {1}, 2, 1e-30);
  const auto& sel = std::get<FamilySelection>(res);
  const std::string text = selection_to_json(sel);

  const auto j = nlohmann::json::parse(text);
  for (const char* key : {"S", "T", "Tp", "A", "B", "Bp", "score", "target_bit"})
    CHECK(j.contains(key));

  const auto back = selection_from_json(text);
  CHECK(back.probe_ground == sel.probe_ground);
  CHECK(back.basis_ground == sel.basis_ground);
  CHECK(back.alt_ground == sel.alt_ground);
  CHECK(back.probes.members == sel.probes.members);
  CHECK(back.basis.members == sel.basis.members);
  REQUIRE(back.basis_alt.has_value());
  CHECK(back.basis_alt->members == sel.basis_alt->members);
  CHECK(back.score == sel.score);
  CHECK(back.target_bit == sel.target_bit);
}

TEST_CASE("separated-mode search uses the leading blocks") {
  const auto oracle = MomentOracle::exact(reference_model_k2_n3());
  const auto res = search_triples(oracle, 3, 2, 1e-30, SearchMode::all_separated);
  REQUIRE(std::holds_alternative<FamilySelection>(res));
  const auto& sel = std::get<FamilySelection>(res);
  CHECK(sel.basis_ground == std::vector<int>{0});
  CHECK(sel.alt_ground == std::vector<int>{1});
  CHECK(sel.probe_ground == std::vector<int>{2});
  CHECK(sel.target_bit == 0);
  REQUIRE(sel.basis_alt.has_value());
}

TEST_CASE("sequential separated search pins target zero") {
  const auto oracle = MomentOracle::exact(reference_model_k2_n3());
  const auto res =
      search_triples(oracle, 3, 2, 1e-30, SearchMode::all_separated, Strategy::sequential);
  REQUIRE(std::holds_alternative<FamilySelection>(res));
  const auto& sel = std::get<FamilySelection>(res);
  CHECK(sel.target_bit == 0);
  CHECK(sel.probe_ground == std::vector<int>{1});
  CHECK(sel.basis_ground == std::vector<int>{2});
  CHECK_FALSE(sel.basis_alt.has_value());
}

TEST_CASE("exhaustive search enumerates every disjoint triple") {
  const auto oracle = MomentOracle::exact(reference_model_k2_n3());
  int seen = 0;
  const bool accepted = for_each_selection(oracle, 3, 2, 1e-30, SearchMode::exhaustive,
                                           Strategy::doubling, [&](const FamilySelection&) {
                                             ++seen;
                                             return false;
                                           });
  CHECK_FALSE(accepted);
  CHECK(seen == 6);  // 3 * 2 * 1 ordered singleton triples

  seen = 0;
  for_each_selection(oracle, 3, 2, 1e-30, SearchMode::exhaustive, Strategy::sequential,
                     [&](const FamilySelection&) {
                       ++seen;
                       return false;
                     });
  CHECK(seen == 6);  // target choices times ordered (S, T) pairs
}

TEST_CASE("search demands enough bits for the ground sets") {
  const auto oracle = MomentOracle::exact(random_model(3, 5, 0.15, 0.1, -1, 3));
  CHECK_THROWS_AS(
      search_triples(oracle, 5, 3, 1e-30, SearchMode::all_separated, Strategy::doubling),
      std::invalid_argument);
}

TEST_CASE("k=1 search degenerates to the empty family") {
  MixtureModel m;
  m.k = 1;
  m.n = 1;
  m.pi.resize(1);
  m.pi << 1.0;
  m.M.resize(1, 1);
  m.M << 0.3;
  const auto oracle = MomentOracle::exact(m);
  const auto res = search_triples(oracle, 1, 1, 0.5, SearchMode::all_separated);
  REQUIRE(std::holds_alternative<FamilySelection>(res));
  const auto& sel = std::get<FamilySelection>(res);
  CHECK(sel.score == 1.0);
  CHECK(sel.target_bit == 0);
  CHECK(sel.probes.members == std::vector<Subset>{{}});
}

TEST_CASE("column selection keeps the guaranteed share of sigma_r") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Square input: identity selection.
  Eigen::MatrixXd square(3, 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) square(r, c) = unif(gen);
  CHECK(fos_column_select(square) == std::vector<int>{0, 1, 2});

  // Brute-force regime at 3 x 8: bound factor sqrt(3 * 5 + 1) = 4.
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd wide(3, 8);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 8; ++c) wide(r, c) = unif(gen);
    const auto cols = fos_column_select(wide);
    REQUIRE(cols.size() == 3);
    Eigen::MatrixXd sub(3, 3);
    for (int i = 0; i < 3; ++i) sub.col(i) = wide.col(cols[static_cast<std::size_t>(i)]);
    CHECK(sigma_min_ref(sub) >= sigma_min_ref(wide) / 4.0 * (1.0 - 1e-12));
  }

  // Greedy regime past the brute-force cutoff; the a-posteriori check is
  // internal, so returning at all means the bound held.
  Eigen::MatrixXd big(3, 25);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 25; ++c) big(r, c) = unif(gen);
  const auto cols = fos_column_select(big);
  REQUIRE(cols.size() == 3);
  CHECK(std::is_sorted(cols.begin(), cols.end()));

  Eigen::MatrixXd tall(4, 2);
  tall.setOnes();
  CHECK_THROWS_AS(fos_column_select(tall), std::invalid_argument);
}
