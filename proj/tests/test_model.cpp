#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "mixident/model.hpp"

using namespace mixident;

TEST_CASE("hadamard row of the empty set is all ones") {
  const auto m = reference_model_k2();
  const Eigen::RowVectorXd row = hadamard_row(m, {});
  CHECK(row.size() == 2);
  CHECK(row(0) == 1.0);
  CHECK(row(1) == 1.0);
}

TEST_CASE("hadamard row multiplies entrywise") {
  const auto m = reference_model_k2();
  const Eigen::RowVectorXd row = hadamard_row(m, {0, 1});
  CHECK(row(0) == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(row(1) == doctest::Approx(0.48).epsilon(1e-15));
}

TEST_CASE("moments of the reference model match full-joint enumeration") {
  const auto m = reference_model_k2();
  CHECK(exact_moment(m, {}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(exact_moment(m, {0}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(exact_moment(m, {0, 1}) == doctest::Approx(0.28).epsilon(1e-14));
  // The same values through the independent path.
  CHECK(brute_force_moment(m, {0}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(brute_force_moment(m, {0, 1}) == doctest::Approx(0.28).epsilon(1e-14));
}

TEST_CASE("moments agree with enumeration on random models") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = random_model(3, 5, 0.2, 0.1, -1, seed);
    const auto subsets = power_set({0, 1, 2, 3, 4});
    for (const auto& s : subsets) {
      CHECK(exact_moment(m, s) == doctest::Approx(brute_force_moment(m, s)).epsilon(1e-12));
    }
  }
}

TEST_CASE("moments are monotone under subset inclusion and lie in [0,1]") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = random_model(2, 6, 0.3, 0.2, -1, seed);
    const auto subsets = power_set({0, 1, 2, 3, 4, 5});
    for (const auto& s : subsets) {
      const double mom = exact_moment(m, s);
      CHECK(mom >= 0.0);
      CHECK(mom <= 1.0);
      for (int bit : s) {
        Subset smaller;
        for (int b : s)
          if (b != bit) smaller.push_back(b);
        CHECK(exact_moment(m, smaller) >= mom - 1e-15);
      }
    }
  }
}

TEST_CASE("separation report: designated rows of random models meet the gap") {
  // gaps are constructed on a zeta grid, exact up to one rounding ulp
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto m = random_model(4, 6, 0.2, 0.05, 3, seed);
    const auto rep = separation_report(m);
    for (int i = 0; i < 3; ++i) CHECK(rep.per_row_gap(i) >= 0.2 * (1.0 - 1e-12));
    CHECK(rep.per_row_gap.size() == 6);
  }
}

TEST_CASE("separation gap is +inf for a single component") {
  const auto m = random_model(1, 3, 0.5, 1.0, -1, 7);
  const auto rep = separation_report(m);
  CHECK(std::isinf(rep.per_row_gap(0)));
}

TEST_CASE("random models satisfy the weight floor and determinism") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto a = random_model(3, 4, 0.25, 0.15, -1, seed);
    const auto b = random_model(3, 4, 0.25, 0.15, -1, seed);
    CHECK(a.pi.minCoeff() >= 0.15);
    CHECK(a.pi.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((a.pi - b.pi).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.M - b.M).lpNorm<Eigen::Infinity>() == 0.0);
    const auto c = random_model(3, 4, 0.25, 0.15, -1, seed + 1000);
    CHECK((a.M - c.M).lpNorm<Eigen::Infinity>() > 0.0);
  }
}

TEST_CASE("random model rejects infeasible separation or floor") {
  CHECK_THROWS_AS(random_model(3, 2, 0.6, 0.1, -1, 1), std::invalid_argument);
  CHECK_THROWS_AS(random_model(2, 2, 0.5, 0.6, -1, 1), std::invalid_argument);
  // zeta = 1/(k-1) exactly is the boundary and must be accepted.
  const auto m = random_model(3, 2, 0.5, 0.1, -1, 1);
  CHECK(separation_report(m).min_gap >= 0.5 * (1.0 - 1e-12));
}

TEST_CASE("model distance is zero under a column permutation") {
  const auto a = random_model(3, 4, 0.2, 0.1, -1, 11);
  MixtureModel b = a;
  const std::vector<int> perm = {2, 0, 1};
  for (int j = 0; j < 3; ++j) {
    b.pi(j) = a.pi(perm[j]);
    b.M.col(j) = a.M.col(perm[j]);
  }
  const auto align = model_distance(a, b);
  CHECK(align.distance == 0.0);
  // the alignment maps a's column j to b's matching column
  for (int j = 0; j < 3; ++j) CHECK(b.pi(align.perm[j]) == a.pi(j));
}

TEST_CASE("model distance reports the max parameter error") {
  auto a = reference_model_k2();
  auto b = a;
  b.M(1, 0) += 0.03;
  const auto align = model_distance(a, b);
  CHECK(align.distance == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("model JSON round trip is exact") {
  const auto a = random_model(3, 5, 0.2, 0.1, -1, 42);
  const auto b = model_from_json(model_to_json(a));
  CHECK(a.k == b.k);
  CHECK(a.n == b.n);
  CHECK((a.pi - b.pi).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.M - b.M).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("model JSON rejects invalid weights") {
  CHECK_THROWS(model_from_json(R"({"k":2,"n":1,"pi":[0.7,0.7],"M":[[0.1,0.2]]})"));
  CHECK_THROWS(model_from_json(R"({"k":2,"n":1,"pi":[0.5,0.5],"M":[[1.5,0.2]]})"));
}

TEST_CASE("validate rejects malformed models") {
  MixtureModel m = reference_model_k2();
  m.pi(0) = 0.6;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
