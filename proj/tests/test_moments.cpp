#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "mixident/moments.hpp"

using namespace mixident;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("exact oracle equals the closed-form moments") {
  const auto m = reference_model_k2();
  const auto oracle = MomentOracle::exact(m);
  CHECK(oracle({}) == 1.0);
  CHECK(oracle({0}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(oracle({0, 1}) == doctest::Approx(0.28).epsilon(1e-14));
  CHECK(oracle({0, 1}) == doctest::Approx(brute_force_moment(m, {0, 1})).epsilon(1e-14));
}

TEST_CASE("sampling is deterministic per seed and respects marginals") {
  const auto m = reference_model_k2();
  const auto a = draw_samples(m, 5000, 9);
  const auto b = draw_samples(m, 5000, 9);
  CHECK(a.words == b.words);
  const auto c = draw_samples(m, 5000, 10);
  CHECK(a.words != c.words);
  // marginal of bit 0 is 0.5; a crude 5-sigma band
  const double p = empirical_moment(a, {0});
  CHECK(std::abs(p - 0.5) < 5.0 * std::sqrt(0.25 / 5000.0));
}

TEST_CASE("empirical moments converge at the root-N rate") {
  // Median absolute error over 30 seeds, halving N four times: the
  // per-doubling shrink factor should sit near sqrt(2).
  const auto m = reference_model_k2();
  const double truth = exact_moment(m, {0, 1});
  std::vector<double> medians;
  for (std::uint64_t n : {16000u, 32000u, 64000u, 128000u, 256000u}) {
    std::vector<double> errs;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const auto data = draw_samples(m, n, seed * 77);
      errs.push_back(std::abs(empirical_moment(data, {0, 1}) - truth));
    }
    std::sort(errs.begin(), errs.end());
    medians.push_back(errs[errs.size() / 2]);
  }
  const double factor = std::pow(medians.front() / medians.back(), 1.0 / 4.0);
  CHECK(factor >= 1.2);
  CHECK(factor <= 1.7);
}

TEST_CASE("perturbed oracle: empty set untouched, bound honored, deterministic") {
  const auto m = reference_model_k2();
  const double eps = 1e-3;
  const auto oracle = MomentOracle::perturbed(m, eps, 4242);
  CHECK(oracle({}) == 1.0);
  const auto subsets = power_set({0, 1});
  for (const auto& s : subsets) {
    const double delta = oracle(s) - exact_moment(m, s);
    CHECK(std::abs(delta) <= eps + 1e-15);
  }
  // repeated queries and a fresh oracle with the same seed agree exactly
  const auto again = MomentOracle::perturbed(m, eps, 4242);
  CHECK(oracle({0, 1}) == again({0, 1}));
  const auto other = MomentOracle::perturbed(m, eps, 4243);
  CHECK(oracle({0, 1}) != other({0, 1}));
}

TEST_CASE("perturbed oracle clamps into [0,1]") {
  MixtureModel m = reference_model_k2();
  m.M << 1.0, 1.0, 1.0, 1.0;  // every moment is exactly 1
  const auto oracle = MomentOracle::perturbed(m, 0.5, 1);
  for (const auto& s : power_set({0, 1})) CHECK(oracle(s) <= 1.0);
}

TEST_CASE("perturbed oracle accepts a caller-supplied error and clamps it") {
  const auto m = reference_model_k2();
  const auto oracle = MomentOracle::perturbed_with(m, 1e-4, [](const Subset&) { return 1.0; });
  CHECK(oracle({}) == 1.0);
  CHECK(oracle({0}) == doctest::Approx(0.5 + 1e-4).epsilon(1e-12));
}

TEST_CASE("moment table covers a family and matches single queries") {
  const auto m = reference_model_k2();
  const auto data = draw_samples(m, 20000, 3);
  const auto oracle = MomentOracle::empirical(data);
  const auto family = power_set({0, 1});
  const auto table = oracle.moment_table(family);
  CHECK(table.size() == family.size());
  for (const auto& s : family) CHECK(table.at(s) == oracle(s));
  CHECK(table.at({}) == 1.0);
}

TEST_CASE("empirical oracle equals direct counting") {
  const auto m = reference_model_k2();
  const auto data = draw_samples(m, 1000, 5);
  const auto oracle = MomentOracle::empirical(data);
  std::uint64_t hits = 0;
  for (std::uint64_t r = 0; r < data.record_count; ++r)
    hits += data.bit(r, 0) && data.bit(r, 1);
  CHECK(oracle({0, 1}) == doctest::Approx(hits / 1000.0).epsilon(1e-15));
}

TEST_CASE("dataset text round trip") {
  const auto m = reference_model_k2();
  const auto data = draw_samples(m, 137, 21);
  TempFile f("mixident_test_data.txt");
  save_dataset_text(data, f.path);
  const auto back = load_dataset(f.path);
  CHECK(back.n == data.n);
  CHECK(back.record_count == data.record_count);
  CHECK(back.words == data.words);
}

TEST_CASE("dataset binary round trip across odd widths") {
  for (int n : {1, 7, 8, 9, 63, 64, 65}) {
    const auto m = random_model(2, n, 0.3, 0.2, -1, 31);
    const auto data = draw_samples(m, 41, 13);
    TempFile f("mixident_test_data.bin");
    save_dataset_binary(data, f.path);
    const auto back = load_dataset(f.path);
    CHECK(back.n == data.n);
    CHECK(back.record_count == data.record_count);
    CHECK(back.words == data.words);
  }
}

TEST_CASE("oracle rejects non-canonical subsets and out-of-range bits") {
  const auto oracle = MomentOracle::exact(reference_model_k2());
  CHECK_THROWS_AS(oracle(Subset{1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(oracle(Subset{0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(oracle(Subset{5}), std::invalid_argument);
}
