#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mixident/model.hpp"
#include "mixident/subset.hpp"

namespace mixident {

// N records of n bits each, packed 64 per word, LSB first within a word.
struct Dataset {
  int n = 0;
  std::uint64_t record_count = 0;
  std::vector<std::uint64_t> words;  // record_count * words_per_record entries

  std::size_t words_per_record() const { return (static_cast<std::size_t>(n) + 63) / 64; }
  bool bit(std::uint64_t record, int i) const {
    const std::size_t w = record * words_per_record() + static_cast<std::size_t>(i) / 64;
    return words[w] >> (i % 64) & 1u;
  }
  void push_record(const std::vector<bool>& bits);
};

// Draws N iid records: hidden component by the mixing weights, then each bit
// independently by its conditional probability.  Deterministic per seed.
Dataset draw_samples(const MixtureModel& model, std::uint64_t count, std::uint64_t seed);

// Fraction of records whose bits in S are all 1.  The empty set gives 1.
double empirical_moment(const Dataset& data, const Subset& s);

// Text format: "n N" header line, then N lines of '0'/'1' characters.
// Binary format: magic "MIXB1", little-endian u32 n, u64 N, then ceil(n/8)
// bytes per record, LSB first.
void save_dataset_text(const Dataset& data, const std::string& path);
void save_dataset_binary(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);  // sniffs the format

// Optional override for the perturbed mode: returns the additive error for a
// subset.  Values are clamped to [-eps, eps]; the empty set is never moved.
using PerturbationFn = std::function<double(const Subset&)>;

// Answers multilinear moment queries.  Three modes share one interface so the
// whole pipeline is oblivious to where moments come from:
//   exact      - closed form from a known model
//   empirical  - counting frequencies in a dataset
//   perturbed  - exact plus a deterministic additive error, |delta| <= eps,
//                a pure function of (seed, S); models adversarial noise
// Queries are cached; the cache is internally synchronized so concurrent
// readers behave as if serialized.  Copies share payload and cache.
class MomentOracle {
 public:
  static MomentOracle exact(MixtureModel model);
  static MomentOracle empirical(Dataset data);
  static MomentOracle perturbed(MixtureModel model, double eps, std::uint64_t seed);
  static MomentOracle perturbed_with(MixtureModel model, double eps, PerturbationFn fn);

  double operator()(const Subset& s) const { return query(s); }
  double query(const Subset& s) const;

  // Bulk query.  Empirical mode counts every requested subset in a single
  // pass over the dataset; other modes fall back to per-subset queries.
  std::map<Subset, double> moment_table(const std::vector<Subset>& family) const;

  int ground_size() const;  // n
  bool is_empirical() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace mixident
