#include "mixident/moments.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "mixident/rng.hpp"

namespace mixident {

void Dataset::push_record(const std::vector<bool>& bits) {
  if (static_cast<int>(bits.size()) != n)
    throw std::invalid_argument("dataset: record width mismatch");
  const std::size_t base = words.size();
  words.resize(base + words_per_record(), 0);
  for (int i = 0; i < n; ++i)
    if (bits[i]) words[base + static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (i % 64);
  ++record_count;
}

Dataset draw_samples(const MixtureModel& model, std::uint64_t count, std::uint64_t seed) {
  model.validate();
  std::mt19937_64 gen(seed);
  Eigen::VectorXd cum(model.k);
  double acc = 0.0;
  for (int j = 0; j < model.k; ++j) cum(j) = acc += model.pi(j);

  Dataset data;
  data.n = model.n;
  data.record_count = count;
  const std::size_t wpr = data.words_per_record();
  data.words.assign(count * wpr, 0);
  for (std::uint64_t r = 0; r < count; ++r) {
    const double hu = uniform01(gen);
    int h = 0;
    while (h < model.k - 1 && hu >= cum(h)) ++h;
    const std::size_t base = r * wpr;
    for (int i = 0; i < model.n; ++i)
      if (uniform01(gen) < model.M(i, h))
        data.words[base + static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (i % 64);
  }
  return data;
}

namespace {

std::vector<std::uint64_t> subset_mask(const Subset& s, int n, std::size_t wpr) {
  std::vector<std::uint64_t> mask(wpr, 0);
  for (int bit : s) {
    if (bit < 0 || bit >= n) throw std::invalid_argument("moment query: bit out of range");
    mask[static_cast<std::size_t>(bit) / 64] |= std::uint64_t{1} << (bit % 64);
  }
  return mask;
}

std::uint64_t count_matching(const Dataset& data, const std::vector<std::uint64_t>& mask) {
  const std::size_t wpr = data.words_per_record();
  std::uint64_t hits = 0;
  for (std::uint64_t r = 0; r < data.record_count; ++r) {
    const std::uint64_t* rec = data.words.data() + r * wpr;
    bool all = true;
    for (std::size_t w = 0; w < wpr && all; ++w) all = (rec[w] & mask[w]) == mask[w];
    hits += all;
  }
  return hits;
}

}  // namespace

double empirical_moment(const Dataset& data, const Subset& s) {
  if (s.empty()) return 1.0;
  if (data.record_count == 0) throw std::invalid_argument("empirical_moment: empty dataset");
  const auto mask = subset_mask(s, data.n, data.words_per_record());
  return static_cast<double>(count_matching(data, mask)) /
         static_cast<double>(data.record_count);
}

void save_dataset_text(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << data.n << " " << data.record_count << "\n";
  std::string line(static_cast<std::size_t>(data.n), '0');
  for (std::uint64_t r = 0; r < data.record_count; ++r) {
    for (int i = 0; i < data.n; ++i) line[static_cast<std::size_t>(i)] = data.bit(r, i) ? '1' : '0';
    out << line << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

constexpr char kMagic[5] = {'M', 'I', 'X', 'B', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.put(static_cast<char>(value >> (8 * i) & 0xff));
}

template <typename T>
T get_le(std::istream& in) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw std::runtime_error("dataset: truncated binary header");
    value |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return value;
}

}  // namespace

void save_dataset_binary(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, 5);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.n));
  put_le<std::uint64_t>(out, data.record_count);
  const std::size_t bpr = (static_cast<std::size_t>(data.n) + 7) / 8;
  std::vector<char> buf(bpr);
  for (std::uint64_t r = 0; r < data.record_count; ++r) {
    std::fill(buf.begin(), buf.end(), 0);
    for (int i = 0; i < data.n; ++i)
      if (data.bit(r, i)) buf[static_cast<std::size_t>(i) / 8] |= char(1 << (i % 8));
    out.write(buf.data(), static_cast<std::streamsize>(bpr));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

Dataset load_dataset_binary(std::ifstream& in) {
  const int n = static_cast<int>(get_le<std::uint32_t>(in));
  const std::uint64_t count = get_le<std::uint64_t>(in);
  Dataset data;
  data.n = n;
  data.record_count = count;
  const std::size_t wpr = data.words_per_record();
  const std::size_t bpr = (static_cast<std::size_t>(n) + 7) / 8;
  data.words.assign(count * wpr, 0);
  std::vector<char> buf(bpr);
  for (std::uint64_t r = 0; r < count; ++r) {
    in.read(buf.data(), static_cast<std::streamsize>(bpr));
    if (!in) throw std::runtime_error("dataset: truncated binary records");
    for (std::size_t b = 0; b < bpr; ++b) {
      const auto byte = static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b]));
      data.words[r * wpr + b / 8] |= byte << (8 * (b % 8));
    }
  }
  return data;
}

Dataset load_dataset_text(std::ifstream& in) {
  Dataset data;
  std::uint64_t count = 0;
  if (!(in >> data.n >> count)) throw std::runtime_error("dataset: bad text header");
  std::string line;
  std::getline(in, line);
  std::vector<bool> bits(static_cast<std::size_t>(data.n));
  for (std::uint64_t r = 0; r < count; ++r) {
    if (!std::getline(in, line)) throw std::runtime_error("dataset: fewer records than header");
    if (static_cast<int>(line.size()) < data.n)
      throw std::runtime_error("dataset: short record line");
    for (int i = 0; i < data.n; ++i) {
      const char c = line[static_cast<std::size_t>(i)];
      if (c != '0' && c != '1') throw std::runtime_error("dataset: record must be 0/1");
      bits[static_cast<std::size_t>(i)] = c == '1';
    }
    data.push_record(bits);
  }
  return data;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  char magic[5] = {};
  in.read(magic, 5);
  if (in && std::memcmp(magic, kMagic, 5) == 0) return load_dataset_binary(in);
  in.clear();
  in.seekg(0);
  return load_dataset_text(in);
}

struct MomentOracle::Impl {
  enum class Mode { exact, empirical, perturbed } mode = Mode::exact;
  MixtureModel model;
  Dataset data;
  double eps = 0.0;
  std::uint64_t seed = 0;
  PerturbationFn custom;

  mutable std::mutex mu;
  mutable std::map<Subset, double> cache;

  double compute(const Subset& s) const {
    switch (mode) {
      case Mode::exact:
        return exact_moment(model, s);
      case Mode::empirical:
        return empirical_moment(data, s);
      case Mode::perturbed: {
        if (s.empty()) return 1.0;
        double delta = custom ? custom(s) : eps * (2.0 * subset_hash01(seed, s) - 1.0);
        delta = std::clamp(delta, -eps, eps);
        return std::clamp(exact_moment(model, s) + delta, 0.0, 1.0);
      }
    }
    return 0.0;
  }
};

MomentOracle MomentOracle::exact(MixtureModel model) {
  model.validate();
  MomentOracle o;
  o.impl_ = std::make_shared<Impl>();
  o.impl_->mode = Impl::Mode::exact;
  o.impl_->model = std::move(model);
  return o;
}

MomentOracle MomentOracle::empirical(Dataset data) {
  MomentOracle o;
  o.impl_ = std::make_shared<Impl>();
  o.impl_->mode = Impl::Mode::empirical;
  o.impl_->data = std::move(data);
  return o;
}

MomentOracle MomentOracle::perturbed(MixtureModel model, double eps, std::uint64_t seed) {
  model.validate();
  if (eps < 0.0) throw std::invalid_argument("perturbed oracle: eps must be >= 0");
  MomentOracle o;
  o.impl_ = std::make_shared<Impl>();
  o.impl_->mode = Impl::Mode::perturbed;
  o.impl_->model = std::move(model);
  o.impl_->eps = eps;
  o.impl_->seed = seed;
  return o;
}

MomentOracle MomentOracle::perturbed_with(MixtureModel model, double eps, PerturbationFn fn) {
  MomentOracle o = perturbed(std::move(model), eps, std::uint64_t{0});
  o.impl_->custom = std::move(fn);
  return o;
}

double MomentOracle::query(const Subset& s) const {
  if (!is_canonical(s)) throw std::invalid_argument("moment query: subset not sorted/unique");
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    const auto it = impl_->cache.find(s);
    if (it != impl_->cache.end()) return it->second;
  }
  const double value = impl_->compute(s);
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->cache.emplace(s, value).first->second;
}

std::map<Subset, double> MomentOracle::moment_table(const std::vector<Subset>& family) const {
  std::map<Subset, double> table;
  if (impl_->mode == Impl::Mode::empirical) {
    // One scan: collect masks for the subsets not already cached, then count
    // them all record by record.
    std::vector<const Subset*> todo;
    {
      std::lock_guard<std::mutex> lock(impl_->mu);
      for (const auto& s : family) {
        const auto it = impl_->cache.find(s);
        if (it != impl_->cache.end())
          table.emplace(s, it->second);
        else if (!table.count(s))
          todo.push_back(&s);
      }
    }
    std::sort(todo.begin(), todo.end(), [](auto* a, auto* b) { return *a < *b; });
    todo.erase(std::unique(todo.begin(), todo.end(), [](auto* a, auto* b) { return *a == *b; }),
               todo.end());
    if (!todo.empty()) {
      const Dataset& data = impl_->data;
      if (data.record_count == 0) throw std::invalid_argument("moment_table: empty dataset");
      const std::size_t wpr = data.words_per_record();
      std::vector<std::vector<std::uint64_t>> masks;
      masks.reserve(todo.size());
      for (auto* s : todo) masks.push_back(subset_mask(*s, data.n, wpr));
      std::vector<std::uint64_t> hits(todo.size(), 0);
      for (std::uint64_t r = 0; r < data.record_count; ++r) {
        const std::uint64_t* rec = data.words.data() + r * wpr;
        for (std::size_t m = 0; m < masks.size(); ++m) {
          bool all = true;
          for (std::size_t w = 0; w < wpr && all; ++w)
            all = (rec[w] & masks[m][w]) == masks[m][w];
          hits[m] += all;
        }
      }
      std::lock_guard<std::mutex> lock(impl_->mu);
      for (std::size_t m = 0; m < todo.size(); ++m) {
        const double value = todo[m]->empty()
                                 ? 1.0
                                 : static_cast<double>(hits[m]) /
                                       static_cast<double>(data.record_count);
        impl_->cache.emplace(*todo[m], value);
        table.emplace(*todo[m], value);
      }
    }
    return table;
  }
  for (const auto& s : family) table.emplace(s, query(s));
  return table;
}

int MomentOracle::ground_size() const {
  return impl_->mode == Impl::Mode::empirical ? impl_->data.n : impl_->model.n;
}

bool MomentOracle::is_empirical() const { return impl_->mode == Impl::Mode::empirical; }

}  // namespace mixident
