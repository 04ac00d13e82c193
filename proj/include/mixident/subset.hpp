#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace mixident {

// A subset of observable bit indices, kept sorted ascending with no duplicates.
// The empty vector is the empty set.
using Subset = std::vector<int>;

inline Subset make_subset(std::initializer_list<int> bits) {
  Subset s(bits);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline bool is_canonical(const Subset& s) {
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i - 1] >= s[i]) return false;
  return true;
}

inline Subset subset_union(const Subset& a, const Subset& b) {
  Subset out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool subsets_disjoint(const Subset& a, const Subset& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib)
      ++ia;
    else if (*ib < *ia)
      ++ib;
    else
      return false;
  }
  return true;
}

inline bool subset_contains(const Subset& s, int bit) {
  return std::binary_search(s.begin(), s.end(), bit);
}

// All subsets of `ground`, ordered by the binary counter over ground positions:
// index r yields { ground[i] : bit i of r set }.  Index 0 is the empty set.
inline std::vector<Subset> power_set(const std::vector<int>& ground) {
  const std::size_t m = ground.size();
  std::vector<Subset> out;
  out.reserve(std::size_t{1} << m);
  for (std::uint64_t r = 0; r < (std::uint64_t{1} << m); ++r) {
    Subset s;
    for (std::size_t i = 0; i < m; ++i)
      if (r >> i & 1u) s.push_back(ground[i]);
    std::sort(s.begin(), s.end());
    out.push_back(std::move(s));
  }
  return out;
}

inline std::string subset_to_string(const Subset& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "}";
}

}  // namespace mixident
