#pragma once

// Reference implementations used to cross-check library results.  Everything
// here is deliberately written from scratch with the dumbest algorithm that
// works, independent of the code under test.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace oracle {

// Right-action composition: (ab)[x] = b[a[x]].
inline std::vector<std::uint32_t> pcompose(const std::vector<std::uint32_t>& a,
                                           const std::vector<std::uint32_t>& b) {
  std::vector<std::uint32_t> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = b[a[i]];
  return r;
}

inline std::vector<std::uint32_t> pinverse(const std::vector<std::uint32_t>& a) {
  std::vector<std::uint32_t> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[a[i]] = static_cast<std::uint32_t>(i);
  return r;
}

inline std::vector<std::uint32_t> pidentity(std::size_t n) {
  std::vector<std::uint32_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<std::uint32_t>(i);
  return r;
}

inline double hamming_proportion(const std::vector<std::uint32_t>& a) {
  std::size_t moved = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != i) ++moved;
  return static_cast<double>(moved) / static_cast<double>(a.size());
}

// Intersection size of the box [-m,m]^d with its translate by -t.
inline std::uint64_t box_overlap(std::int64_t m, const std::vector<std::int64_t>& t) {
  std::uint64_t r = 1;
  for (std::int64_t c : t) {
    std::int64_t span = 2 * m + 1 - (c < 0 ? -c : c);
    if (span <= 0) return 0;
    r *= static_cast<std::uint64_t>(span);
  }
  return r;
}

inline std::uint64_t box_loss(std::int64_t m, const std::vector<std::int64_t>& t) {
  std::uint64_t cells = 1;
  for (std::size_t i = 0; i < t.size(); ++i) cells *= static_cast<std::uint64_t>(2 * m + 1);
  return cells - box_overlap(m, t);
}

// Smallest modulus giving the listed integers pairwise distinct residues.
inline std::int64_t min_separating_modulus(const std::vector<std::int64_t>& values) {
  for (std::int64_t m = 1;; ++m) {
    bool ok = true;
    for (std::size_t i = 0; i < values.size() && ok; ++i)
      for (std::size_t j = i + 1; j < values.size() && ok; ++j)
        if (((values[i] - values[j]) % m + m) % m == 0) ok = false;
    if (ok) return m;
  }
}

inline bool modulus_separates(std::int64_t m, const std::vector<std::int64_t>& values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if (((values[i] - values[j]) % m + m) % m == 0) return false;
  return true;
}

// Three-sigma band for a proportion estimated from n Bernoulli samples.
inline double three_sigma(double p, std::uint64_t n) {
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// Dense model of a finitely supported function with values in a group given
// by index arithmetic; used to cross-check sparse wreath multiplication.
// Keys are top-group element indices, values bottom-group element indices.
struct DenseBase {
  std::vector<std::uint32_t> values;  // one per top element, identity = 0
};

}  // namespace oracle
