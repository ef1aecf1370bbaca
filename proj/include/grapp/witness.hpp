#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grapp/qhom.hpp"

namespace grapp {

// Exact comparison of the rational num/den against a double bound.  The bound
// is decomposed into mantissa * 2^exponent so the comparison happens in
// integer arithmetic; no rounding can flip a verdict near the threshold.
inline bool ratio_leq(std::uint64_t num, std::uint64_t den, double bound) {
  if (den == 0) throw parameter_error("ratio with zero denominator");
  if (!(bound == bound)) throw parameter_error("ratio bound is NaN");
  if (bound < 0.0) return false;
  if (bound == 0.0) return num == 0;
  if (bound >= 1.0 && num <= den) return true;
  int exp;
  double man = std::frexp(bound, &exp);         // bound = man * 2^exp, man in [0.5, 1)
  auto m53 = static_cast<unsigned __int128>(std::ldexp(man, 53));  // exact integer
  // bound = m53 * 2^(exp - 53);  num/den <= bound  <=>  num * 2^(53-exp) <= m53 * den
  int shift = 53 - exp;
  unsigned __int128 lhs = num, rhs = m53 * static_cast<unsigned __int128>(den);
  if (shift >= 0) {
    if (shift > 63 || (lhs >> 63) != 0) {
      // Guard against overflow: such tiny bounds only admit num == 0, which
      // was handled above for bound == 0; fall back to a conservative check.
      if (num == 0) return true;
      long double v = static_cast<long double>(num) / static_cast<long double>(den);
      return v <= static_cast<long double>(bound);
    }
    lhs <<= shift;
  } else {
    rhs <<= -shift;
  }
  return lhs <= rhs;
}

// Surjection onto a concrete quotient group, with a distinguished section
// that sends the image identity back to the source identity.
class QuotientMap {
 public:
  QuotientMap() = default;

  static QuotientMap make(Group source, Group image,
                          std::function<Element(const Element&)> project,
                          std::function<Element(const Element&)> lift,
                          std::string description,
                          std::optional<std::int64_t> modulus = {}) {
    if (!source.valid() || !image.valid()) throw parameter_error("quotient needs groups");
    if (!project || !lift) throw parameter_error("quotient needs project and lift");
    auto impl = std::make_shared<Impl>();
    impl->source = std::move(source);
    impl->image = std::move(image);
    impl->project = std::move(project);
    impl->lift = std::move(lift);
    impl->description = std::move(description);
    impl->modulus = modulus;
    if (!impl->source.is_identity(impl->lift(impl->image.id())))
      throw structural_error("section must send the image identity to the identity");
    return QuotientMap(std::move(impl));
  }

  const Group& source() const { return impl().source; }
  const Group& image() const { return impl().image; }
  Element apply(const Element& h) const {
    impl().source.validate(h);
    return impl().image.canonicalize(impl().project(h));
  }
  Element section(const Element& hbar) const {
    impl().image.validate(hbar);
    return impl().source.canonicalize(impl().lift(hbar));
  }
  bool in_kernel(const Element& h) const { return impl().image.is_identity(apply(h)); }
  const std::string& description() const { return impl().description; }
  std::optional<std::int64_t> modulus() const { return impl().modulus; }
  bool valid() const { return impl_ != nullptr; }

 private:
  struct Impl {
    Group source, image;
    std::function<Element(const Element&)> project;
    std::function<Element(const Element&)> lift;
    std::string description;
    std::optional<std::int64_t> modulus;
  };

  explicit QuotientMap(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  const Impl& impl() const {
    if (!impl_) throw structural_error("empty quotient handle");
    return *impl_;
  }

  std::shared_ptr<const Impl> impl_;
};

// Trivial-kernel quotient: the group mapped identically onto itself.
inline QuotientMap identity_quotient(const Group& g) {
  auto idfn = [](const Element& x) { return x; };
  return QuotientMap::make(g, g, idfn, idfn, "trivial-kernel");
}

// Componentwise reduction mod m.  Lattice sources map onto (Z/m)^d; modular
// sources need m to divide every component modulus.  The section picks the
// canonical residues in [0, m).
inline QuotientMap mod_quotient(const Group& g, std::int64_t m) {
  if (m < 1) throw parameter_error("modulus must be positive");
  std::size_t dim;
  if (g.kind() == GroupKind::Lattice) {
    dim = g.lattice_dim();
  } else if (g.kind() == GroupKind::Modular) {
    dim = g.moduli().size();
    for (auto mi : g.moduli())
      if (mi % m != 0)
        throw parameter_error("modulus must divide every component modulus");
  } else {
    throw capability_error("mod quotient needs a lattice or modular source");
  }
  Group image = Group::modular(std::vector<std::int64_t>(dim, m));
  auto project = [m](const Element& x) {
    std::vector<std::int64_t> out;
    out.reserve(x.as_lattice().size());
    for (auto c : x.as_lattice()) out.push_back((c % m + m) % m);
    return Element::lattice(std::move(out));
  };
  auto lift = [](const Element& x) { return x; };
  return QuotientMap::make(g, std::move(image), project, lift, "mod " + std::to_string(m), m);
}

// Componentwise quotient of a product group.
inline QuotientMap product_quotient(const QuotientMap& qa, const QuotientMap& qb) {
  Group source = Group::product(qa.source(), qb.source());
  Group image = Group::product(qa.image(), qb.image());
  auto project = [qa, qb](const Element& x) {
    return Element::pair(qa.apply(x.pair_first()), qb.apply(x.pair_second()));
  };
  auto lift = [qa, qb](const Element& x) {
    return Element::pair(qa.section(x.pair_first()), qb.section(x.pair_second()));
  };
  return QuotientMap::make(std::move(source), std::move(image), project, lift,
                           "(" + qa.description() + ", " + qb.description() + ")");
}

namespace detail {

// Mod-m on every lattice component, identity on finite components.
inline QuotientMap uniform_mod_quotient(const Group& g, std::int64_t m) {
  if (g.kind() == GroupKind::Lattice) return mod_quotient(g, m);
  if (g.finite()) return identity_quotient(g);
  if (g.kind() == GroupKind::Product)
    return product_quotient(uniform_mod_quotient(g.product_first(), m),
                            uniform_mod_quotient(g.product_second(), m));
  throw provider_error("no quotient provider for " + g.name());
}

inline bool quotient_separates(const QuotientMap& q, const std::vector<Element>& window) {
  const Group& img = q.image();
  std::vector<Element> images;
  images.reserve(window.size());
  for (const auto& e : window) images.push_back(q.apply(e));
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (!q.source().is_identity(window[i]) && img.is_identity(images[i])) return false;
    for (std::size_t j = i + 1; j < window.size(); ++j)
      if (img.eq(images[i], images[j])) return false;
  }
  return true;
}

inline constexpr std::int64_t kMaxSeparatingModulus = 1 << 20;

}  // namespace detail

// Finds a finite quotient that is injective on the window and whose kernel
// misses every non-identity window element.  Finite groups use the
// trivial-kernel quotient; groups with lattice parts get the smallest
// componentwise modulus that works.
inline QuotientMap separating_quotient(const Group& g, const std::vector<Element>& window) {
  std::vector<Element> w;
  w.reserve(window.size());
  for (const auto& e : window) {
    g.validate(e);
    w.push_back(g.canonicalize(e));
  }
  std::sort(w.begin(), w.end(),
            [](const Element& a, const Element& b) { return Element::compare(a, b) < 0; });
  w.erase(std::unique(w.begin(), w.end()), w.end());
  if (g.finite()) return identity_quotient(g);
  for (std::int64_t m = 1; m <= detail::kMaxSeparatingModulus; ++m) {
    QuotientMap q = detail::uniform_mod_quotient(g, m);
    if (detail::quotient_separates(q, w)) return q;
  }
  throw provider_error("no separating modulus within budget for " + g.name());
}

// Finite subset nearly invariant under the listed translations, with the
// worst relative loss |A t \ A| / |A| kept as an exact rational.
struct FolnerSet {
  std::vector<Element> members;  // canonical, sorted
  std::vector<Element> translations;
  std::uint64_t worst_loss = 0;
  Element worst_translation;
  std::optional<std::int64_t> box_radius;
  std::string description;

  std::uint64_t size() const { return members.size(); }
  bool loss_within(double eps) const { return ratio_leq(worst_loss, size(), eps); }
};

namespace detail {

inline std::uint64_t translation_loss(const Group& g, const std::vector<Element>& sorted_members,
                                      const Element& t) {
  std::uint64_t loss = 0;
  for (const auto& a : sorted_members) {
    Element at = g.mul(a, t);
    if (!std::binary_search(sorted_members.begin(), sorted_members.end(), at,
                            [](const Element& x, const Element& y) {
                              return Element::compare(x, y) < 0;
                            }))
      ++loss;
  }
  return loss;
}

inline FolnerSet finish_folner(const Group& g, std::vector<Element> members,
                               std::vector<Element> translations,
                               std::optional<std::int64_t> radius, std::string description) {
  std::sort(members.begin(), members.end(),
            [](const Element& a, const Element& b) { return Element::compare(a, b) < 0; });
  members.erase(std::unique(members.begin(), members.end()), members.end());
  FolnerSet f;
  f.worst_translation = g.id();
  for (const auto& t : translations) {
    std::uint64_t loss = translation_loss(g, members, t);
    if (loss > f.worst_loss || !f.worst_translation.valid()) {
      f.worst_loss = loss;
      f.worst_translation = t;
    }
  }
  f.members = std::move(members);
  f.translations = std::move(translations);
  f.box_radius = radius;
  f.description = std::move(description);
  return f;
}

inline std::vector<Element> lattice_box(std::uint32_t dim, std::int64_t m) {
  std::vector<Element> out;
  std::vector<std::int64_t> cur(dim, -m);
  for (;;) {
    out.push_back(Element::lattice(cur));
    std::size_t i = 0;
    while (i < dim && ++cur[i] > m) cur[i++] = -m;
    if (i == dim) break;
  }
  return out;
}

inline constexpr std::uint64_t kMaxFolnerSize = 2'000'000;

}  // namespace detail

// Centered box [-m, m]^d in a lattice group, losses computed directly.
inline FolnerSet folner_box(const Group& g, std::int64_t m, std::vector<Element> translations) {
  if (g.kind() != GroupKind::Lattice) throw capability_error("box needs a lattice group");
  if (m < 0) throw parameter_error("box radius must be non-negative");
  for (auto& t : translations) g.validate(t);
  std::uint64_t side = static_cast<std::uint64_t>(2 * m + 1);
  std::uint64_t cells = 1;
  for (std::uint32_t i = 0; i < g.lattice_dim(); ++i)
    cells = detail::checked_mul_u64(cells, side);
  if (cells > detail::kMaxFolnerSize) throw provider_error("box exceeds the size budget");
  return detail::finish_folner(g, detail::lattice_box(g.lattice_dim(), m),
                               std::move(translations), m,
                               "box [-" + std::to_string(m) + "," + std::to_string(m) + "]^" +
                                   std::to_string(g.lattice_dim()));
}

// Smallest witness meeting the loss target: the whole group when it is
// finite (losses vanish), otherwise the smallest centered box that works.
inline FolnerSet folner_set(const Group& g, std::vector<Element> translations, double eps) {
  if (!(eps >= 0.0)) throw parameter_error("loss target must be non-negative");
  for (auto& t : translations) {
    g.validate(t);
    t = g.canonicalize(t);
  }
  if (g.finite()) {
    if (g.order() > detail::kMaxFolnerSize)
      throw provider_error("group too large to enumerate for a whole-group witness");
    FolnerSet f = detail::finish_folner(g, g.elements(), std::move(translations), {},
                                        "whole group");
    return f;  // translation by a group element permutes the group: loss 0
  }
  if (g.kind() == GroupKind::Lattice) {
    for (std::int64_t m = 0;; ++m) {
      std::uint64_t side = static_cast<std::uint64_t>(2 * m + 1);
      std::uint64_t cells = 1;
      for (std::uint32_t i = 0; i < g.lattice_dim(); ++i)
        cells = detail::checked_mul_u64(cells, side);
      if (cells > detail::kMaxFolnerSize)
        throw provider_error("no box within the size budget meets the loss target");
      FolnerSet f = folner_box(g, m, translations);
      if (f.loss_within(eps)) return f;
    }
  }
  throw provider_error("no witness provider for " + g.name());
}

}  // namespace grapp
