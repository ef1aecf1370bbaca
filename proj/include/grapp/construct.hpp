#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grapp/witness.hpp"

namespace grapp {

namespace detail {

inline void push_sorted_unique(std::vector<Element>& v, Element e) {
  auto it = std::lower_bound(v.begin(), v.end(), e, [](const Element& a, const Element& b) {
    return Element::compare(a, b) < 0;
  });
  if (it == v.end() || *it != e) v.insert(it, std::move(e));
}

inline std::size_t index_of(const std::vector<Element>& sorted, const Element& e) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), e,
                             [](const Element& a, const Element& b) {
                               return Element::compare(a, b) < 0;
                             });
  if (it == sorted.end() || *it != e) throw structural_error("element not in the indexed set");
  return static_cast<std::size_t>(it - sorted.begin());
}

inline bool contains(const std::vector<Element>& sorted, const Element& e) {
  return std::binary_search(sorted.begin(), sorted.end(), e,
                            [](const Element& a, const Element& b) {
                              return Element::compare(a, b) < 0;
                            });
}

}  // namespace detail

// Top-group elements that matter when multiplying window elements of a wreath
// product: the heads, the base supports, and the supports translated by the
// heads.  The identity is always included.
inline std::vector<Element> essential_top_set(const Group& w, const std::vector<Element>& window) {
  if (w.kind() != GroupKind::Wreath) throw capability_error("needs a wreath group");
  const Group& top = w.wreath_top();
  std::vector<Element> heads, out;
  detail::push_sorted_unique(out, top.id());
  for (const auto& x : window) {
    w.validate(x);
    detail::push_sorted_unique(heads, top.canonicalize(x.wreath_head()));
    detail::push_sorted_unique(out, top.canonicalize(x.wreath_head()));
    for (const auto& [k, v] : x.wreath_base()) detail::push_sorted_unique(out, k);
  }
  for (const auto& x : window)
    for (const auto& [k, v] : x.wreath_base())
      for (const auto& h : heads) detail::push_sorted_unique(out, top.mul(k, h));
  return out;
}

// Bottom-group values appearing in window bases, together with the identity.
inline std::vector<Element> essential_base_values(const Group& w,
                                                  const std::vector<Element>& window) {
  if (w.kind() != GroupKind::Wreath) throw capability_error("needs a wreath group");
  std::vector<Element> out;
  detail::push_sorted_unique(out, w.wreath_bottom().id());
  for (const auto& x : window) {
    w.validate(x);
    for (const auto& [k, v] : x.wreath_base()) detail::push_sorted_unique(out, v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// direct products

// Componentwise map into the product target carrying the p-combined length.
// The defect of the pair map never exceeds the larger input defect, so the
// output keeps epsilon = max of the inputs; weights combine by the same
// p-formula (treating the identity component as zero).
inline ApproxMap build_direct_product(const ApproxMap& mg, const ApproxMap& mh, Exponent p) {
  if (!mg.valid() || !mh.valid()) throw parameter_error("need two input maps");
  if (!mg.weight().valid() || !mh.weight().valid())
    throw parameter_error("input maps must carry weight profiles");
  Group source = Group::product(mg.source(), mh.source());
  LengthFunction len = lp_combine(mg.target_length(), mh.target_length(), p);
  std::vector<std::pair<Element, Element>> assignments;
  assignments.reserve(mg.assignments().size() * mh.assignments().size());
  for (const auto& [g, jg] : mg.assignments())
    for (const auto& [h, kh] : mh.assignments())
      assignments.emplace_back(Element::pair(g, h), Element::pair(jg, kh));
  std::vector<Element> window;
  window.reserve(mg.window().size() * mh.window().size());
  for (const auto& g : mg.window())
    for (const auto& h : mh.window()) window.push_back(Element::pair(g, h));
  Group gsrc = mg.source(), hsrc = mh.source();
  WeightFunction wg = mg.weight(), wh = mh.weight();
  auto weight = WeightFunction::custom(
      [gsrc, hsrc, wg, wh, p](const Element& x) {
        double a = gsrc.is_identity(x.pair_first()) ? 0.0 : wg(x.pair_first());
        double b = hsrc.is_identity(x.pair_second()) ? 0.0 : wh(x.pair_second());
        if (p.is_infinite()) return std::max(a, b);
        return std::pow((std::pow(a, p.p) + std::pow(b, p.p)) / 2.0, 1.0 / p.p);
      },
      "p-combined(" + wg.name() + "," + wh.name() + ")");
  return ApproxMap::create(std::move(source), len.domain(), len, std::move(assignments),
                           std::move(window), std::max(mg.epsilon(), mh.epsilon()),
                           std::move(weight));
}

// ---------------------------------------------------------------------------
// wreath products over a separating finite quotient

struct WreathScenario {
  Group source;                     // G wr H
  Group target;                     // J wr (H/N)
  QuotientMap quotient;             // H -> H/N, injective on the top window
  std::vector<Element> top_window;  // heads, supports, translated supports
  std::vector<Element> base_values; // bottom values seen in window bases
  ApproxMap map;
  std::vector<std::string> notes;
};

namespace detail {

// Uses the supplied quotient after checking it separates the window, or finds
// a minimal one.  Rejections name the colliding pair.
inline QuotientMap choose_separating_quotient(const Group& top, const std::vector<Element>& window,
                                              const std::optional<QuotientMap>& supplied) {
  if (!supplied) return separating_quotient(top, window);
  if (supplied->source() != top) throw domain_error("quotient lives on a different top group");
  for (std::size_t i = 0; i < window.size(); ++i)
    for (std::size_t j = i + 1; j < window.size(); ++j)
      if (supplied->image().eq(supplied->apply(window[i]), supplied->apply(window[j])))
        throw parameter_error("quotient fails to separate " + window[i].describe() + " and " +
                              window[j].describe());
  return *supplied;
}

// psi(h b) = (hbar, bhat) with bhat living on cosets: the value at a coset is
// phi of the base value at its unique top-window representative.
inline Element induced_wreath_image(const Group& target, const ApproxMap& phi,
                                    const QuotientMap& q, const Element& x) {
  std::vector<std::pair<Element, Element>> base;
  base.reserve(x.wreath_base().size());
  for (const auto& [k, v] : x.wreath_base()) base.emplace_back(q.apply(k), phi.apply(v));
  return target.make_wreath(q.apply(x.wreath_head()), base);
}

}  // namespace detail

// Turns a map on the bottom group into a map on the whole wreath product,
// collapsing the top group through a quotient that separates the essential
// top set.  Heads map to their cosets; base functions push forward
// coset-by-coset.  The defect bound carries over unchanged, and the weight of
// a head-trivial element is the largest input weight over its base support.
inline WreathScenario build_wreath(const ApproxMap& phi, const Group& w,
                                   const std::vector<Element>& window,
                                   std::optional<QuotientMap> quotient = {}) {
  if (w.kind() != GroupKind::Wreath) throw capability_error("needs a wreath group");
  if (phi.source() != w.wreath_bottom())
    throw domain_error("input map must live on the wreath bottom group");
  if (!phi.weight().valid()) throw parameter_error("input map must carry a weight profile");
  const Group& top = w.wreath_top();
  std::vector<Element> f;
  for (const auto& x : window) {
    w.validate(x);
    detail::push_sorted_unique(f, w.canonicalize(x));
  }
  WreathScenario sc;
  sc.source = w;
  sc.top_window = essential_top_set(w, f);
  sc.base_values = essential_base_values(w, f);
  sc.quotient = detail::choose_separating_quotient(top, sc.top_window, quotient);
  sc.target = Group::wreath(phi.target(), sc.quotient.image());
  LengthFunction len = wreath_max_length(sc.target, phi.target_length());

  std::vector<Element> keys = f;
  for (const auto& x : f)
    for (const auto& y : f) detail::push_sorted_unique(keys, w.mul(x, y));
  std::vector<std::pair<Element, Element>> assignments;
  assignments.reserve(keys.size());
  for (const auto& x : keys)
    assignments.emplace_back(x, detail::induced_wreath_image(sc.target, phi, sc.quotient, x));

  Group bottom = w.wreath_bottom();
  WeightFunction delta = phi.weight();
  auto weight = WeightFunction::custom(
      [top, bottom, delta](const Element& x) {
        if (!top.is_identity(x.wreath_head())) return 1.0;
        double m = 0.0;
        for (const auto& [k, v] : x.wreath_base()) m = std::max(m, delta(v));
        return m;
      },
      "head-or-support(" + delta.name() + ")");
  sc.map = ApproxMap::create(w, sc.target, len, std::move(assignments), f, phi.epsilon(),
                             std::move(weight));
  sc.notes.push_back("top window size " + std::to_string(sc.top_window.size()));
  sc.notes.push_back("quotient: " + sc.quotient.description());
  sc.notes.push_back("base values " + std::to_string(sc.base_values.size()));
  return sc;
}

// ---------------------------------------------------------------------------
// wreath products acting on coset-indexed tuples

struct SoficWreathScenario {
  Group source;                      // G wr H
  QuotientMap quotient;              // H -> H/N
  std::vector<Element> top_window;   // E
  std::vector<Element> base_values;  // D
  QuasiAction action;                // of G wr H on X^(H/N)
  std::uint64_t x_points = 0;        // |X|
  std::uint64_t cosets = 0;          // |H/N|
  double fixed_point_bound = 0.0;    // |X|^(-|H/N|/2)
  std::vector<std::string> notes;
};

// Lifts an approximate action of the bottom group on X to an approximate
// action of the wreath product on functions H/N -> X: the head permutes
// coordinates through the quotient, and each coordinate is twisted by the
// bottom action of the base value at the coset's top-window representative.
// The input must be fine enough that |H/N| times its defect stays within
// epsilon, and X large enough that head-moved elements fix almost nothing.
inline SoficWreathScenario build_sofic_wreath(const QuasiAction& qa, const Group& w,
                                              const std::vector<Element>& window, double epsilon,
                                              std::optional<QuotientMap> quotient = {}) {
  if (w.kind() != GroupKind::Wreath) throw capability_error("needs a wreath group");
  if (qa.source() != w.wreath_bottom())
    throw domain_error("input action must live on the wreath bottom group");
  if (!(epsilon > 0.0)) throw parameter_error("epsilon must be positive");
  std::vector<Element> f;
  for (const auto& x : window) {
    w.validate(x);
    detail::push_sorted_unique(f, w.canonicalize(x));
  }
  SoficWreathScenario sc;
  sc.source = w;
  sc.top_window = essential_top_set(w, f);
  sc.base_values = essential_base_values(w, f);
  sc.quotient = detail::choose_separating_quotient(w.wreath_top(), sc.top_window, quotient);
  Group img = sc.quotient.image();
  if (!img.finite()) throw capability_error("need a finite quotient of the top group");
  std::vector<Element> cosets = img.elements();
  std::sort(cosets.begin(), cosets.end(),
            [](const Element& a, const Element& b) { return Element::compare(a, b) < 0; });
  const std::uint64_t m = cosets.size();
  const std::uint64_t x = qa.points();
  sc.x_points = x;
  sc.cosets = m;
  sc.fixed_point_bound = std::pow(static_cast<double>(x), -static_cast<double>(m) / 2.0);
  if (qa.epsilon() * static_cast<double>(m) > epsilon)
    throw parameter_error("input action defect too large: need defect <= epsilon / cosets");
  if (!(sc.fixed_point_bound < epsilon))
    throw parameter_error("point set too small: |X|^(-cosets/2) must stay below epsilon");

  std::uint64_t y = 1;
  for (std::uint64_t i = 0; i < m; ++i) y = detail::checked_mul_u64(y, x);
  std::vector<std::uint64_t> pow_x(m + 1, 1);
  for (std::uint64_t i = 0; i < m; ++i) pow_x[i + 1] = pow_x[i] * x;

  // Coset representative inside the top window, when there is one.
  std::vector<std::optional<Element>> rep(m);
  for (const auto& k : sc.top_window) {
    std::size_t i = detail::index_of(cosets, sc.quotient.apply(k));
    if (rep[i]) throw structural_error("quotient fails to separate the top window");
    rep[i] = k;
  }

  Group bottom = w.wreath_bottom();
  QuotientMap q = sc.quotient;
  QuasiAction base_action = qa;
  auto act = [w, img, cosets, rep, pow_x, x, m, bottom, q, base_action](
                 const Element& wel, std::uint64_t p) -> std::uint64_t {
    Element hbar_inv = img.inv(q.apply(wel.wreath_head()));
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i < m; ++i) {
      std::size_t src = detail::index_of(cosets, img.mul(cosets[i], hbar_inv));
      std::uint64_t digit = (p / pow_x[src]) % x;
      Element twist = rep[i] ? w.base_value(wel, *rep[i]) : bottom.id();
      out += base_action.act(twist, digit) * pow_x[i];
    }
    return out;
  };
  sc.action = QuasiAction::closure(w, y, std::move(act), f, epsilon);
  sc.notes.push_back("coset count " + std::to_string(m));
  sc.notes.push_back("point set size |X|^cosets = " + std::to_string(y));
  sc.notes.push_back("head-moved fixed-point bound " + std::to_string(sc.fixed_point_bound));
  return sc;
}

// ---------------------------------------------------------------------------
// amenable-by-approximable extensions

enum class CompletionOrder { Ascending, Descending };

struct AmenableScenario {
  Group source;                       // G
  QuotientMap quotient;               // G -> G/N
  FolnerSet folner;                   // on G/N
  std::vector<Element> section_set;   // A: sections of the Folner members
  std::vector<Element> kernel_window; // N intersected with A F A^-1
  ApproxMap map;                      // into K wr Sym(A)
  double input_epsilon = 0.0;
  double weight_constant = 0.0;
  std::vector<std::string> notes;
};

namespace detail {

inline std::vector<std::uint32_t> complete_partial_permutation(
    std::vector<std::optional<std::uint32_t>> part, CompletionOrder order) {
  const std::uint32_t n = static_cast<std::uint32_t>(part.size());
  std::vector<bool> used(n, false);
  for (const auto& v : part)
    if (v) used[*v] = true;
  std::vector<std::uint32_t> free_targets;
  for (std::uint32_t j = 0; j < n; ++j)
    if (!used[j]) free_targets.push_back(j);
  if (order == CompletionOrder::Descending)
    std::reverse(free_targets.begin(), free_targets.end());
  std::vector<std::uint32_t> out(n);
  std::size_t next = 0;
  for (std::uint32_t i = 0; i < n; ++i)
    out[i] = part[i] ? *part[i] : free_targets[next++];
  return out;
}

struct AmenableParts {
  Group g;
  Group img;
  std::vector<Element> f;       // window, canonical sorted
  std::vector<Element> big_f;   // window plus pairwise products
  FolnerSet folner;
  std::vector<Element> abar;    // Folner members (sorted)
  std::vector<Element> a;       // sections, indexed like abar
  std::vector<Element> kernel_window;
  double c = 0.0;               // weight constant for the output
};

inline AmenableParts amenable_common(const ApproxMap& psi, const QuotientMap& q,
                                     const std::vector<Element>& window, double eps,
                                     const std::optional<FolnerSet>& folner_opt) {
  if (!psi.valid() || !q.valid()) throw parameter_error("need a kernel map and a quotient");
  if (psi.source() != q.source())
    throw domain_error("kernel map must live on the quotient source group");
  if (!(eps > 0.0)) throw parameter_error("epsilon must be positive");
  AmenableParts parts;
  parts.g = q.source();
  parts.img = q.image();
  for (const auto& x : window) {
    parts.g.validate(x);
    push_sorted_unique(parts.f, parts.g.canonicalize(x));
  }
  if (parts.f.empty()) throw parameter_error("window must be non-empty");
  parts.big_f = parts.f;
  for (const auto& x : parts.f)
    for (const auto& y : parts.f) push_sorted_unique(parts.big_f, parts.g.mul(x, y));
  std::vector<Element> translations;
  for (const auto& x : parts.big_f) {
    Element t = q.apply(x);
    if (parts.img.is_identity(t)) continue;
    push_sorted_unique(translations, t);
    push_sorted_unique(translations, parts.img.inv(t));
  }
  if (folner_opt) {
    // Recompute losses against the translations this window actually needs.
    FolnerSet f = finish_folner(parts.img, folner_opt->members, translations,
                                folner_opt->box_radius, folner_opt->description);
    if (!f.loss_within(eps))
      throw parameter_error("supplied witness set misses the loss target: translation " +
                            f.worst_translation.describe() + " loses " +
                            std::to_string(f.worst_loss) + " of " + std::to_string(f.size()) +
                            " members");
    parts.folner = std::move(f);
  } else {
    parts.folner = folner_set(parts.img, translations, eps);
  }
  parts.abar = parts.folner.members;
  parts.a.reserve(parts.abar.size());
  for (const auto& ab : parts.abar) parts.a.push_back(q.section(ab));

  const std::uint64_t combos =
      parts.a.size() * parts.a.size() * std::max<std::uint64_t>(parts.f.size(), 1);
  if (combos > 20'000'000) throw provider_error("kernel window enumeration over budget");
  for (const auto& ai : parts.a)
    for (const auto& x : parts.f)
      for (const auto& aj : parts.a) {
        Element u = parts.g.mul(parts.g.mul(ai, x), parts.g.inv(aj));
        if (q.in_kernel(u)) push_sorted_unique(parts.kernel_window, parts.g.canonicalize(u));
      }
  bool trivial_kernel_window =
      parts.kernel_window.empty() ||
      (parts.kernel_window.size() == 1 && parts.g.is_identity(parts.kernel_window.front()));
  if (trivial_kernel_window) {
    parts.c = 0.5;
  } else {
    if (!psi.weight().valid() || !psi.weight().is_constant())
      throw parameter_error("kernel map needs a constant weight profile");
    parts.c = psi.weight().constant_value();
  }
  if (!(eps < std::min(0.5, 1.0 - parts.c)))
    throw parameter_error("epsilon must stay below min(1/2, 1 - weight constant)");
  return parts;
}

// w(a, g) = section(q(a g^-1)) g a^-1, always in the kernel.
inline Element kernel_argument(const Group& g, const QuotientMap& q, const Group& img,
                               const Element& abar_i, const Element& a_i, const Element& x,
                               const Element& xbar) {
  Element sec = q.section(img.mul(abar_i, img.inv(xbar)));
  return g.mul(g.mul(sec, x), g.inv(a_i));
}

}  // namespace detail

// Extends a map defined on the kernel of an amenable quotient to the whole
// group.  Heads approximately permute a near-invariant finite window of the
// quotient (partial translation completed to a permutation); base values read
// the kernel map at section-conjugated arguments.  Target length averages the
// bottom length over the window, and the measured defect stays below five
// times the input tolerance.
inline AmenableScenario build_amenable_extension(
    const ApproxMap& psi, const QuotientMap& q, const std::vector<Element>& window, double eps,
    CompletionOrder order = CompletionOrder::Ascending,
    std::optional<FolnerSet> folner_opt = {}) {
  auto parts = detail::amenable_common(psi, q, window, eps, folner_opt);
  const Group& g = parts.g;
  const Group& img = parts.img;
  const std::uint32_t n = static_cast<std::uint32_t>(parts.a.size());
  Group target = Group::perm_wreath(psi.target(), n);
  LengthFunction len = wreath_avg_length(target, psi.target_length());

  std::vector<std::pair<Element, Element>> assignments;
  assignments.reserve(parts.big_f.size());
  for (const auto& x : parts.big_f) {
    Element xbar = q.apply(x);
    std::vector<std::optional<std::uint32_t>> part(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      Element moved = img.mul(parts.abar[i], xbar);
      if (detail::contains(parts.abar, moved))
        part[i] = static_cast<std::uint32_t>(detail::index_of(parts.abar, moved));
    }
    std::vector<std::uint32_t> head = detail::complete_partial_permutation(std::move(part), order);
    std::vector<std::pair<std::uint32_t, Element>> base;
    for (std::uint32_t i = 0; i < n; ++i) {
      Element u = detail::kernel_argument(g, q, img, parts.abar[i], parts.a[i], x, xbar);
      base.emplace_back(i, psi.apply(u));
    }
    assignments.emplace_back(x, target.make_perm_wreath(std::move(head), base));
  }

  AmenableScenario sc;
  sc.source = g;
  sc.quotient = q;
  sc.folner = parts.folner;
  sc.section_set = parts.a;
  sc.kernel_window = parts.kernel_window;
  sc.input_epsilon = eps;
  sc.weight_constant = parts.c;
  sc.map = ApproxMap::create(g, target, len, std::move(assignments), parts.f, 5.0 * eps,
                             WeightFunction::constant(parts.c));
  sc.notes.push_back("witness: " + parts.folner.description + ", size " +
                     std::to_string(parts.folner.size()));
  sc.notes.push_back("kernel window size " + std::to_string(parts.kernel_window.size()));
  sc.notes.push_back(order == CompletionOrder::Ascending ? "completion: ascending"
                                                         : "completion: descending");
  return sc;
}

// Projection of a product group onto one factor; the other factor is the
// kernel and the section re-inserts its identity.
inline QuotientMap projection_quotient(const Group& g, bool onto_second = true) {
  if (g.kind() != GroupKind::Product) throw capability_error("needs a product group");
  Group first = g.product_first(), second = g.product_second();
  if (onto_second) {
    auto project = [](const Element& x) { return x.pair_second(); };
    auto lift = [first](const Element& b) { return Element::pair(first.id(), b); };
    return QuotientMap::make(g, second, project, lift, "projection onto second factor");
  }
  auto project = [](const Element& x) { return x.pair_first(); };
  auto lift = [second](const Element& a) { return Element::pair(a, second.id()); };
  return QuotientMap::make(g, first, project, lift, "projection onto first factor");
}

// Variant with an exactly multiplicative head: when the quotient is the
// integers, replace the completed partial translation by reduction mod the
// window's cyclic order, a genuine homomorphism into the cyclic rotations.
// With a max target length the result stays commutator-contractive whenever
// the bottom length is.  The defect matches the input tolerance when the base
// reads are coordinate-independent (split extensions); wrapped coordinates
// can exceed it otherwise.
inline AmenableScenario build_amenable_extension_mod_shift(
    const ApproxMap& psi, const QuotientMap& q, const std::vector<Element>& window, double eps,
    std::optional<FolnerSet> folner_opt = {}) {
  if (q.image().kind() != GroupKind::Lattice || q.image().lattice_dim() != 1)
    throw capability_error("shift variant needs an integer quotient");
  auto parts = detail::amenable_common(psi, q, window, eps, folner_opt);
  if (!parts.folner.box_radius)
    throw provider_error("shift variant needs a box witness");
  const Group& g = parts.g;
  const Group& img = parts.img;
  const std::int64_t radius = *parts.folner.box_radius;
  const std::int64_t cycle = 2 * radius + 1;
  const std::uint32_t n = static_cast<std::uint32_t>(parts.a.size());
  Group target = Group::perm_wreath(psi.target(), n);
  LengthFunction len = wreath_max_length(target, psi.target_length());

  std::vector<std::pair<Element, Element>> assignments;
  assignments.reserve(parts.big_f.size());
  for (const auto& x : parts.big_f) {
    Element xbar = q.apply(x);
    std::int64_t shift = ((xbar.as_lattice()[0] % cycle) + cycle) % cycle;
    std::vector<std::uint32_t> head(n);
    for (std::uint32_t i = 0; i < n; ++i)
      head[i] = static_cast<std::uint32_t>((i + static_cast<std::uint64_t>(shift)) % n);
    std::vector<std::pair<std::uint32_t, Element>> base;
    for (std::uint32_t i = 0; i < n; ++i) {
      Element u = detail::kernel_argument(g, q, img, parts.abar[i], parts.a[i], x, xbar);
      base.emplace_back(i, psi.apply(u));
    }
    assignments.emplace_back(x, target.make_perm_wreath(std::move(head), base));
  }

  AmenableScenario sc;
  sc.source = g;
  sc.quotient = q;
  sc.folner = parts.folner;
  sc.section_set = parts.a;
  sc.kernel_window = parts.kernel_window;
  sc.input_epsilon = eps;
  sc.weight_constant = parts.c;
  sc.map = ApproxMap::create(g, target, len, std::move(assignments), parts.f, eps,
                             WeightFunction::constant(parts.c));
  sc.notes.push_back("witness: " + parts.folner.description + ", size " +
                     std::to_string(parts.folner.size()));
  sc.notes.push_back("head: reduction mod " + std::to_string(cycle));
  sc.notes.push_back("contractive max length on the target");
  return sc;
}

}  // namespace grapp
