#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "grapp/element.hpp"

namespace grapp {

enum class GroupKind { Symmetric, Modular, Lattice, Table, Matrix, Product, Wreath, PermWreath };

namespace detail {

struct GroupData;

inline std::uint64_t checked_mul_u64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r))
    throw parameter_error("group order does not fit in 64 bits");
  return r;
}

}  // namespace detail

class Group {
 public:
  Group() = default;

  static Group symmetric(std::uint32_t n);
  static Group modular(std::vector<std::int64_t> moduli);
  static Group lattice(std::uint32_t dim);
  static Group table(std::vector<std::vector<std::uint32_t>> mul);
  static Group matrix_set(std::uint32_t n, std::vector<Eigen::MatrixXcd> members);
  static Group unitary(std::uint32_t n);
  static Group general_linear(std::uint32_t n);
  static Group product(Group first, Group second);
  // Restricted wreath product bottom wr top: pairs (h, b) with h in top and
  // b a finitely supported function top -> bottom.
  static Group wreath(Group bottom, Group top);
  static Group perm_wreath(Group bottom, std::uint32_t points);

  bool valid() const { return data_ != nullptr; }
  GroupKind kind() const;
  std::string name() const;

  Element id() const;
  Element mul(const Element& a, const Element& b) const;
  Element inv(const Element& a) const;
  Element pow(const Element& a, std::int64_t k) const;
  // [x, y] = x^-1 y^-1 x y
  Element commutator(const Element& x, const Element& y) const;
  // g^-1 x g
  Element conjugate(const Element& x, const Element& g) const;
  bool eq(const Element& a, const Element& b) const;
  bool is_identity(const Element& a) const { return eq(a, id()); }
  void validate(const Element& a) const;
  bool is_member(const Element& a) const;
  Element canonicalize(const Element& a) const;

  bool finite() const;
  std::uint64_t order() const;
  std::vector<Element> elements() const;

  // Builds a canonical wreath element: keys and values are canonicalized,
  // identity values dropped.  Only valid on wreath-kind groups.
  Element make_wreath(const Element& head,
                      const std::vector<std::pair<Element, Element>>& base) const;
  Element make_perm_wreath(std::vector<std::uint32_t> head,
                           const std::vector<std::pair<std::uint32_t, Element>>& base) const;
  // Value of the base function at the given key (bottom identity off support).
  Element base_value(const Element& w, const Element& key) const;
  Element perm_base_value(const Element& w, std::uint32_t point) const;

  std::uint32_t symmetric_degree() const;
  const std::vector<std::int64_t>& moduli() const;
  std::uint32_t lattice_dim() const;
  std::uint32_t matrix_size() const;
  bool matrix_is_unitary() const;
  const Group& product_first() const;
  const Group& product_second() const;
  const Group& wreath_bottom() const;
  const Group& wreath_top() const;
  const Group& perm_wreath_bottom() const;
  std::uint32_t perm_wreath_points() const;

  // Structural equality: same kind and same defining data.
  static bool same(const Group& a, const Group& b);

  friend bool operator==(const Group& a, const Group& b) { return same(a, b); }
  friend bool operator!=(const Group& a, const Group& b) { return !same(a, b); }

 private:
  explicit Group(std::shared_ptr<const detail::GroupData> data) : data_(std::move(data)) {}

  const detail::GroupData& data() const;

  std::shared_ptr<const detail::GroupData> data_;
};

namespace detail {

struct SymmetricG {
  std::uint32_t n;
};

// Direct sum of cyclic groups Z/m_1 x ... x Z/m_d; elements are lattice
// vectors with coordinates reduced into [0, m_i).
struct ModularG {
  std::vector<std::int64_t> moduli;
};

struct LatticeG {
  std::uint32_t dim;  // Z^dim
};

struct TableG {
  std::vector<std::vector<std::uint32_t>> mul;
  std::uint32_t id;
  std::vector<std::uint32_t> inv;
};

// Ambient matrix group when members is empty (all unitaries / all invertibles
// of the given size), otherwise an explicit finite set of matrices.
struct MatrixG {
  std::uint32_t n;
  bool unitary;
  std::vector<Element> members;
};

struct ProductG {
  Group first, second;
};

struct WreathG {
  Group bottom, top;
};

struct PermWreathG {
  Group bottom;
  std::uint32_t points;
};

struct GroupData {
  std::variant<SymmetricG, ModularG, LatticeG, TableG, MatrixG, ProductG,
               WreathG, PermWreathG>
      v;
};

}  // namespace detail

inline const detail::GroupData& Group::data() const {
  if (!data_) throw structural_error("empty group handle");
  return *data_;
}

// ---------------------------------------------------------------------------
// factories

inline Group Group::symmetric(std::uint32_t n) {
  if (n == 0) throw parameter_error("symmetric group needs at least one point");
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::SymmetricG{n}}));
}

inline Group Group::modular(std::vector<std::int64_t> moduli) {
  if (moduli.empty()) throw parameter_error("modular group needs at least one component");
  for (auto m : moduli)
    if (m < 1) throw parameter_error("modular component must be positive");
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::ModularG{std::move(moduli)}}));
}

inline Group Group::lattice(std::uint32_t dim) {
  if (dim == 0) throw parameter_error("lattice group needs positive dimension");
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::LatticeG{dim}}));
}

inline Group Group::table(std::vector<std::vector<std::uint32_t>> mul) {
  const std::size_t n = mul.size();
  if (n == 0) throw structural_error("multiplication table is empty");
  for (const auto& row : mul) {
    if (row.size() != n) throw structural_error("multiplication table is not square");
    for (auto v : row)
      if (v >= n) throw structural_error("multiplication table entry out of range");
  }
  // Locate the identity.
  std::optional<std::uint32_t> id;
  for (std::uint32_t e = 0; e < n; ++e) {
    bool ok = true;
    for (std::uint32_t a = 0; a < n && ok; ++a)
      ok = mul[e][a] == a && mul[a][e] == a;
    if (ok) { id = e; break; }
  }
  if (!id) throw structural_error("multiplication table has no identity");
  // Two-sided inverses.
  std::vector<std::uint32_t> inv(n, 0);
  for (std::uint32_t a = 0; a < n; ++a) {
    bool found = false;
    for (std::uint32_t b = 0; b < n; ++b)
      if (mul[a][b] == *id && mul[b][a] == *id) { inv[a] = b; found = true; break; }
    if (!found) throw structural_error("multiplication table element has no inverse");
  }
  // Associativity.
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b)
      for (std::uint32_t c = 0; c < n; ++c)
        if (mul[mul[a][b]][c] != mul[a][mul[b][c]])
          throw structural_error("multiplication table is not associative");
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::TableG{std::move(mul), *id, std::move(inv)}}));
}

inline Group Group::matrix_set(std::uint32_t n, std::vector<Eigen::MatrixXcd> members) {
  if (n == 0) throw parameter_error("matrix group needs positive size");
  if (members.empty()) throw parameter_error("matrix set must be non-empty");
  bool unitary = true;
  std::vector<Element> elems;
  elems.reserve(members.size());
  for (auto& m : members) {
    if (m.rows() != n || m.cols() != n) throw structural_error("matrix member has wrong size");
    Eigen::MatrixXcd gram = m.adjoint() * m;
    gram -= Eigen::MatrixXcd::Identity(n, n);
    if (gram.cwiseAbs().maxCoeff() > kUnitaryTol) unitary = false;
    elems.push_back(Element::matrix(std::move(m)));
  }
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::MatrixG{n, unitary, std::move(elems)}}));
}

inline Group Group::unitary(std::uint32_t n) {
  if (n == 0) throw parameter_error("matrix group needs positive size");
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::MatrixG{n, true, {}}}));
}

inline Group Group::general_linear(std::uint32_t n) {
  if (n == 0) throw parameter_error("matrix group needs positive size");
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::MatrixG{n, false, {}}}));
}

inline Group Group::product(Group first, Group second) {
  if (!first.valid() || !second.valid()) throw parameter_error("product factors must be valid");
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::ProductG{std::move(first), std::move(second)}}));
}

inline Group Group::wreath(Group bottom, Group top) {
  if (!bottom.valid() || !top.valid()) throw parameter_error("wreath factors must be valid");
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::WreathG{std::move(bottom), std::move(top)}}));
}

inline Group Group::perm_wreath(Group bottom, std::uint32_t points) {
  if (!bottom.valid()) throw parameter_error("wreath bottom must be valid");
  if (points == 0) throw parameter_error("wreath needs at least one point");
  return Group(std::make_shared<detail::GroupData>(
      detail::GroupData{detail::PermWreathG{std::move(bottom), points}}));
}

// ---------------------------------------------------------------------------
// accessors

inline GroupKind Group::kind() const {
  switch (data().v.index()) {
    case 0: return GroupKind::Symmetric;
    case 1: return GroupKind::Modular;
    case 2: return GroupKind::Lattice;
    case 3: return GroupKind::Table;
    case 4: return GroupKind::Matrix;
    case 5: return GroupKind::Product;
    case 6: return GroupKind::Wreath;
    default: return GroupKind::PermWreath;
  }
}

inline std::uint32_t Group::symmetric_degree() const {
  if (auto* g = std::get_if<detail::SymmetricG>(&data().v)) return g->n;
  throw capability_error("not a symmetric group");
}

inline const std::vector<std::int64_t>& Group::moduli() const {
  if (auto* g = std::get_if<detail::ModularG>(&data().v)) return g->moduli;
  throw capability_error("not a modular group");
}

inline std::uint32_t Group::lattice_dim() const {
  if (auto* g = std::get_if<detail::LatticeG>(&data().v)) return g->dim;
  throw capability_error("not a lattice group");
}

inline std::uint32_t Group::matrix_size() const {
  if (auto* g = std::get_if<detail::MatrixG>(&data().v)) return g->n;
  throw capability_error("not a matrix group");
}

inline bool Group::matrix_is_unitary() const {
  if (auto* g = std::get_if<detail::MatrixG>(&data().v)) return g->unitary;
  throw capability_error("not a matrix group");
}

inline const Group& Group::product_first() const {
  if (auto* g = std::get_if<detail::ProductG>(&data().v)) return g->first;
  throw capability_error("not a product group");
}

inline const Group& Group::product_second() const {
  if (auto* g = std::get_if<detail::ProductG>(&data().v)) return g->second;
  throw capability_error("not a product group");
}

inline const Group& Group::wreath_bottom() const {
  if (auto* g = std::get_if<detail::WreathG>(&data().v)) return g->bottom;
  throw capability_error("not a wreath group");
}

inline const Group& Group::wreath_top() const {
  if (auto* g = std::get_if<detail::WreathG>(&data().v)) return g->top;
  throw capability_error("not a wreath group");
}

inline const Group& Group::perm_wreath_bottom() const {
  if (auto* g = std::get_if<detail::PermWreathG>(&data().v)) return g->bottom;
  throw capability_error("not a permutation-wreath group");
}

inline std::uint32_t Group::perm_wreath_points() const {
  if (auto* g = std::get_if<detail::PermWreathG>(&data().v)) return g->points;
  throw capability_error("not a permutation-wreath group");
}

inline std::string Group::name() const {
  switch (kind()) {
    case GroupKind::Symmetric: return "Sym(" + std::to_string(symmetric_degree()) + ")";
    case GroupKind::Modular: {
      std::string s;
      for (std::size_t i = 0; i < moduli().size(); ++i) {
        if (i) s += " x ";
        s += "Z/" + std::to_string(moduli()[i]);
      }
      return s;
    }
    case GroupKind::Lattice: return "Z^" + std::to_string(lattice_dim());
    case GroupKind::Table:
      return "table(" + std::to_string(std::get<detail::TableG>(data().v).mul.size()) + ")";
    case GroupKind::Matrix: {
      const auto& g = std::get<detail::MatrixG>(data().v);
      if (g.members.empty())
        return (g.unitary ? "U(" : "GL(") + std::to_string(g.n) + ")";
      return "mat(" + std::to_string(g.n) + ";" + std::to_string(g.members.size()) + ")";
    }
    case GroupKind::Product:
      return "prod(" + product_first().name() + ", " + product_second().name() + ")";
    case GroupKind::Wreath:
      return "wr(" + wreath_bottom().name() + ", " + wreath_top().name() + ")";
    case GroupKind::PermWreath:
      return "wr(" + perm_wreath_bottom().name() + ", Sym(" +
             std::to_string(perm_wreath_points()) + "))";
  }
  return "?";
}

inline bool Group::same(const Group& a, const Group& b) {
  if (a.data_ == b.data_) return true;
  if (!a.valid() || !b.valid()) return false;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case GroupKind::Symmetric:
      return a.symmetric_degree() == b.symmetric_degree();
    case GroupKind::Modular:
      return a.moduli() == b.moduli();
    case GroupKind::Lattice:
      return a.lattice_dim() == b.lattice_dim();
    case GroupKind::Table: {
      const auto& ta = std::get<detail::TableG>(a.data().v);
      const auto& tb = std::get<detail::TableG>(b.data().v);
      return ta.mul == tb.mul;
    }
    case GroupKind::Matrix: {
      const auto& ma = std::get<detail::MatrixG>(a.data().v);
      const auto& mb = std::get<detail::MatrixG>(b.data().v);
      if (ma.n != mb.n || ma.unitary != mb.unitary || ma.members.size() != mb.members.size())
        return false;
      for (std::size_t i = 0; i < ma.members.size(); ++i)
        if (Element::compare(ma.members[i], mb.members[i]) != 0) return false;
      return true;
    }
    case GroupKind::Product:
      return same(a.product_first(), b.product_first()) &&
             same(a.product_second(), b.product_second());
    case GroupKind::Wreath:
      return same(a.wreath_bottom(), b.wreath_bottom()) &&
             same(a.wreath_top(), b.wreath_top());
    case GroupKind::PermWreath:
      return a.perm_wreath_points() == b.perm_wreath_points() &&
             same(a.perm_wreath_bottom(), b.perm_wreath_bottom());
  }
  return false;
}

// ---------------------------------------------------------------------------
// identity / multiplication / inverse

inline Element Group::id() const {
  switch (kind()) {
    case GroupKind::Symmetric: {
      std::vector<std::uint32_t> im(symmetric_degree());
      std::iota(im.begin(), im.end(), 0u);
      return Element::perm(std::move(im));
    }
    case GroupKind::Modular:
      return Element::lattice(std::vector<std::int64_t>(moduli().size(), 0));
    case GroupKind::Lattice:
      return Element::lattice(std::vector<std::int64_t>(lattice_dim(), 0));
    case GroupKind::Table:
      return Element::table(std::get<detail::TableG>(data().v).id);
    case GroupKind::Matrix:
      return Element::matrix(Eigen::MatrixXcd::Identity(matrix_size(), matrix_size()));
    case GroupKind::Product:
      return Element::pair(product_first().id(), product_second().id());
    case GroupKind::Wreath:
      return Element::wreath(wreath_top().id(), {});
    case GroupKind::PermWreath: {
      std::vector<std::uint32_t> im(perm_wreath_points());
      std::iota(im.begin(), im.end(), 0u);
      return Element::perm_wreath(std::move(im), {});
    }
  }
  throw structural_error("unreachable");
}

namespace detail {

// Pointwise product of two canonical sparse base functions.
template <typename Key, typename KeyLess>
std::vector<std::pair<Key, Element>> merge_base(
    const Group& bottom, std::vector<std::pair<Key, Element>> a,
    std::vector<std::pair<Key, Element>> b, KeyLess less) {
  std::sort(a.begin(), a.end(), [&](const auto& x, const auto& y) { return less(x.first, y.first); });
  std::sort(b.begin(), b.end(), [&](const auto& x, const auto& y) { return less(x.first, y.first); });
  std::vector<std::pair<Key, Element>> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && less(a[i].first, b[j].first))) {
      out.push_back(a[i++]);
    } else if (i == a.size() || less(b[j].first, a[i].first)) {
      out.push_back(b[j++]);
    } else {
      Element v = bottom.mul(a[i].second, b[j].second);
      if (!bottom.is_identity(v)) out.emplace_back(a[i].first, std::move(v));
      ++i;
      ++j;
    }
  }
  return out;
}

}  // namespace detail

inline Element Group::mul(const Element& a, const Element& b) const {
  switch (kind()) {
    case GroupKind::Symmetric: {
      const auto& s = a.as_perm();
      const auto& t = b.as_perm();
      if (s.size() != t.size()) throw structural_error("permutation sizes differ");
      // Right action: x^(st) = (x^s)^t.
      std::vector<std::uint32_t> im(s.size());
      for (std::size_t x = 0; x < s.size(); ++x) im[x] = t[s[x]];
      return Element::perm(std::move(im));
    }
    case GroupKind::Modular: {
      const auto& xs = a.as_lattice();
      const auto& ys = b.as_lattice();
      const auto& ms = moduli();
      if (xs.size() != ms.size() || ys.size() != ms.size())
        throw structural_error("modular element has wrong arity");
      std::vector<std::int64_t> out(ms.size());
      for (std::size_t i = 0; i < ms.size(); ++i)
        out[i] = ((xs[i] + ys[i]) % ms[i] + ms[i]) % ms[i];
      return Element::lattice(std::move(out));
    }
    case GroupKind::Lattice: {
      const auto& xs = a.as_lattice();
      const auto& ys = b.as_lattice();
      if (xs.size() != lattice_dim() || ys.size() != lattice_dim())
        throw structural_error("lattice element has wrong arity");
      std::vector<std::int64_t> out(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] + ys[i];
      return Element::lattice(std::move(out));
    }
    case GroupKind::Table: {
      const auto& t = std::get<detail::TableG>(data().v);
      std::uint32_t x = a.as_table(), y = b.as_table();
      if (x >= t.mul.size() || y >= t.mul.size())
        throw structural_error("table index out of range");
      return Element::table(t.mul[x][y]);
    }
    case GroupKind::Matrix:
      return Element::matrix(a.as_matrix() * b.as_matrix());
    case GroupKind::Product:
      return Element::pair(product_first().mul(a.pair_first(), b.pair_first()),
                           product_second().mul(a.pair_second(), b.pair_second()));
    case GroupKind::Wreath: {
      // (h1, b1)(h2, b2) = (h1 h2, b1^(h2) b2), where translating by h moves
      // the value at key k to key k*h.
      const Group& top = wreath_top();
      const Group& bottom = wreath_bottom();
      const Element& h2 = b.wreath_head();
      std::vector<std::pair<Element, Element>> moved;
      moved.reserve(a.wreath_base().size());
      for (const auto& [k, v] : a.wreath_base()) moved.emplace_back(top.mul(k, h2), v);
      auto base = detail::merge_base<Element>(
          bottom, std::move(moved), b.wreath_base(),
          [](const Element& x, const Element& y) { return Element::compare(x, y) < 0; });
      return Element::wreath(top.mul(a.wreath_head(), h2), std::move(base));
    }
    case GroupKind::PermWreath: {
      const Group& bottom = perm_wreath_bottom();
      const auto& a1 = a.perm_wreath_head();
      const auto& a2 = b.perm_wreath_head();
      if (a1.size() != perm_wreath_points() || a2.size() != perm_wreath_points())
        throw structural_error("wreath head has wrong degree");
      std::vector<std::uint32_t> head(a1.size());
      for (std::size_t x = 0; x < a1.size(); ++x) head[x] = a2[a1[x]];
      // Value at point p moves to p^(a2).
      std::vector<std::pair<std::uint32_t, Element>> moved;
      moved.reserve(a.perm_wreath_base().size());
      for (const auto& [p, v] : a.perm_wreath_base()) moved.emplace_back(a2[p], v);
      auto base = detail::merge_base<std::uint32_t>(
          bottom, std::move(moved), b.perm_wreath_base(),
          [](std::uint32_t x, std::uint32_t y) { return x < y; });
      return Element::perm_wreath(std::move(head), std::move(base));
    }
  }
  throw structural_error("unreachable");
}

inline Element Group::inv(const Element& a) const {
  switch (kind()) {
    case GroupKind::Symmetric: {
      const auto& s = a.as_perm();
      std::vector<std::uint32_t> im(s.size());
      for (std::size_t x = 0; x < s.size(); ++x) im[s[x]] = static_cast<std::uint32_t>(x);
      return Element::perm(std::move(im));
    }
    case GroupKind::Modular: {
      const auto& xs = a.as_lattice();
      const auto& ms = moduli();
      std::vector<std::int64_t> out(ms.size());
      for (std::size_t i = 0; i < ms.size(); ++i) out[i] = ((-xs[i]) % ms[i] + ms[i]) % ms[i];
      return Element::lattice(std::move(out));
    }
    case GroupKind::Lattice: {
      const auto& xs = a.as_lattice();
      std::vector<std::int64_t> out(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) out[i] = -xs[i];
      return Element::lattice(std::move(out));
    }
    case GroupKind::Table: {
      const auto& t = std::get<detail::TableG>(data().v);
      std::uint32_t x = a.as_table();
      if (x >= t.inv.size()) throw structural_error("table index out of range");
      return Element::table(t.inv[x]);
    }
    case GroupKind::Matrix:
      if (matrix_is_unitary()) return Element::matrix(a.as_matrix().adjoint());
      return Element::matrix(a.as_matrix().inverse());
    case GroupKind::Product:
      return Element::pair(product_first().inv(a.pair_first()),
                           product_second().inv(a.pair_second()));
    case GroupKind::Wreath: {
      // (h, b)^-1 = (h^-1, c) with c(k h^-1) = b(k)^-1.
      const Group& top = wreath_top();
      const Group& bottom = wreath_bottom();
      Element hinv = top.inv(a.wreath_head());
      std::vector<std::pair<Element, Element>> base;
      base.reserve(a.wreath_base().size());
      for (const auto& [k, v] : a.wreath_base())
        base.emplace_back(top.mul(k, hinv), bottom.inv(v));
      return Element::wreath(std::move(hinv), std::move(base));
    }
    case GroupKind::PermWreath: {
      const Group& bottom = perm_wreath_bottom();
      const auto& h = a.perm_wreath_head();
      std::vector<std::uint32_t> hinv(h.size());
      for (std::size_t x = 0; x < h.size(); ++x) hinv[h[x]] = static_cast<std::uint32_t>(x);
      std::vector<std::pair<std::uint32_t, Element>> base;
      base.reserve(a.perm_wreath_base().size());
      for (const auto& [p, v] : a.perm_wreath_base())
        base.emplace_back(hinv[p], bottom.inv(v));
      return Element::perm_wreath(std::move(hinv), std::move(base));
    }
  }
  throw structural_error("unreachable");
}

inline Element Group::pow(const Element& a, std::int64_t k) const {
  if (k < 0) return pow(inv(a), -k);
  Element acc = id();
  Element base = a;
  std::uint64_t e = static_cast<std::uint64_t>(k);
  while (e) {
    if (e & 1) acc = mul(acc, base);
    e >>= 1;
    if (e) base = mul(base, base);
  }
  return acc;
}

inline Element Group::commutator(const Element& x, const Element& y) const {
  return mul(mul(inv(x), inv(y)), mul(x, y));
}

inline Element Group::conjugate(const Element& x, const Element& g) const {
  return mul(mul(inv(g), x), g);
}

// ---------------------------------------------------------------------------
// equality / membership / canonical form

inline bool Group::eq(const Element& a, const Element& b) const {
  switch (kind()) {
    case GroupKind::Matrix: {
      const auto& ma = a.as_matrix();
      const auto& mb = b.as_matrix();
      if (ma.rows() != mb.rows() || ma.cols() != mb.cols()) return false;
      return (ma - mb).cwiseAbs().maxCoeff() <= kMatEqTol;
    }
    case GroupKind::Product:
      return product_first().eq(a.pair_first(), b.pair_first()) &&
             product_second().eq(a.pair_second(), b.pair_second());
    case GroupKind::Wreath: {
      if (!wreath_top().eq(a.wreath_head(), b.wreath_head())) return false;
      const auto& ba = a.wreath_base();
      const auto& bb = b.wreath_base();
      if (ba.size() != bb.size()) return false;
      for (std::size_t i = 0; i < ba.size(); ++i)
        if (ba[i].first != bb[i].first ||
            !wreath_bottom().eq(ba[i].second, bb[i].second))
          return false;
      return true;
    }
    case GroupKind::PermWreath: {
      if (a.perm_wreath_head() != b.perm_wreath_head()) return false;
      const auto& ba = a.perm_wreath_base();
      const auto& bb = b.perm_wreath_base();
      if (ba.size() != bb.size()) return false;
      for (std::size_t i = 0; i < ba.size(); ++i)
        if (ba[i].first != bb[i].first ||
            !perm_wreath_bottom().eq(ba[i].second, bb[i].second))
          return false;
      return true;
    }
    default:
      return Element::compare(a, b) == 0;
  }
}

inline void Group::validate(const Element& a) const {
  switch (kind()) {
    case GroupKind::Symmetric:
      if (a.as_perm().size() != symmetric_degree())
        throw structural_error("permutation degree mismatch");
      return;
    case GroupKind::Modular: {
      const auto& xs = a.as_lattice();
      const auto& ms = moduli();
      if (xs.size() != ms.size()) throw structural_error("modular element has wrong arity");
      for (std::size_t i = 0; i < ms.size(); ++i)
        if (xs[i] < 0 || xs[i] >= ms[i])
          throw structural_error("modular coordinate out of canonical range");
      return;
    }
    case GroupKind::Lattice:
      if (a.as_lattice().size() != lattice_dim())
        throw structural_error("lattice element has wrong arity");
      return;
    case GroupKind::Table:
      if (a.as_table() >= std::get<detail::TableG>(data().v).mul.size())
        throw structural_error("table index out of range");
      return;
    case GroupKind::Matrix: {
      const auto& g = std::get<detail::MatrixG>(data().v);
      const auto& m = a.as_matrix();
      if (m.rows() != g.n || m.cols() != g.n)
        throw structural_error("matrix size mismatch");
      if (!m.allFinite()) throw structural_error("matrix has non-finite entries");
      if (!g.members.empty()) {
        for (const auto& e : g.members)
          if ((e.as_matrix() - m).cwiseAbs().maxCoeff() <= kMatEqTol) return;
        throw structural_error("matrix is not a member of the listed set");
      }
      if (g.unitary) {
        Eigen::MatrixXcd gram = m.adjoint() * m;
        gram -= Eigen::MatrixXcd::Identity(g.n, g.n);
        if (gram.cwiseAbs().maxCoeff() > kUnitaryTol)
          throw structural_error("matrix is not unitary within tolerance");
      } else {
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
        lu.setThreshold(kPivotTol);
        if (!lu.isInvertible()) throw structural_error("matrix is not invertible");
      }
      return;
    }
    case GroupKind::Product:
      product_first().validate(a.pair_first());
      product_second().validate(a.pair_second());
      return;
    case GroupKind::Wreath: {
      const Group& top = wreath_top();
      const Group& bottom = wreath_bottom();
      top.validate(a.wreath_head());
      const auto& base = a.wreath_base();
      for (std::size_t i = 0; i < base.size(); ++i) {
        const auto& [k, v] = base[i];
        top.validate(k);
        if (Element::compare(top.canonicalize(k), k) != 0)
          throw structural_error("wreath base key is not canonical");
        bottom.validate(v);
        if (bottom.is_identity(v))
          throw structural_error("wreath base stores an identity value");
        if (i && Element::compare(base[i - 1].first, k) >= 0)
          throw structural_error("wreath base keys are not sorted");
      }
      return;
    }
    case GroupKind::PermWreath: {
      const Group& bottom = perm_wreath_bottom();
      if (a.perm_wreath_head().size() != perm_wreath_points())
        throw structural_error("wreath head has wrong degree");
      for (const auto& [p, v] : a.perm_wreath_base()) {
        if (p >= perm_wreath_points())
          throw structural_error("wreath base key outside the point range");
        bottom.validate(v);
        if (bottom.is_identity(v))
          throw structural_error("wreath base stores an identity value");
      }
      return;
    }
  }
}

inline bool Group::is_member(const Element& a) const {
  try {
    validate(a);
    return true;
  } catch (const Error&) {
    return false;
  }
}

inline Element Group::canonicalize(const Element& a) const {
  switch (kind()) {
    case GroupKind::Modular: {
      const auto& xs = a.as_lattice();
      const auto& ms = moduli();
      if (xs.size() != ms.size()) throw structural_error("modular element has wrong arity");
      std::vector<std::int64_t> out(ms.size());
      for (std::size_t i = 0; i < ms.size(); ++i) out[i] = (xs[i] % ms[i] + ms[i]) % ms[i];
      return Element::lattice(std::move(out));
    }
    case GroupKind::Product:
      return Element::pair(product_first().canonicalize(a.pair_first()),
                           product_second().canonicalize(a.pair_second()));
    case GroupKind::Wreath:
      return make_wreath(a.wreath_head(), a.wreath_base());
    case GroupKind::PermWreath:
      return make_perm_wreath(a.perm_wreath_head(), a.perm_wreath_base());
    default:
      return a;
  }
}

inline Element Group::make_wreath(
    const Element& head, const std::vector<std::pair<Element, Element>>& base) const {
  const Group& top = wreath_top();
  const Group& bottom = wreath_bottom();
  std::vector<std::pair<Element, Element>> canon;
  canon.reserve(base.size());
  for (const auto& [k, v] : base) {
    Element cv = bottom.canonicalize(v);
    if (bottom.is_identity(cv)) continue;
    canon.emplace_back(top.canonicalize(k), std::move(cv));
  }
  return Element::wreath(top.canonicalize(head), std::move(canon));
}

inline Element Group::make_perm_wreath(
    std::vector<std::uint32_t> head,
    const std::vector<std::pair<std::uint32_t, Element>>& base) const {
  const Group& bottom = perm_wreath_bottom();
  std::vector<std::pair<std::uint32_t, Element>> canon;
  canon.reserve(base.size());
  for (const auto& [p, v] : base) {
    Element cv = bottom.canonicalize(v);
    if (bottom.is_identity(cv)) continue;
    canon.emplace_back(p, std::move(cv));
  }
  return Element::perm_wreath(std::move(head), std::move(canon));
}

inline Element Group::base_value(const Element& w, const Element& key) const {
  const Group& bottom = wreath_bottom();
  Element k = wreath_top().canonicalize(key);
  for (const auto& [bk, v] : w.wreath_base())
    if (Element::compare(bk, k) == 0) return v;
  return bottom.id();
}

inline Element Group::perm_base_value(const Element& w, std::uint32_t point) const {
  for (const auto& [p, v] : w.perm_wreath_base())
    if (p == point) return v;
  return perm_wreath_bottom().id();
}

// ---------------------------------------------------------------------------
// finiteness / enumeration

inline bool Group::finite() const {
  switch (kind()) {
    case GroupKind::Symmetric:
    case GroupKind::Modular:
    case GroupKind::Table:
      return true;
    case GroupKind::Lattice:
      return false;
    case GroupKind::Matrix:
      return !std::get<detail::MatrixG>(data().v).members.empty();
    case GroupKind::Product:
      return product_first().finite() && product_second().finite();
    case GroupKind::Wreath:
      return wreath_bottom().finite() && wreath_top().finite();
    case GroupKind::PermWreath:
      return perm_wreath_bottom().finite();
  }
  return false;
}

inline std::uint64_t Group::order() const {
  if (!finite()) throw capability_error("group is infinite: " + name());
  switch (kind()) {
    case GroupKind::Symmetric: {
      std::uint64_t r = 1;
      for (std::uint32_t i = 2; i <= symmetric_degree(); ++i)
        r = detail::checked_mul_u64(r, i);
      return r;
    }
    case GroupKind::Modular: {
      std::uint64_t r = 1;
      for (auto m : moduli()) r = detail::checked_mul_u64(r, static_cast<std::uint64_t>(m));
      return r;
    }
    case GroupKind::Table:
      return std::get<detail::TableG>(data().v).mul.size();
    case GroupKind::Matrix:
      return std::get<detail::MatrixG>(data().v).members.size();
    case GroupKind::Product:
      return detail::checked_mul_u64(product_first().order(), product_second().order());
    case GroupKind::Wreath: {
      std::uint64_t t = wreath_top().order();
      std::uint64_t s = wreath_bottom().order();
      std::uint64_t r = t;
      for (std::uint64_t i = 0; i < t; ++i) r = detail::checked_mul_u64(r, s);
      return r;
    }
    case GroupKind::PermWreath: {
      std::uint64_t r = 1;
      for (std::uint32_t i = 2; i <= perm_wreath_points(); ++i)
        r = detail::checked_mul_u64(r, i);
      std::uint64_t s = perm_wreath_bottom().order();
      for (std::uint32_t i = 0; i < perm_wreath_points(); ++i)
        r = detail::checked_mul_u64(r, s);
      return r;
    }
    default:
      throw capability_error("group is infinite: " + name());
  }
}

namespace detail {

inline constexpr std::uint64_t kEnumerationCap = 2'000'000;

inline std::vector<std::vector<std::uint32_t>> all_perms(std::uint32_t n) {
  std::vector<std::uint32_t> im(n);
  std::iota(im.begin(), im.end(), 0u);
  std::vector<std::vector<std::uint32_t>> out;
  do {
    out.push_back(im);
  } while (std::next_permutation(im.begin(), im.end()));
  return out;
}

}  // namespace detail

inline std::vector<Element> Group::elements() const {
  std::uint64_t n = order();
  if (n > detail::kEnumerationCap)
    throw capability_error("group too large to enumerate: " + name());
  switch (kind()) {
    case GroupKind::Symmetric: {
      std::vector<Element> out;
      out.reserve(n);
      for (auto& im : detail::all_perms(symmetric_degree()))
        out.push_back(Element::perm(std::move(im)));
      return out;
    }
    case GroupKind::Modular: {
      const auto& ms = moduli();
      std::vector<Element> out;
      out.reserve(n);
      std::vector<std::int64_t> cur(ms.size(), 0);
      for (;;) {
        out.push_back(Element::lattice(cur));
        std::size_t i = 0;
        while (i < ms.size() && ++cur[i] == ms[i]) cur[i++] = 0;
        if (i == ms.size()) break;
      }
      return out;
    }
    case GroupKind::Table: {
      std::vector<Element> out;
      out.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) out.push_back(Element::table(i));
      return out;
    }
    case GroupKind::Matrix:
      return std::get<detail::MatrixG>(data().v).members;
    case GroupKind::Product: {
      auto xs = product_first().elements();
      auto ys = product_second().elements();
      std::vector<Element> out;
      out.reserve(xs.size() * ys.size());
      for (const auto& x : xs)
        for (const auto& y : ys) out.push_back(Element::pair(x, y));
      return out;
    }
    case GroupKind::Wreath: {
      auto tops = wreath_top().elements();
      auto bots = wreath_bottom().elements();
      std::vector<Element> out;
      out.reserve(n);
      std::vector<std::size_t> digit(tops.size(), 0);
      for (;;) {
        std::vector<std::pair<Element, Element>> base;
        for (std::size_t i = 0; i < tops.size(); ++i)
          if (!wreath_bottom().is_identity(bots[digit[i]]))
            base.emplace_back(tops[i], bots[digit[i]]);
        for (const auto& h : tops) out.push_back(make_wreath(h, base));
        std::size_t i = 0;
        while (i < digit.size() && ++digit[i] == bots.size()) digit[i++] = 0;
        if (i == digit.size()) break;
      }
      return out;
    }
    case GroupKind::PermWreath: {
      auto heads = detail::all_perms(perm_wreath_points());
      auto bots = perm_wreath_bottom().elements();
      std::vector<Element> out;
      out.reserve(n);
      std::vector<std::size_t> digit(perm_wreath_points(), 0);
      for (;;) {
        std::vector<std::pair<std::uint32_t, Element>> base;
        for (std::uint32_t p = 0; p < perm_wreath_points(); ++p)
          if (!perm_wreath_bottom().is_identity(bots[digit[p]]))
            base.emplace_back(p, bots[digit[p]]);
        for (const auto& h : heads) out.push_back(Element::perm_wreath(h, base));
        std::size_t i = 0;
        while (i < digit.size() && ++digit[i] == bots.size()) digit[i++] = 0;
        if (i == digit.size()) break;
      }
      return out;
    }
    default:
      throw capability_error("group not enumerable: " + name());
  }
}

}  // namespace grapp
