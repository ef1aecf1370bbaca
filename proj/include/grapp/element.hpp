#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "grapp/common.hpp"

namespace grapp {

enum class ElementKind { Perm, Matrix, Table, Lattice, Pair, Wreath, PermWreath };

namespace detail {
struct ElementData;
}

// Immutable group element.  Copies share the underlying data; all mutation
// goes through factories so canonical invariants (sorted sparse supports,
// reduced lattice coordinates) survive by construction.
class Element {
 public:
  Element() = default;

  ElementKind kind() const;

  static Element perm(std::vector<std::uint32_t> images);
  static Element matrix(Eigen::MatrixXcd m);
  static Element table(std::uint32_t index);
  static Element lattice(std::vector<std::int64_t> coords);
  static Element pair(Element first, Element second);
  // base must already have identity values removed; entries get sorted by key.
  static Element wreath(Element head, std::vector<std::pair<Element, Element>> base);
  static Element perm_wreath(std::vector<std::uint32_t> head,
                             std::vector<std::pair<std::uint32_t, Element>> base);

  const std::vector<std::uint32_t>& as_perm() const;
  const Eigen::MatrixXcd& as_matrix() const;
  std::uint32_t as_table() const;
  const std::vector<std::int64_t>& as_lattice() const;
  const Element& pair_first() const;
  const Element& pair_second() const;
  const Element& wreath_head() const;
  const std::vector<std::pair<Element, Element>>& wreath_base() const;
  const std::vector<std::uint32_t>& perm_wreath_head() const;
  const std::vector<std::pair<std::uint32_t, Element>>& perm_wreath_base() const;

  bool valid() const { return data_ != nullptr; }

  // Structural total order.  Matrix entries compare exactly; canonical keys in
  // sparse supports are discrete kinds, so this is only a tie-breaking device.
  static int compare(const Element& a, const Element& b);

  friend bool operator==(const Element& a, const Element& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Element& a, const Element& b) { return compare(a, b) != 0; }
  friend bool operator<(const Element& a, const Element& b) { return compare(a, b) < 0; }

  std::string describe() const;

 private:
  explicit Element(std::shared_ptr<const detail::ElementData> data) : data_(std::move(data)) {}

  const detail::ElementData& data() const;

  std::shared_ptr<const detail::ElementData> data_;
};

namespace detail {

struct PermData {
  std::vector<std::uint32_t> images;  // i -> images[i], right action
};

struct MatData {
  Eigen::MatrixXcd m;
};

struct TableData {
  std::uint32_t index;
};

struct LatticeData {
  std::vector<std::int64_t> coords;
};

struct PairData {
  Element first, second;
};

struct WreathData {
  Element head;
  std::vector<std::pair<Element, Element>> base;  // sorted by key, no identity values
};

struct PermWreathData {
  std::vector<std::uint32_t> head;
  std::vector<std::pair<std::uint32_t, Element>> base;  // sorted by key, no identity values
};

struct ElementData {
  std::variant<PermData, MatData, TableData, LatticeData, PairData, WreathData,
               PermWreathData>
      v;
};

}  // namespace detail

inline const detail::ElementData& Element::data() const {
  if (!data_) throw structural_error("empty element");
  return *data_;
}

inline ElementKind Element::kind() const {
  switch (data().v.index()) {
    case 0: return ElementKind::Perm;
    case 1: return ElementKind::Matrix;
    case 2: return ElementKind::Table;
    case 3: return ElementKind::Lattice;
    case 4: return ElementKind::Pair;
    case 5: return ElementKind::Wreath;
    default: return ElementKind::PermWreath;
  }
}

inline Element Element::perm(std::vector<std::uint32_t> images) {
  const std::size_t n = images.size();
  std::vector<bool> seen(n, false);
  for (std::uint32_t v : images) {
    if (v >= n || seen[v]) throw structural_error("not a permutation of 0..n-1");
    seen[v] = true;
  }
  return Element(std::make_shared<detail::ElementData>(
      detail::ElementData{detail::PermData{std::move(images)}}));
}

inline Element Element::matrix(Eigen::MatrixXcd m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw structural_error("matrix element must be square");
  return Element(std::make_shared<detail::ElementData>(
      detail::ElementData{detail::MatData{std::move(m)}}));
}

inline Element Element::table(std::uint32_t index) {
  return Element(std::make_shared<detail::ElementData>(
      detail::ElementData{detail::TableData{index}}));
}

inline Element Element::lattice(std::vector<std::int64_t> coords) {
  return Element(std::make_shared<detail::ElementData>(
      detail::ElementData{detail::LatticeData{std::move(coords)}}));
}

inline Element Element::pair(Element first, Element second) {
  if (!first.valid() || !second.valid()) throw structural_error("pair components must be non-empty");
  return Element(std::make_shared<detail::ElementData>(
      detail::ElementData{detail::PairData{std::move(first), std::move(second)}}));
}

inline Element Element::wreath(Element head, std::vector<std::pair<Element, Element>> base) {
  if (!head.valid()) throw structural_error("wreath head must be non-empty");
  std::sort(base.begin(), base.end(),
            [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
  for (std::size_t i = 1; i < base.size(); ++i)
    if (base[i - 1].first == base[i].first)
      throw structural_error("wreath base has a repeated key");
  return Element(std::make_shared<detail::ElementData>(
      detail::ElementData{detail::WreathData{std::move(head), std::move(base)}}));
}

inline Element Element::perm_wreath(std::vector<std::uint32_t> head,
                                    std::vector<std::pair<std::uint32_t, Element>> base) {
  const std::size_t n = head.size();
  std::vector<bool> seen(n, false);
  for (std::uint32_t v : head) {
    if (v >= n || seen[v]) throw structural_error("wreath head is not a permutation");
    seen[v] = true;
  }
  std::sort(base.begin(), base.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < base.size(); ++i)
    if (base[i - 1].first == base[i].first)
      throw structural_error("wreath base has a repeated key");
  for (const auto& [k, v] : base)
    if (k >= n) throw structural_error("wreath base key outside the point range");
  return Element(std::make_shared<detail::ElementData>(
      detail::ElementData{detail::PermWreathData{std::move(head), std::move(base)}}));
}

inline const std::vector<std::uint32_t>& Element::as_perm() const {
  if (auto* p = std::get_if<detail::PermData>(&data().v)) return p->images;
  throw structural_error("element is not a permutation");
}

inline const Eigen::MatrixXcd& Element::as_matrix() const {
  if (auto* p = std::get_if<detail::MatData>(&data().v)) return p->m;
  throw structural_error("element is not a matrix");
}

inline std::uint32_t Element::as_table() const {
  if (auto* p = std::get_if<detail::TableData>(&data().v)) return p->index;
  throw structural_error("element is not a table index");
}

inline const std::vector<std::int64_t>& Element::as_lattice() const {
  if (auto* p = std::get_if<detail::LatticeData>(&data().v)) return p->coords;
  throw structural_error("element is not a lattice vector");
}

inline const Element& Element::pair_first() const {
  if (auto* p = std::get_if<detail::PairData>(&data().v)) return p->first;
  throw structural_error("element is not a pair");
}

inline const Element& Element::pair_second() const {
  if (auto* p = std::get_if<detail::PairData>(&data().v)) return p->second;
  throw structural_error("element is not a pair");
}

inline const Element& Element::wreath_head() const {
  if (auto* p = std::get_if<detail::WreathData>(&data().v)) return p->head;
  throw structural_error("element is not a wreath element");
}

inline const std::vector<std::pair<Element, Element>>& Element::wreath_base() const {
  if (auto* p = std::get_if<detail::WreathData>(&data().v)) return p->base;
  throw structural_error("element is not a wreath element");
}

inline const std::vector<std::uint32_t>& Element::perm_wreath_head() const {
  if (auto* p = std::get_if<detail::PermWreathData>(&data().v)) return p->head;
  throw structural_error("element is not a permutation-wreath element");
}

inline const std::vector<std::pair<std::uint32_t, Element>>& Element::perm_wreath_base() const {
  if (auto* p = std::get_if<detail::PermWreathData>(&data().v)) return p->base;
  throw structural_error("element is not a permutation-wreath element");
}

namespace detail {

template <typename T>
int cmp3(const T& a, const T& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

template <typename Seq, typename Cmp>
int cmp_seq(const Seq& a, const Seq& b, Cmp cmp) {
  if (int c = cmp3(a.size(), b.size())) return c;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (int c = cmp(a[i], b[i])) return c;
  return 0;
}

}  // namespace detail

inline int Element::compare(const Element& a, const Element& b) {
  const auto& da = a.data().v;
  const auto& db = b.data().v;
  if (int c = detail::cmp3(da.index(), db.index())) return c;
  switch (a.kind()) {
    case ElementKind::Perm:
      return detail::cmp_seq(std::get<detail::PermData>(da).images,
                             std::get<detail::PermData>(db).images,
                             [](auto x, auto y) { return detail::cmp3(x, y); });
    case ElementKind::Matrix: {
      const auto& ma = std::get<detail::MatData>(da).m;
      const auto& mb = std::get<detail::MatData>(db).m;
      if (int c = detail::cmp3(ma.rows(), mb.rows())) return c;
      for (Eigen::Index i = 0; i < ma.rows(); ++i)
        for (Eigen::Index j = 0; j < ma.cols(); ++j) {
          if (int c = detail::cmp3(ma(i, j).real(), mb(i, j).real())) return c;
          if (int c = detail::cmp3(ma(i, j).imag(), mb(i, j).imag())) return c;
        }
      return 0;
    }
    case ElementKind::Table:
      return detail::cmp3(std::get<detail::TableData>(da).index,
                          std::get<detail::TableData>(db).index);
    case ElementKind::Lattice:
      return detail::cmp_seq(std::get<detail::LatticeData>(da).coords,
                             std::get<detail::LatticeData>(db).coords,
                             [](auto x, auto y) { return detail::cmp3(x, y); });
    case ElementKind::Pair: {
      const auto& pa = std::get<detail::PairData>(da);
      const auto& pb = std::get<detail::PairData>(db);
      if (int c = compare(pa.first, pb.first)) return c;
      return compare(pa.second, pb.second);
    }
    case ElementKind::Wreath: {
      const auto& wa = std::get<detail::WreathData>(da);
      const auto& wb = std::get<detail::WreathData>(db);
      if (int c = compare(wa.head, wb.head)) return c;
      return detail::cmp_seq(wa.base, wb.base, [](const auto& x, const auto& y) {
        if (int c = compare(x.first, y.first)) return c;
        return compare(x.second, y.second);
      });
    }
    case ElementKind::PermWreath: {
      const auto& wa = std::get<detail::PermWreathData>(da);
      const auto& wb = std::get<detail::PermWreathData>(db);
      if (int c = detail::cmp_seq(wa.head, wb.head,
                                  [](auto x, auto y) { return detail::cmp3(x, y); }))
        return c;
      return detail::cmp_seq(wa.base, wb.base, [](const auto& x, const auto& y) {
        if (int c = detail::cmp3(x.first, y.first)) return c;
        return compare(x.second, y.second);
      });
    }
  }
  return 0;
}

inline std::string Element::describe() const {
  std::ostringstream out;
  switch (kind()) {
    case ElementKind::Perm: {
      out << "perm[";
      const auto& im = as_perm();
      for (std::size_t i = 0; i < im.size(); ++i) out << (i ? "," : "") << im[i];
      out << "]";
      break;
    }
    case ElementKind::Matrix: {
      const auto& m = as_matrix();
      out << "mat" << m.rows() << "x" << m.cols();
      break;
    }
    case ElementKind::Table:
      out << "table#" << as_table();
      break;
    case ElementKind::Lattice: {
      out << "lat[";
      const auto& c = as_lattice();
      for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "," : "") << c[i];
      out << "]";
      break;
    }
    case ElementKind::Pair:
      out << "(" << pair_first().describe() << "," << pair_second().describe() << ")";
      break;
    case ElementKind::Wreath: {
      out << "wr(" << wreath_head().describe() << ";{";
      bool first = true;
      for (const auto& [k, v] : wreath_base()) {
        if (!first) out << ",";
        first = false;
        out << k.describe() << ":" << v.describe();
      }
      out << "})";
      break;
    }
    case ElementKind::PermWreath: {
      out << "pwr([";
      const auto& h = perm_wreath_head();
      for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
      out << "];{";
      bool first = true;
      for (const auto& [k, v] : perm_wreath_base()) {
        if (!first) out << ",";
        first = false;
        out << k << ":" << v.describe();
      }
      out << "})";
      break;
    }
  }
  return out.str();
}

}  // namespace grapp
