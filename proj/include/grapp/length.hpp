#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "grapp/group.hpp"

namespace grapp {

// Normalized Hilbert-Schmidt norm: sqrt of the mean squared entry magnitude
// times the dimension, i.e. ||A|| = sqrt(tr(A*A)/n).  The identity has norm 1.
inline double hs_norm(const Eigen::MatrixXcd& a) {
  return std::sqrt(a.squaredNorm() / static_cast<double>(a.rows()));
}

// Row-echelon rank with an absolute pivot threshold.
inline Eigen::Index matrix_rank(Eigen::MatrixXcd a, double tol = kPivotTol) {
  const Eigen::Index rows = a.rows(), cols = a.cols();
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
    Eigen::Index best = r;
    double best_abs = std::abs(a(r, c));
    for (Eigen::Index i = r + 1; i < rows; ++i) {
      double v = std::abs(a(i, c));
      if (v > best_abs) { best_abs = v; best = i; }
    }
    if (best_abs <= tol) continue;
    a.row(r).swap(a.row(best));
    for (Eigen::Index i = r + 1; i < rows; ++i) {
      std::complex<double> f = a(i, c) / a(r, c);
      a.row(i) -= f * a.row(r);
    }
    ++r;
  }
  return r;
}

// |  ||g-h||^2 + ||g+h||^2 - 4 |  in the normalized Hilbert-Schmidt norm;
// zero (up to rounding) whenever g and h are unitary.
inline double parallelogram_residual(const Eigen::MatrixXcd& g, const Eigen::MatrixXcd& h) {
  double d = hs_norm(g - h);
  double s = hs_norm(g + h);
  return std::abs(d * d + s * s - 4.0);
}

enum class LengthTag : std::uint32_t {
  Trivial = 1u << 0,
  Hamming = 1u << 1,
  HilbertSchmidt = 1u << 2,
  Rank = 1u << 3,
  Lp = 1u << 4,
  WreathMax = 1u << 5,
  WreathAvg = 1u << 6,
  Rescaled = 1u << 7,
  // Set only when l([x,y]) <= 4 l(x) l(y) is guaranteed by construction.
  CommutatorContractive = 1u << 8,
};

// Invariant length function on a group: values in [0,1], zero exactly at the
// identity, symmetric under inversion, subadditive, conjugation-invariant.
// The handle records whether evaluation is exact in double arithmetic, which
// decides whether downstream bound comparisons get floating-point slack.
class LengthFunction {
 public:
  LengthFunction() = default;

  static LengthFunction custom(Group domain, std::function<double(const Element&)> eval,
                               std::uint32_t tags, bool exact, std::string name) {
    if (!domain.valid()) throw parameter_error("length function needs a domain");
    if (!eval) throw parameter_error("length function needs an evaluator");
    auto impl = std::make_shared<Impl>();
    impl->domain = std::move(domain);
    impl->eval = std::move(eval);
    impl->tags = tags;
    impl->exact = exact;
    impl->name = std::move(name);
    return LengthFunction(std::move(impl));
  }

  double operator()(const Element& x) const { return impl().eval(x); }
  const Group& domain() const { return impl().domain; }
  std::uint32_t tags() const { return impl().tags; }
  bool has_tag(LengthTag t) const { return impl().tags & static_cast<std::uint32_t>(t); }
  bool exact() const { return impl().exact; }
  const std::string& name() const { return impl().name; }
  bool valid() const { return impl_ != nullptr; }

 private:
  struct Impl {
    Group domain;
    std::function<double(const Element&)> eval;
    std::uint32_t tags = 0;
    bool exact = false;
    std::string name;
  };

  explicit LengthFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  const Impl& impl() const {
    if (!impl_) throw structural_error("empty length function handle");
    return *impl_;
  }

  std::shared_ptr<const Impl> impl_;
};

// value on every non-identity element; contractivity needs value >= 1/4
// (or a commutative domain, which the tag does not assume).
inline LengthFunction trivial_length(const Group& g, double value = 1.0) {
  if (!(value > 0.0 && value <= 1.0)) throw parameter_error("trivial length value must lie in (0,1]");
  std::uint32_t tags = static_cast<std::uint32_t>(LengthTag::Trivial);
  if (value >= 0.25) tags |= static_cast<std::uint32_t>(LengthTag::CommutatorContractive);
  std::string name = value == 1.0 ? "trivial" : "trivial*" + std::to_string(value);
  return LengthFunction::custom(
      g, [g, value](const Element& x) { return g.is_identity(x) ? 0.0 : value; }, tags,
      true, std::move(name));
}

// Proportion of points moved.  The values k/n are exact doubles only when the
// degree is a power of two; otherwise sums of values pick up rounding and the
// handle must not promise exactness (5/6 > 1/3 + 1/2 in double arithmetic).
inline LengthFunction hamming_length(const Group& g) {
  if (g.kind() != GroupKind::Symmetric)
    throw capability_error("hamming length needs a symmetric group");
  const std::uint32_t deg = g.symmetric_degree();
  const double n = deg;
  const bool dyadic = (deg & (deg - 1)) == 0;
  return LengthFunction::custom(
      g,
      [n](const Element& x) {
        const auto& im = x.as_perm();
        std::size_t moved = 0;
        for (std::size_t i = 0; i < im.size(); ++i)
          if (im[i] != i) ++moved;
        return static_cast<double>(moved) / n;
      },
      static_cast<std::uint32_t>(LengthTag::Hamming), dyadic, "hamming");
}

// Half the normalized Hilbert-Schmidt distance to the identity.
inline LengthFunction hilbert_schmidt_length(const Group& g) {
  if (g.kind() != GroupKind::Matrix)
    throw capability_error("hilbert-schmidt length needs a matrix group");
  const Eigen::Index n = g.matrix_size();
  return LengthFunction::custom(
      g,
      [n](const Element& x) {
        return 0.5 * hs_norm(x.as_matrix() - Eigen::MatrixXcd::Identity(n, n));
      },
      static_cast<std::uint32_t>(LengthTag::HilbertSchmidt), false, "hs");
}

// Normalized rank of I - g.
inline LengthFunction rank_length(const Group& g) {
  if (g.kind() != GroupKind::Matrix)
    throw capability_error("rank length needs a matrix group");
  const Eigen::Index n = g.matrix_size();
  return LengthFunction::custom(
      g,
      [n](const Element& x) {
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Identity(n, n) - x.as_matrix();
        return static_cast<double>(matrix_rank(std::move(d))) / static_cast<double>(n);
      },
      static_cast<std::uint32_t>(LengthTag::Rank), false, "rank");
}

// Mean of p-th powers (to the 1/p) across the two factors; max for infinite p.
// The max combination preserves contractivity of the inputs, the finite-p
// combinations do not.
inline LengthFunction lp_combine(const LengthFunction& lj, const LengthFunction& lk,
                                 Exponent p) {
  Group dom = Group::product(lj.domain(), lk.domain());
  std::uint32_t tags = static_cast<std::uint32_t>(LengthTag::Lp);
  bool exact = false;
  std::string name;
  std::function<double(const Element&)> eval;
  if (p.is_infinite()) {
    if (lj.has_tag(LengthTag::CommutatorContractive) &&
        lk.has_tag(LengthTag::CommutatorContractive))
      tags |= static_cast<std::uint32_t>(LengthTag::CommutatorContractive);
    exact = lj.exact() && lk.exact();
    name = "Linf(" + lj.name() + "," + lk.name() + ")";
    eval = [lj, lk](const Element& x) {
      return std::max(lj(x.pair_first()), lk(x.pair_second()));
    };
  } else {
    const double pw = p.p;
    name = "L" + std::to_string(pw) + "(" + lj.name() + "," + lk.name() + ")";
    eval = [lj, lk, pw](const Element& x) {
      double a = lj(x.pair_first());
      double b = lk(x.pair_second());
      return std::pow((std::pow(a, pw) + std::pow(b, pw)) / 2.0, 1.0 / pw);
    };
  }
  return LengthFunction::custom(std::move(dom), std::move(eval), tags, exact, std::move(name));
}

// 1 when the head moves, otherwise the largest base value.  Works for both
// wreath flavours; preserves contractivity of the bottom length.
inline LengthFunction wreath_max_length(const Group& w, const LengthFunction& bottom) {
  if (w.kind() == GroupKind::Wreath) {
    if (bottom.domain() != w.wreath_bottom())
      throw domain_error("bottom length does not match the wreath bottom group");
    std::uint32_t tags = static_cast<std::uint32_t>(LengthTag::WreathMax);
    if (bottom.has_tag(LengthTag::CommutatorContractive))
      tags |= static_cast<std::uint32_t>(LengthTag::CommutatorContractive);
    Group top = w.wreath_top();
    return LengthFunction::custom(
        w,
        [top, bottom](const Element& x) {
          if (!top.is_identity(x.wreath_head())) return 1.0;
          double m = 0.0;
          for (const auto& [k, v] : x.wreath_base()) m = std::max(m, bottom(v));
          return m;
        },
        tags, bottom.exact(), "wrmax(" + bottom.name() + ")");
  }
  if (w.kind() == GroupKind::PermWreath) {
    if (bottom.domain() != w.perm_wreath_bottom())
      throw domain_error("bottom length does not match the wreath bottom group");
    std::uint32_t tags = static_cast<std::uint32_t>(LengthTag::WreathMax);
    if (bottom.has_tag(LengthTag::CommutatorContractive))
      tags |= static_cast<std::uint32_t>(LengthTag::CommutatorContractive);
    const std::uint32_t n = w.perm_wreath_points();
    return LengthFunction::custom(
        w,
        [n, bottom](const Element& x) {
          const auto& h = x.perm_wreath_head();
          for (std::uint32_t i = 0; i < n; ++i)
            if (h[i] != i) return 1.0;
          double m = 0.0;
          for (const auto& [k, v] : x.perm_wreath_base()) m = std::max(m, bottom(v));
          return m;
        },
        tags, bottom.exact(), "wrmax(" + bottom.name() + ")");
  }
  throw capability_error("wreath max length needs a wreath group");
}

// Average over the points: bottom length where the head fixes the point,
// a full unit where it moves it.
inline LengthFunction wreath_avg_length(const Group& w, const LengthFunction& bottom) {
  if (w.kind() != GroupKind::PermWreath)
    throw capability_error("wreath average length needs a permutation wreath group");
  if (bottom.domain() != w.perm_wreath_bottom())
    throw domain_error("bottom length does not match the wreath bottom group");
  const std::uint32_t n = w.perm_wreath_points();
  Group bot = w.perm_wreath_bottom();
  return LengthFunction::custom(
      w,
      [n, bot, bottom, w](const Element& x) {
        const auto& h = x.perm_wreath_head();
        double acc = 0.0;
        for (std::uint32_t a = 0; a < n; ++a) {
          if (h[a] != a)
            acc += 1.0;
          else
            acc += bottom(w.perm_base_value(x, a));
        }
        return acc / static_cast<double>(n);
      },
      static_cast<std::uint32_t>(LengthTag::WreathAvg), false,
      "wravg(" + bottom.name() + ")");
}

// min(l/c, 1): inflates small values so a weight bound delta <= c can be
// traded for the constant bound 1 on the rescaled side.
inline LengthFunction rescale(const LengthFunction& l, double c) {
  if (!(c > 0.0 && c <= 1.0)) throw parameter_error("rescale constant must lie in (0,1]");
  std::uint32_t tags = l.tags() | static_cast<std::uint32_t>(LengthTag::Rescaled);
  return LengthFunction::custom(
      l.domain(), [l, c](const Element& x) { return std::min(l(x) / c, 1.0); }, tags,
      l.exact() && c == 1.0, "rescale(" + l.name() + ";" + std::to_string(c) + ")");
}

// ---------------------------------------------------------------------------
// axiom checking

struct AxiomViolation {
  std::string rule;
  Element x, y;  // y only set for binary rules
  double lhs = 0.0, rhs = 0.0;
};

struct CheckReport {
  std::uint64_t checks = 0;
  std::uint64_t violation_count = 0;
  std::vector<AxiomViolation> violations;  // capped sample of the above
  bool exhaustive = true;

  bool passed() const { return violation_count == 0; }
};

struct CheckOptions {
  // Points to test at; defaults to full enumeration of the domain.
  std::vector<Element> support;
  std::uint64_t seed = 0;
  std::uint64_t samples = 100000;
  // Exhaust all pairs when |support|^2 stays within this budget.
  std::uint64_t pair_budget = 1000000;
};

namespace detail {

inline constexpr std::size_t kViolationKeep = 100;

inline void record(CheckReport& r, std::string rule, const Element& x, const Element& y,
                   double lhs, double rhs) {
  ++r.violation_count;
  if (r.violations.size() < kViolationKeep)
    r.violations.push_back({std::move(rule), x, y, lhs, rhs});
}

template <typename Fn>
void for_each_pair(const std::vector<Element>& s, const CheckOptions& opt, CheckReport& r,
                   Fn fn) {
  const std::uint64_t n = s.size();
  if (n == 0) return;
  if (n * n <= opt.pair_budget) {
    for (const auto& x : s)
      for (const auto& y : s) fn(x, y);
  } else {
    r.exhaustive = false;
    SampleRng rng(opt.seed);
    for (std::uint64_t i = 0; i < opt.samples; ++i)
      fn(s[rng.next_below(n)], s[rng.next_below(n)]);
  }
}

}  // namespace detail

// Verifies the defining properties on the given support (or the whole group):
// vanishing exactly at the identity, values in [0,1], symmetry under
// inversion, subadditivity, and conjugation invariance.
inline CheckReport check_axioms(const LengthFunction& l, CheckOptions opt = {}) {
  const Group& g = l.domain();
  std::vector<Element> s = opt.support.empty() ? g.elements() : opt.support;
  CheckReport r;
  const double tol = l.exact() ? 0.0 : kAxiomTol;
  double id_val = l(g.id());
  ++r.checks;
  if (std::abs(id_val) > tol)
    detail::record(r, "identity", g.id(), Element(), id_val, 0.0);
  for (const auto& x : s) {
    double v = l(x);
    ++r.checks;
    if (v < 0.0 || v > 1.0 + tol) detail::record(r, "range", x, Element(), v, 1.0);
    if (!g.is_identity(x) && v <= tol)
      detail::record(r, "definiteness", x, Element(), v, 0.0);
    double vi = l(g.inv(x));
    ++r.checks;
    if (std::abs(v - vi) > tol) detail::record(r, "symmetry", x, Element(), vi, v);
  }
  detail::for_each_pair(s, opt, r, [&](const Element& x, const Element& y) {
    ++r.checks;
    double lhs = l(g.mul(x, y));
    double rhs = l(x) + l(y);
    if (lhs > rhs + tol) detail::record(r, "subadditivity", x, y, lhs, rhs);
    ++r.checks;
    double conj = l(g.conjugate(x, y));
    if (std::abs(conj - l(x)) > tol) detail::record(r, "conjugation", x, y, conj, l(x));
  });
  return r;
}

// l([x,y]) <= 4 l(x) l(y) over pairs from the support.
inline CheckReport check_commutator_contractive(const LengthFunction& l, CheckOptions opt = {}) {
  const Group& g = l.domain();
  std::vector<Element> s = opt.support.empty() ? g.elements() : opt.support;
  CheckReport r;
  const double tol = l.exact() ? 0.0 : kAxiomTol;
  detail::for_each_pair(s, opt, r, [&](const Element& x, const Element& y) {
    ++r.checks;
    double lhs = l(g.commutator(x, y));
    double rhs = 4.0 * l(x) * l(y);
    if (lhs > rhs + tol) detail::record(r, "contractivity", x, y, lhs, rhs);
  });
  return r;
}

// Largest value attained; needs an enumerable domain.
inline double length_diameter(const LengthFunction& l) {
  double m = 0.0;
  for (const auto& x : l.domain().elements()) m = std::max(m, l(x));
  return m;
}

}  // namespace grapp
