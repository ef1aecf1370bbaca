#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grapp/length.hpp"

namespace grapp {

// Weight profile: a required lower bound on the target length of each
// non-identity image.  The identity is exempt by definition.
class WeightFunction {
 public:
  WeightFunction() = default;

  static WeightFunction constant(double c) {
    if (!(c > 0.0 && c <= 1.0)) throw parameter_error("constant weight must lie in (0,1]");
    auto impl = std::make_shared<Impl>();
    impl->constant = c;
    impl->eval = [c](const Element&) { return c; };
    impl->name = "const(" + std::to_string(c) + ")";
    return WeightFunction(std::move(impl));
  }

  static WeightFunction custom(std::function<double(const Element&)> f, std::string name) {
    if (!f) throw parameter_error("weight function needs an evaluator");
    auto impl = std::make_shared<Impl>();
    impl->eval = std::move(f);
    impl->name = std::move(name);
    return WeightFunction(std::move(impl));
  }

  double operator()(const Element& x) const { return impl().eval(x); }
  bool is_constant() const { return impl().constant.has_value(); }
  double constant_value() const {
    if (!impl().constant) throw capability_error("weight is not constant");
    return *impl().constant;
  }
  const std::string& name() const { return impl().name; }
  bool valid() const { return impl_ != nullptr; }

 private:
  struct Impl {
    std::function<double(const Element&)> eval;
    std::optional<double> constant;
    std::string name;
  };

  explicit WeightFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  const Impl& impl() const {
    if (!impl_) throw structural_error("empty weight function handle");
    return *impl_;
  }

  std::shared_ptr<const Impl> impl_;
};

// Partial map from a source group into a target group carrying the data a
// defect computation needs: the finite window F, the tolerance epsilon, the
// target length, and (optionally) a weight profile.  The identity always maps
// to the identity; other assignments are explicit, and evaluating the map
// outside them is a coverage error.
class ApproxMap {
 public:
  ApproxMap() = default;

  static ApproxMap create(Group source, Group target, LengthFunction target_length,
                          std::vector<std::pair<Element, Element>> assignments,
                          std::vector<Element> window, double epsilon,
                          WeightFunction weight = {}) {
    if (!source.valid() || !target.valid()) throw parameter_error("map needs source and target");
    if (!target_length.valid()) throw parameter_error("map needs a target length");
    if (target_length.domain() != target)
      throw domain_error("target length lives on a different group");
    if (!(epsilon >= 0.0)) throw parameter_error("epsilon must be non-negative");
    auto impl = std::make_shared<Impl>();
    impl->source = std::move(source);
    impl->target = std::move(target);
    impl->target_length = std::move(target_length);
    impl->epsilon = epsilon;
    impl->weight = std::move(weight);
    for (auto& [k, v] : assignments) {
      impl->source.validate(k);
      impl->target.validate(v);
      Element ck = impl->source.canonicalize(k);
      Element cv = impl->target.canonicalize(v);
      if (impl->source.is_identity(ck) && !impl->target.is_identity(cv))
        throw structural_error("the identity must map to the identity");
      impl->assignments.emplace_back(std::move(ck), std::move(cv));
    }
    impl->assignments.emplace_back(impl->source.id(), impl->target.id());
    std::sort(impl->assignments.begin(), impl->assignments.end(),
              [](const auto& a, const auto& b) { return Element::compare(a.first, b.first) < 0; });
    for (std::size_t i = 1; i < impl->assignments.size(); ++i)
      if (impl->assignments[i - 1].first == impl->assignments[i].first) {
        if (impl->assignments[i - 1].second != impl->assignments[i].second)
          throw structural_error("conflicting assignments for " +
                                 impl->assignments[i].first.describe());
        impl->assignments.erase(impl->assignments.begin() + static_cast<std::ptrdiff_t>(i));
        --i;
      }
    for (auto& f : window) {
      impl->source.validate(f);
      impl->window.push_back(impl->source.canonicalize(f));
    }
    std::sort(impl->window.begin(), impl->window.end(),
              [](const Element& a, const Element& b) { return Element::compare(a, b) < 0; });
    impl->window.erase(std::unique(impl->window.begin(), impl->window.end()),
                       impl->window.end());
    return ApproxMap(std::move(impl));
  }

  const Element* find(const Element& x) const {
    Element cx = impl().source.canonicalize(x);
    const auto& as = impl().assignments;
    auto it = std::lower_bound(
        as.begin(), as.end(), cx,
        [](const auto& a, const Element& k) { return Element::compare(a.first, k) < 0; });
    if (it == as.end() || it->first != cx) return nullptr;
    return &it->second;
  }

  Element apply(const Element& x) const {
    if (const Element* v = find(x)) return *v;
    throw coverage_error("map has no assignment for " + x.describe());
  }

  bool defined(const Element& x) const { return find(x) != nullptr; }

  const Group& source() const { return impl().source; }
  const Group& target() const { return impl().target; }
  const LengthFunction& target_length() const { return impl().target_length; }
  const std::vector<std::pair<Element, Element>>& assignments() const {
    return impl().assignments;
  }
  const std::vector<Element>& window() const { return impl().window; }
  double epsilon() const { return impl().epsilon; }
  const WeightFunction& weight() const { return impl().weight; }
  bool valid() const { return impl_ != nullptr; }

 private:
  struct Impl {
    Group source, target;
    LengthFunction target_length;
    std::vector<std::pair<Element, Element>> assignments;
    std::vector<Element> window;
    double epsilon = 0.0;
    WeightFunction weight;
  };

  explicit ApproxMap(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  const Impl& impl() const {
    if (!impl_) throw structural_error("empty map handle");
    return *impl_;
  }

  std::shared_ptr<const Impl> impl_;
};

// l_K( phi(gh) phi(h)^-1 phi(g)^-1 ): how far the map is from being a
// homomorphism at the pair (g, h).
inline double multiplicative_defect(const ApproxMap& m, const Element& g, const Element& h) {
  const Group& t = m.target();
  Element lhs = m.apply(m.source().mul(g, h));
  Element rhs = t.mul(t.inv(m.apply(h)), t.inv(m.apply(g)));
  return m.target_length()(t.mul(lhs, rhs));
}

struct PairDefect {
  Element g, h;
  double defect = 0.0;
};

struct WeightSlack {
  Element g;
  double required = 0.0;
  double actual = 0.0;

  double slack() const { return actual - required; }
};

struct DefectReport {
  double max_defect = 0.0;
  Element argmax_g, argmax_h;
  std::vector<PairDefect> worst_pairs;  // capped sample of pairs at/near the max
  std::uint64_t pair_count = 0;
  bool exhaustive = true;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<WeightSlack> weights;  // one entry per non-identity window element
  double min_weight_slack = std::numeric_limits<double>::infinity();
  std::vector<std::string> notes;
};

struct DefectOptions {
  std::uint64_t seed = 0;
  std::uint64_t samples = 100000;
  // Exhaust F x F when the total evaluation count stays within this budget.
  std::uint64_t eval_budget = 1000000;
};

namespace detail {

inline constexpr std::size_t kWorstPairKeep = 16;

inline void note_pair(DefectReport& r, const Element& g, const Element& h, double d) {
  if (d > r.max_defect || r.pair_count == 1) {
    r.max_defect = d;
    r.argmax_g = g;
    r.argmax_h = h;
  }
  if (r.worst_pairs.size() < kWorstPairKeep)
    r.worst_pairs.push_back({g, h, d});
  else {
    std::size_t lo = 0;
    for (std::size_t i = 1; i < r.worst_pairs.size(); ++i)
      if (r.worst_pairs[i].defect < r.worst_pairs[lo].defect) lo = i;
    if (d > r.worst_pairs[lo].defect) r.worst_pairs[lo] = {g, h, d};
  }
}

}  // namespace detail

// Measures the multiplicative defect over the window and the length of each
// image against the weight profile.  Pairs are exhausted when |F|^2 fits the
// budget, otherwise sampled with the given seed.
inline DefectReport defect_report(const ApproxMap& m, DefectOptions opt = {},
                                  std::function<double(const Element&)> required_weight = {}) {
  const auto& f = m.window();
  DefectReport r;
  const std::uint64_t n = f.size();
  if (n == 0) {
    r.notes.push_back("empty window");
    return r;
  }
  if (n * n <= opt.eval_budget) {
    for (const auto& g : f)
      for (const auto& h : f) {
        ++r.pair_count;
        detail::note_pair(r, g, h, multiplicative_defect(m, g, h));
      }
  } else {
    r.exhaustive = false;
    r.seed = opt.seed;
    SampleRng rng(opt.seed);
    for (std::uint64_t i = 0; i < opt.samples; ++i) {
      const Element& g = f[rng.next_below(n)];
      const Element& h = f[rng.next_below(n)];
      ++r.pair_count;
      ++r.samples;
      detail::note_pair(r, g, h, multiplicative_defect(m, g, h));
    }
  }
  if (!required_weight && m.weight().valid())
    required_weight = [&m](const Element& x) { return m.weight()(x); };
  if (required_weight) {
    for (const auto& g : f) {
      if (m.source().is_identity(g)) continue;  // exempt by definition
      WeightSlack ws;
      ws.g = g;
      ws.required = required_weight(g);
      ws.actual = m.target_length()(m.apply(g));
      r.min_weight_slack = std::min(r.min_weight_slack, ws.slack());
      r.weights.push_back(std::move(ws));
    }
    r.notes.push_back("identity exempt from the weight bound");
  } else {
    r.notes.push_back("no weight profile supplied");
  }
  return r;
}

struct QhomVerdict {
  bool defect_ok = false;
  bool weight_ok = false;
  DefectReport report;

  bool ok() const { return defect_ok && weight_ok; }
};

namespace detail {

inline QhomVerdict finish_verdict(const ApproxMap& m, DefectReport r) {
  QhomVerdict v;
  const bool exact = m.target_length().exact();
  v.defect_ok = leq_with_tol(r.max_defect, m.epsilon(), exact);
  v.weight_ok = true;
  for (const auto& ws : r.weights)
    if (!leq_with_tol(ws.required, ws.actual, exact)) v.weight_ok = false;
  v.report = std::move(r);
  return v;
}

}  // namespace detail

// Defect bounded by epsilon; image lengths bounded below by the map's own
// weight profile.
inline QhomVerdict check_quasi_homomorphism(const ApproxMap& m, DefectOptions opt = {}) {
  return detail::finish_verdict(m, defect_report(m, opt));
}

// Same with the constant weight c.
inline QhomVerdict check_discrete_quasi_homomorphism(const ApproxMap& m, double c,
                                                     DefectOptions opt = {}) {
  if (!(c > 0.0 && c <= 1.0)) throw parameter_error("discreteness constant must lie in (0,1]");
  auto rep = defect_report(m, opt, [c](const Element&) { return c; });
  return detail::finish_verdict(m, std::move(rep));
}

// Image lengths must come within epsilon of the given diameter of the target
// length (use length_diameter for enumerable targets).
inline QhomVerdict check_strong_quasi_homomorphism(const ApproxMap& m, double diameter,
                                                   DefectOptions opt = {}) {
  if (!(diameter > 0.0 && diameter <= 1.0)) throw parameter_error("diameter must lie in (0,1]");
  double bound = std::max(diameter - m.epsilon(), 0.0);
  auto rep = defect_report(m, opt, [bound](const Element&) { return bound; });
  rep.notes.push_back("strong mode: weight bound = diameter - epsilon");
  return detail::finish_verdict(m, std::move(rep));
}

// ---------------------------------------------------------------------------
// quasi-actions

// Approximate action of a group window on a finite point set: images of the
// window elements are given either as explicit permutation tables or as an
// evaluation closure (for point sets far too large to tabulate).
class QuasiAction {
 public:
  QuasiAction() = default;

  static QuasiAction table(Group source, std::uint64_t points,
                           std::vector<std::pair<Element, std::vector<std::uint32_t>>> images,
                           std::vector<Element> window, double epsilon) {
    auto impl = std::make_shared<Impl>();
    init(*impl, std::move(source), points, std::move(window), epsilon);
    for (auto& [k, v] : images) {
      impl->source.validate(k);
      if (v.size() != points) throw structural_error("action image has wrong degree");
      Element p = Element::perm(v);  // validates bijectivity
      impl->images.emplace_back(impl->source.canonicalize(k), std::move(v));
      (void)p;
    }
    std::sort(impl->images.begin(), impl->images.end(),
              [](const auto& a, const auto& b) { return Element::compare(a.first, b.first) < 0; });
    for (std::size_t i = 1; i < impl->images.size(); ++i)
      if (impl->images[i - 1].first == impl->images[i].first)
        throw structural_error("conflicting action images");
    return QuasiAction(std::move(impl));
  }

  static QuasiAction closure(Group source, std::uint64_t points,
                             std::function<std::uint64_t(const Element&, std::uint64_t)> act,
                             std::vector<Element> window, double epsilon) {
    if (!act) throw parameter_error("quasi-action needs an evaluator");
    auto impl = std::make_shared<Impl>();
    init(*impl, std::move(source), points, std::move(window), epsilon);
    impl->act = std::move(act);
    return QuasiAction(std::move(impl));
  }

  std::uint64_t act(const Element& g, std::uint64_t p) const {
    if (p >= impl().points) throw parameter_error("point index out of range");
    if (impl().act) return impl().act(g, p);
    Element cg = impl().source.canonicalize(g);
    const auto& im = impl().images;
    auto it = std::lower_bound(
        im.begin(), im.end(), cg,
        [](const auto& a, const Element& k) { return Element::compare(a.first, k) < 0; });
    if (it == im.end() || it->first != cg)
      throw coverage_error("action has no image for " + g.describe());
    return it->second[static_cast<std::size_t>(p)];
  }

  bool tabulated() const { return !impl().act; }
  const Group& source() const { return impl().source; }
  std::uint64_t points() const { return impl().points; }
  const std::vector<Element>& window() const { return impl().window; }
  double epsilon() const { return impl().epsilon; }
  const std::vector<std::pair<Element, std::vector<std::uint32_t>>>& images() const {
    return impl().images;
  }
  bool valid() const { return impl_ != nullptr; }

 private:
  struct Impl {
    Group source;
    std::uint64_t points = 0;
    std::vector<std::pair<Element, std::vector<std::uint32_t>>> images;
    std::function<std::uint64_t(const Element&, std::uint64_t)> act;
    std::vector<Element> window;
    double epsilon = 0.0;
  };

  static void init(Impl& impl, Group source, std::uint64_t points,
                   std::vector<Element> window, double epsilon) {
    if (!source.valid()) throw parameter_error("quasi-action needs a source group");
    if (points == 0) throw parameter_error("quasi-action needs a non-empty point set");
    if (!(epsilon >= 0.0)) throw parameter_error("epsilon must be non-negative");
    impl.source = std::move(source);
    impl.points = points;
    for (auto& f : window) {
      impl.source.validate(f);
      impl.window.push_back(impl.source.canonicalize(f));
    }
    std::sort(impl.window.begin(), impl.window.end(),
              [](const Element& a, const Element& b) { return Element::compare(a, b) < 0; });
    impl.window.erase(std::unique(impl.window.begin(), impl.window.end()), impl.window.end());
    impl.epsilon = epsilon;
  }

  explicit QuasiAction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  const Impl& impl() const {
    if (!impl_) throw structural_error("empty quasi-action handle");
    return *impl_;
  }

  std::shared_ptr<const Impl> impl_;
};

struct ActionDefectReport {
  // Largest disagreement proportion between acting by gh and acting by g then h.
  double max_pair_defect = 0.0;
  Element argmax_g, argmax_h;
  // Largest fixed-point proportion over non-identity window elements.
  double max_fix = 0.0;
  Element argmax_fix;
  std::uint64_t pair_count = 0;
  std::uint64_t points_per_pair = 0;
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;
};

// Point budget semantics match defect_report: |F|^2 * |Y| evaluations when
// exhausting, otherwise `samples` random points per pair.
inline ActionDefectReport quasi_action_defect(const QuasiAction& qa, DefectOptions opt = {}) {
  const auto& f = qa.window();
  ActionDefectReport r;
  const std::uint64_t n = f.size();
  const std::uint64_t y = qa.points();
  if (n == 0) {
    r.notes.push_back("empty window");
    return r;
  }
  bool exhaustive = true;
  if (y > opt.eval_budget || n * n > opt.eval_budget / y) exhaustive = false;
  r.exhaustive = exhaustive;
  r.points_per_pair = exhaustive ? y : opt.samples;
  if (!exhaustive) r.seed = opt.seed;
  SampleRng rng(opt.seed);
  std::vector<std::uint64_t> pts;
  if (!exhaustive) {
    pts.reserve(opt.samples);
    for (std::uint64_t i = 0; i < opt.samples; ++i) pts.push_back(rng.next_below(y));
  }
  auto each_point = [&](auto fn) {
    if (exhaustive)
      for (std::uint64_t p = 0; p < y; ++p) fn(p);
    else
      for (std::uint64_t p : pts) fn(p);
  };
  const Group& g = qa.source();
  for (const auto& a : f) {
    for (const auto& b : f) {
      ++r.pair_count;
      Element ab = g.mul(a, b);
      std::uint64_t bad = 0, total = 0;
      each_point([&](std::uint64_t p) {
        ++total;
        if (qa.act(b, qa.act(a, p)) != qa.act(ab, p)) ++bad;
      });
      double d = total ? static_cast<double>(bad) / static_cast<double>(total) : 0.0;
      if (d > r.max_pair_defect || r.pair_count == 1) {
        r.max_pair_defect = d;
        r.argmax_g = a;
        r.argmax_h = b;
      }
    }
    if (!g.is_identity(a)) {
      std::uint64_t fixed = 0, total = 0;
      each_point([&](std::uint64_t p) {
        ++total;
        if (qa.act(a, p) == p) ++fixed;
      });
      double d = total ? static_cast<double>(fixed) / static_cast<double>(total) : 0.0;
      if (d >= r.max_fix) {
        r.max_fix = d;
        r.argmax_fix = a;
      }
    }
  }
  return r;
}

// Share of points an element leaves in place, exhausted or sampled under the
// same budget rule as quasi_action_defect.
inline double fixed_proportion(const QuasiAction& qa, const Element& g, DefectOptions opt = {}) {
  const std::uint64_t y = qa.points();
  std::uint64_t fixed = 0, total = 0;
  if (y <= opt.eval_budget) {
    for (std::uint64_t p = 0; p < y; ++p) {
      ++total;
      if (qa.act(g, p) == p) ++fixed;
    }
  } else {
    SampleRng rng(opt.seed);
    for (std::uint64_t i = 0; i < opt.samples; ++i) {
      std::uint64_t p = rng.next_below(y);
      ++total;
      if (qa.act(g, p) == p) ++fixed;
    }
  }
  return static_cast<double>(fixed) / static_cast<double>(total);
}

// Tabulated quasi-actions are approximation maps into the symmetric group of
// the point set carrying the proportion-moved length; pair disagreement there
// coincides with the multiplicative defect here.
inline ApproxMap quasi_action_to_map(const QuasiAction& qa) {
  if (!qa.tabulated())
    throw capability_error("only a tabulated quasi-action converts to a map");
  if (qa.points() > (1u << 20))
    throw capability_error("point set too large to convert");
  Group sym = Group::symmetric(static_cast<std::uint32_t>(qa.points()));
  std::vector<std::pair<Element, Element>> assignments;
  assignments.reserve(qa.images().size());
  for (const auto& [k, v] : qa.images())
    assignments.emplace_back(k, Element::perm(v));
  return ApproxMap::create(qa.source(), sym, hamming_length(sym), std::move(assignments),
                           qa.window(), qa.epsilon());
}

}  // namespace grapp
