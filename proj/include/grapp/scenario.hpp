#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "grapp/construct.hpp"

namespace grapp {

using Json = nlohmann::json;

// Command-line overrides; set fields win over scenario params.
struct ScenarioOverrides {
  std::optional<std::uint64_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
};

struct ScenarioResult {
  bool pass = true;
  Json machine;
  std::string text;
};

namespace detail {

[[noreturn]] inline void schema_fail(const std::string& where, const std::string& what) {
  throw schema_error(where + ": " + what);
}

inline const Json& need(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) schema_fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

inline std::string need_string(const Json& j, const char* key, const std::string& where) {
  const Json& v = need(j, key, where);
  if (!v.is_string()) schema_fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

inline double need_number(const Json& j, const char* key, const std::string& where) {
  const Json& v = need(j, key, where);
  if (!v.is_number()) schema_fail(where + "." + key, "expected a number");
  return v.get<double>();
}

inline std::int64_t need_int(const Json& j, const char* key, const std::string& where) {
  const Json& v = need(j, key, where);
  if (!v.is_number_integer()) schema_fail(where + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::uint64_t need_uint(const Json& j, const char* key, const std::string& where) {
  std::int64_t v = need_int(j, key, where);
  if (v < 0) schema_fail(where + "." + key, "expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

inline std::string opt_string(const Json& j, const char* key, const std::string& dflt,
                              const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  const Json& v = j.at(key);
  if (!v.is_string()) schema_fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

// ---------------------------------------------------------------------------
// descriptors

inline Group parse_group(const Json& j, const std::string& where) {
  std::string kind = need_string(j, "kind", where);
  if (kind == "sym") {
    std::int64_t n = need_int(j, "n", where);
    if (n < 1) schema_fail(where + ".n", "degree must be positive");
    return Group::symmetric(static_cast<std::uint32_t>(n));
  }
  if (kind == "cyclic") {
    std::int64_t m = need_int(j, "m", where);
    if (m < 1) schema_fail(where + ".m", "modulus must be positive");
    return Group::modular({m});
  }
  if (kind == "modular") {
    const Json& ms = need(j, "m", where);
    if (!ms.is_array() || ms.empty()) schema_fail(where + ".m", "expected a non-empty array");
    std::vector<std::int64_t> moduli;
    for (const auto& v : ms) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
        schema_fail(where + ".m", "moduli must be positive integers");
      moduli.push_back(v.get<std::int64_t>());
    }
    return Group::modular(std::move(moduli));
  }
  if (kind == "lattice") {
    std::int64_t d = need_int(j, "d", where);
    if (d < 1) schema_fail(where + ".d", "dimension must be positive");
    return Group::lattice(static_cast<std::uint32_t>(d));
  }
  if (kind == "table") {
    const Json& mul = need(j, "mul", where);
    if (!mul.is_array()) schema_fail(where + ".mul", "expected an array of rows");
    std::vector<std::vector<std::uint32_t>> rows;
    for (const auto& row : mul) {
      if (!row.is_array()) schema_fail(where + ".mul", "expected an array of rows");
      std::vector<std::uint32_t> r;
      for (const auto& v : row) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
          schema_fail(where + ".mul", "entries must be non-negative indices");
        r.push_back(v.get<std::uint32_t>());
      }
      rows.push_back(std::move(r));
    }
    return Group::table(std::move(rows));
  }
  if (kind == "product")
    return Group::product(parse_group(need(j, "first", where), where + ".first"),
                          parse_group(need(j, "second", where), where + ".second"));
  if (kind == "wreath")
    return Group::wreath(parse_group(need(j, "bottom", where), where + ".bottom"),
                         parse_group(need(j, "top", where), where + ".top"));
  if (kind == "perm-wreath") {
    std::int64_t n = need_int(j, "points", where);
    if (n < 1) schema_fail(where + ".points", "point count must be positive");
    return Group::perm_wreath(parse_group(need(j, "bottom", where), where + ".bottom"),
                              static_cast<std::uint32_t>(n));
  }
  if (kind == "unitary") {
    std::int64_t n = need_int(j, "n", where);
    if (n < 1) schema_fail(where + ".n", "size must be positive");
    return Group::unitary(static_cast<std::uint32_t>(n));
  }
  if (kind == "gl") {
    std::int64_t n = need_int(j, "n", where);
    if (n < 1) schema_fail(where + ".n", "size must be positive");
    return Group::general_linear(static_cast<std::uint32_t>(n));
  }
  schema_fail(where + ".kind", "unknown group kind '" + kind + "'");
}

inline Element parse_element(const Json& j, const Group& g, const std::string& where) {
  if (!j.is_object() || j.size() != 1) schema_fail(where, "expected a one-key element object");
  const std::string key = j.begin().key();
  const Json& v = j.begin().value();
  Element out;
  if (key == "perm") {
    if (!v.is_array()) schema_fail(where + ".perm", "expected an array");
    std::vector<std::uint32_t> images;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
        schema_fail(where + ".perm", "entries must be non-negative indices");
      images.push_back(e.get<std::uint32_t>());
    }
    out = Element::perm(std::move(images));
  } else if (key == "lattice") {
    if (!v.is_array()) schema_fail(where + ".lattice", "expected an array");
    std::vector<std::int64_t> coords;
    for (const auto& e : v) {
      if (!e.is_number_integer()) schema_fail(where + ".lattice", "entries must be integers");
      coords.push_back(e.get<std::int64_t>());
    }
    out = Element::lattice(std::move(coords));
  } else if (key == "table") {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      schema_fail(where + ".table", "expected a non-negative index");
    out = Element::table(v.get<std::uint32_t>());
  } else if (key == "pair") {
    if (!v.is_array() || v.size() != 2) schema_fail(where + ".pair", "expected two entries");
    if (g.kind() != GroupKind::Product) schema_fail(where, "pair element needs a product group");
    out = Element::pair(parse_element(v[0], g.product_first(), where + ".pair[0]"),
                        parse_element(v[1], g.product_second(), where + ".pair[1]"));
  } else if (key == "matrix") {
    if (!v.is_array() || v.empty()) schema_fail(where + ".matrix", "expected rows");
    const std::size_t n = v.size();
    Eigen::MatrixXcd m(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      const Json& row = v[r];
      if (!row.is_array() || row.size() != n)
        schema_fail(where + ".matrix", "expected a square row-major layout");
      for (std::size_t c = 0; c < n; ++c) {
        const Json& cell = row[c];
        if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() || !cell[1].is_number())
          schema_fail(where + ".matrix", "entries must be [re, im] pairs");
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            std::complex<double>(cell[0].get<double>(), cell[1].get<double>());
      }
    }
    out = Element::matrix(std::move(m));
  } else if (key == "wreath") {
    if (g.kind() != GroupKind::Wreath) schema_fail(where, "wreath element needs a wreath group");
    Element head = parse_element(need(v, "head", where + ".wreath"), g.wreath_top(),
                                 where + ".wreath.head");
    const Json& base = need(v, "base", where + ".wreath");
    if (!base.is_array()) schema_fail(where + ".wreath.base", "expected an array of [key, val]");
    std::vector<std::pair<Element, Element>> entries;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const Json& kv = base[i];
      if (!kv.is_array() || kv.size() != 2)
        schema_fail(where + ".wreath.base", "expected [key, val] pairs");
      entries.emplace_back(
          parse_element(kv[0], g.wreath_top(), where + ".wreath.base.key"),
          parse_element(kv[1], g.wreath_bottom(), where + ".wreath.base.val"));
    }
    return g.make_wreath(head, entries);
  } else if (key == "perm-wreath") {
    if (g.kind() != GroupKind::PermWreath)
      schema_fail(where, "perm-wreath element needs a perm-wreath group");
    const Json& head = need(v, "head", where + ".perm-wreath");
    if (!head.is_array()) schema_fail(where + ".perm-wreath.head", "expected an array");
    std::vector<std::uint32_t> images;
    for (const auto& e : head) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
        schema_fail(where + ".perm-wreath.head", "entries must be non-negative indices");
      images.push_back(e.get<std::uint32_t>());
    }
    const Json& base = need(v, "base", where + ".perm-wreath");
    if (!base.is_array())
      schema_fail(where + ".perm-wreath.base", "expected an array of [point, val]");
    std::vector<std::pair<std::uint32_t, Element>> entries;
    for (const auto& kv : base) {
      if (!kv.is_array() || kv.size() != 2 || !kv[0].is_number_integer())
        schema_fail(where + ".perm-wreath.base", "expected [point, val] pairs");
      entries.emplace_back(kv[0].get<std::uint32_t>(),
                           parse_element(kv[1], g.perm_wreath_bottom(),
                                         where + ".perm-wreath.base.val"));
    }
    return g.make_perm_wreath(std::move(images), entries);
  } else {
    schema_fail(where, "unknown element form '" + key + "'");
  }
  g.validate(out);
  return g.canonicalize(out);
}

inline std::vector<Element> parse_elements(const Json& j, const Group& g,
                                           const std::string& where) {
  if (!j.is_array()) schema_fail(where, "expected an array of elements");
  std::vector<Element> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_element(j[i], g, where + "[" + std::to_string(i) + "]"));
  return out;
}

inline Exponent parse_exponent(const Json& j, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return Exponent::infinity();
    schema_fail(where, "expected a number or \"inf\"");
  }
  if (!j.is_number()) schema_fail(where, "expected a number or \"inf\"");
  return Exponent::finite(j.get<double>());
}

inline LengthFunction parse_length(const Json& j, const Group& g, const std::string& where) {
  std::string kind = need_string(j, "kind", where);
  if (kind == "trivial") {
    double value = 1.0;
    if (j.contains("value")) value = need_number(j, "value", where);
    return trivial_length(g, value);
  }
  if (kind == "hamming") return hamming_length(g);
  if (kind == "hs") return hilbert_schmidt_length(g);
  if (kind == "rank") return rank_length(g);
  if (kind == "lp") {
    if (g.kind() != GroupKind::Product) schema_fail(where, "lp length needs a product group");
    return lp_combine(parse_length(need(j, "left", where), g.product_first(), where + ".left"),
                      parse_length(need(j, "right", where), g.product_second(), where + ".right"),
                      parse_exponent(need(j, "p", where), where + ".p"));
  }
  if (kind == "wreath-max") {
    const Group& bottom =
        g.kind() == GroupKind::PermWreath ? g.perm_wreath_bottom() : g.wreath_bottom();
    return wreath_max_length(g, parse_length(need(j, "bottom", where), bottom, where + ".bottom"));
  }
  if (kind == "wreath-avg")
    return wreath_avg_length(
        g, parse_length(need(j, "bottom", where), g.perm_wreath_bottom(), where + ".bottom"));
  if (kind == "rescale")
    return rescale(parse_length(need(j, "inner", where), g, where + ".inner"),
                   need_number(j, "c", where));
  schema_fail(where + ".kind", "unknown length kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// named objects

struct ScenarioSet {
  std::map<std::string, Group> groups;
  std::map<std::string, LengthFunction> lengths;
  std::map<std::string, ApproxMap> maps;
  std::map<std::string, QuasiAction> actions;
};

template <typename T>
const T& lookup(const std::map<std::string, T>& m, const std::string& name,
                const std::string& what) {
  auto it = m.find(name);
  if (it == m.end()) schema_fail("scenario", "unresolved " + what + " name '" + name + "'");
  return it->second;
}

inline const Group& group_ref(const ScenarioSet& s, const Json& j, const char* key,
                              const std::string& where) {
  return lookup(s.groups, need_string(j, key, where), "group");
}

inline ScenarioSet parse_scenario_set(const Json& doc) {
  ScenarioSet s;
  if (doc.contains("groups")) {
    const Json& gs = doc.at("groups");
    if (!gs.is_object()) schema_fail("groups", "expected an object");
    for (auto it = gs.begin(); it != gs.end(); ++it)
      s.groups.emplace(it.key(), parse_group(it.value(), "groups." + it.key()));
  }
  if (doc.contains("lengths")) {
    const Json& ls = doc.at("lengths");
    if (!ls.is_object()) schema_fail("lengths", "expected an object");
    for (auto it = ls.begin(); it != ls.end(); ++it) {
      const std::string where = "lengths." + it.key();
      const Group& g = group_ref(s, it.value(), "group", where);
      s.lengths.emplace(it.key(), parse_length(it.value(), g, where));
    }
  }
  if (doc.contains("maps")) {
    const Json& ms = doc.at("maps");
    if (!ms.is_object()) schema_fail("maps", "expected an object");
    for (auto it = ms.begin(); it != ms.end(); ++it) {
      const std::string where = "maps." + it.key();
      const Json& m = it.value();
      const Group& source = group_ref(s, m, "source", where);
      const Group& target = group_ref(s, m, "target", where);
      const LengthFunction& len = lookup(s.lengths, need_string(m, "length", where), "length");
      double eps = need_number(m, "epsilon", where);
      if (eps < 0.0) schema_fail(where + ".epsilon", "must be non-negative");
      const Json& as = need(m, "assignments", where);
      if (!as.is_array()) schema_fail(where + ".assignments", "expected an array");
      std::vector<std::pair<Element, Element>> assignments;
      for (std::size_t i = 0; i < as.size(); ++i) {
        const Json& kv = as[i];
        const std::string pw = where + ".assignments[" + std::to_string(i) + "]";
        if (!kv.is_array() || kv.size() != 2) schema_fail(pw, "expected [source, image] pairs");
        assignments.emplace_back(parse_element(kv[0], source, pw + "[0]"),
                                 parse_element(kv[1], target, pw + "[1]"));
      }
      std::vector<Element> window =
          parse_elements(need(m, "window", where), source, where + ".window");
      WeightFunction weight;
      if (m.contains("weight")) {
        const Json& w = m.at("weight");
        if (!w.is_number()) schema_fail(where + ".weight", "expected a constant in (0,1]");
        weight = WeightFunction::constant(w.get<double>());
      }
      s.maps.emplace(it.key(), ApproxMap::create(source, target, len, std::move(assignments),
                                                 std::move(window), eps, std::move(weight)));
    }
  }
  if (doc.contains("actions")) {
    const Json& as = doc.at("actions");
    if (!as.is_object()) schema_fail("actions", "expected an object");
    for (auto it = as.begin(); it != as.end(); ++it) {
      const std::string where = "actions." + it.key();
      const Json& a = it.value();
      const Group& source = group_ref(s, a, "source", where);
      std::uint64_t points = need_uint(a, "points", where);
      double eps = need_number(a, "epsilon", where);
      if (eps < 0.0) schema_fail(where + ".epsilon", "must be non-negative");
      const Json& im = need(a, "images", where);
      if (!im.is_array()) schema_fail(where + ".images", "expected an array");
      std::vector<std::pair<Element, std::vector<std::uint32_t>>> images;
      for (std::size_t i = 0; i < im.size(); ++i) {
        const Json& kv = im[i];
        const std::string pw = where + ".images[" + std::to_string(i) + "]";
        if (!kv.is_array() || kv.size() != 2 || !kv[1].is_array())
          schema_fail(pw, "expected [element, table] pairs");
        std::vector<std::uint32_t> table;
        for (const auto& e : kv[1]) {
          if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
            schema_fail(pw + "[1]", "table entries must be non-negative indices");
          table.push_back(e.get<std::uint32_t>());
        }
        images.emplace_back(parse_element(kv[0], source, pw + "[0]"), std::move(table));
      }
      std::vector<Element> window =
          parse_elements(need(a, "window", where), source, where + ".window");
      s.actions.emplace(it.key(), QuasiAction::table(source, points, std::move(images),
                                                     std::move(window), eps));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// providers

inline std::optional<QuotientMap> parse_quotient(const Json& j, const Group& source,
                                                 const std::string& where) {
  std::string kind = need_string(j, "kind", where);
  if (kind == "auto-min-mod" || kind == "auto") return std::nullopt;
  if (kind == "mod") return mod_quotient(source, need_int(j, "m", where));
  if (kind == "identity") return identity_quotient(source);
  if (kind == "projection") {
    std::string onto = opt_string(j, "onto", "second", where);
    if (onto != "first" && onto != "second")
      schema_fail(where + ".onto", "expected \"first\" or \"second\"");
    return projection_quotient(source, onto == "second");
  }
  schema_fail(where + ".kind", "unknown quotient kind '" + kind + "'");
}

inline std::optional<FolnerSet> parse_folner(const Json& j, const Group& image,
                                             const std::string& where) {
  std::string kind = need_string(j, "kind", where);
  if (kind == "auto") return std::nullopt;
  if (kind == "box") return folner_box(image, need_int(j, "m", where), {});
  schema_fail(where + ".kind", "unknown witness kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// report assembly

struct Bound {
  std::string name;
  double measured = 0.0;
  double limit = 0.0;
  bool lower = false;  // true: measured must be >= limit
  bool ok = false;
};

inline Json bound_json(const Bound& b) {
  return Json{{"name", b.name},
              {"measured", b.measured},
              {"limit", b.limit},
              {"relation", b.lower ? ">=" : "<="},
              {"ok", b.ok}};
}

inline Json defect_json(const DefectReport& r) {
  Json out;
  out["max-defect"] = r.max_defect;
  out["argmax"] = r.pair_count
                      ? Json::array({r.argmax_g.describe(), r.argmax_h.describe()})
                      : Json::array();
  out["pairs"] = r.pair_count;
  out["exhaustive"] = r.exhaustive;
  if (!r.exhaustive) {
    out["samples"] = r.samples;
    out["seed"] = r.seed;
  }
  std::vector<PairDefect> worst = r.worst_pairs;
  std::sort(worst.begin(), worst.end(), [](const PairDefect& a, const PairDefect& b) {
    if (a.defect != b.defect) return a.defect > b.defect;
    if (int c = Element::compare(a.g, b.g)) return c < 0;
    return Element::compare(a.h, b.h) < 0;
  });
  Json pairs = Json::array();
  for (const auto& p : worst)
    pairs.push_back(Json{{"g", p.g.describe()}, {"h", p.h.describe()}, {"defect", p.defect}});
  out["worst-pairs"] = std::move(pairs);
  if (r.weights.empty()) {
    out["min-weight-slack"] = nullptr;
  } else {
    out["min-weight-slack"] = r.min_weight_slack;
    Json ws = Json::array();
    for (const auto& w : r.weights)
      ws.push_back(Json{{"g", w.g.describe()}, {"required", w.required}, {"actual", w.actual}});
    out["weights"] = std::move(ws);
  }
  out["notes"] = r.notes;
  return out;
}

inline Json check_json(const CheckReport& r) {
  Json out;
  out["checks"] = r.checks;
  out["violations"] = r.violation_count;
  out["exhaustive"] = r.exhaustive;
  Json vs = Json::array();
  for (const auto& v : r.violations) {
    Json e;
    e["rule"] = v.rule;
    e["x"] = v.x.valid() ? v.x.describe() : "";
    e["y"] = v.y.valid() ? v.y.describe() : "";
    e["lhs"] = v.lhs;
    e["rhs"] = v.rhs;
    vs.push_back(std::move(e));
  }
  out["violation-sample"] = std::move(vs);
  return out;
}

inline Json action_json(const ActionDefectReport& r) {
  Json out;
  out["max-pair-defect"] = r.max_pair_defect;
  out["argmax"] = r.pair_count
                      ? Json::array({r.argmax_g.describe(), r.argmax_h.describe()})
                      : Json::array();
  out["max-fixed"] = r.max_fix;
  out["argmax-fixed"] = r.argmax_fix.valid() ? r.argmax_fix.describe() : "";
  out["pairs"] = r.pair_count;
  out["points-per-pair"] = r.points_per_pair;
  out["exhaustive"] = r.exhaustive;
  if (!r.exhaustive) out["seed"] = r.seed;
  out["notes"] = r.notes;
  return out;
}

struct ReportBuilder {
  Json machine;
  std::vector<Bound> bounds;
  std::vector<std::string> lines;
  std::vector<std::string> notes;

  ReportBuilder(const Json& doc, const std::string& task) {
    machine["version"] = 1;
    machine["task"] = task;
    machine["scenario"] = doc;
    line("task: " + task);
  }

  void line(std::string s) { lines.push_back(std::move(s)); }

  void note(std::string s) {
    line("note: " + s);
    notes.push_back(std::move(s));
  }

  void bound(std::string name, double measured, double limit, bool lower, bool ok) {
    std::ostringstream os;
    os << (ok ? "ok    " : "FAIL  ") << name << ": " << measured << (lower ? " >= " : " <= ")
       << limit;
    line(os.str());
    bounds.push_back({std::move(name), measured, limit, lower, ok});
  }

  void method(bool exhaustive, std::uint64_t count, std::uint64_t seed) {
    Json m;
    m["kind"] = exhaustive ? "exhaustive" : "sampled";
    m["evaluations"] = count;
    if (!exhaustive) m["seed"] = seed;
    machine["method"] = std::move(m);
    std::ostringstream os;
    os << "method: " << (exhaustive ? "exhaustive" : "sampled") << ", evaluations: " << count;
    if (!exhaustive) os << ", seed: " << seed;
    line(os.str());
  }

  ScenarioResult finish() {
    ScenarioResult res;
    res.pass = true;
    Json bs = Json::array();
    for (const auto& b : bounds) {
      if (!b.ok) res.pass = false;
      bs.push_back(bound_json(b));
    }
    machine["bounds"] = std::move(bs);
    machine["notes"] = notes;
    machine["verdict"] = res.pass ? "pass" : "violation";
    line(res.pass ? "verdict: pass" : "verdict: violation");
    std::ostringstream os;
    for (const auto& l : lines) os << l << "\n";
    res.text = os.str();
    res.machine = std::move(machine);
    return res;
  }
};

// ---------------------------------------------------------------------------
// task runners

struct RunParams {
  std::uint64_t budget = 1'000'000;
  std::uint64_t seed = 0;
  std::uint64_t samples = 100'000;

  DefectOptions defect_options() const { return DefectOptions{seed, samples, budget}; }
};

inline RunParams effective_params(const Json& params, const ScenarioOverrides& ov) {
  RunParams p;
  if (params.contains("budget")) p.budget = need_uint(params, "budget", "params");
  if (params.contains("seed")) p.seed = need_uint(params, "seed", "params");
  if (params.contains("samples")) p.samples = need_uint(params, "samples", "params");
  if (ov.budget) p.budget = *ov.budget;
  if (ov.seed) p.seed = *ov.seed;
  if (ov.samples) p.samples = *ov.samples;
  if (p.budget == 0) schema_fail("params.budget", "must be positive");
  if (p.samples == 0) schema_fail("params.samples", "must be positive");
  return p;
}

inline double positive_epsilon(const Json& params, const std::string& where) {
  double eps = need_number(params, "epsilon", where);
  if (!(eps > 0.0)) schema_fail(where + ".epsilon", "must be positive");
  return eps;
}

inline void emit_qhom(ReportBuilder& rb, const ApproxMap& m, const QhomVerdict& v) {
  rb.machine["defects"] = defect_json(v.report);
  rb.method(v.report.exhaustive, v.report.pair_count, v.report.seed);
  rb.bound("multiplicative-defect", v.report.max_defect, m.epsilon(), false, v.defect_ok);
  if (!v.report.weights.empty())
    rb.bound("min-weight-slack", v.report.min_weight_slack, 0.0, true, v.weight_ok);
  if (v.report.pair_count && v.report.max_defect > 0.0)
    rb.line("worst pair: (" + v.report.argmax_g.describe() + ", " +
            v.report.argmax_h.describe() + ") defect " + std::to_string(v.report.max_defect));
}

inline ScenarioResult run_check_length(const Json& doc, const ScenarioSet& set,
                                       const Json& params, const RunParams& rp) {
  const LengthFunction& len =
      lookup(set.lengths, need_string(params, "length", "params"), "length");
  CheckOptions opt;
  opt.seed = rp.seed;
  opt.samples = rp.samples;
  opt.pair_budget = rp.budget;
  if (params.contains("support"))
    opt.support = parse_elements(params.at("support"), len.domain(), "params.support");
  ReportBuilder rb(doc, "check-length");
  rb.line("length: " + len.name() + " on " + len.domain().name());
  CheckReport rep = check_axioms(len, opt);
  rb.machine["checks"] = check_json(rep);
  rb.method(rep.exhaustive, rep.checks, rp.seed);
  rb.bound("axiom-violations", static_cast<double>(rep.violation_count), 0.0, false,
           rep.passed());
  for (const auto& v : rep.violations)
    rb.line("violated " + v.rule + " at (" + (v.x.valid() ? v.x.describe() : "-") + ", " +
            (v.y.valid() ? v.y.describe() : "-") + ")");
  if (params.contains("contractive") && params.at("contractive").is_boolean() &&
      params.at("contractive").get<bool>()) {
    CheckReport cc = check_commutator_contractive(len, opt);
    rb.machine["contractive"] = check_json(cc);
    rb.bound("contractivity-violations", static_cast<double>(cc.violation_count), 0.0, false,
             cc.passed());
  }
  return rb.finish();
}

inline ScenarioResult run_check_qhom(const Json& doc, const ScenarioSet& set, const Json& params,
                                     const RunParams& rp) {
  const ApproxMap& m = lookup(set.maps, need_string(params, "map", "params"), "map");
  std::string mode = opt_string(params, "mode", "plain", "params");
  ReportBuilder rb(doc, "check-qhom");
  rb.line("map: " + m.source().name() + " -> " + m.target().name());
  QhomVerdict v;
  if (mode == "plain") {
    v = check_quasi_homomorphism(m, rp.defect_options());
  } else if (mode == "discrete") {
    v = check_discrete_quasi_homomorphism(m, need_number(params, "c", "params"),
                                          rp.defect_options());
  } else if (mode == "strong") {
    v = check_strong_quasi_homomorphism(m, need_number(params, "diameter", "params"),
                                        rp.defect_options());
  } else {
    schema_fail("params.mode", "unknown mode '" + mode + "'");
  }
  rb.line("mode: " + mode);
  emit_qhom(rb, m, v);
  return rb.finish();
}

inline ScenarioResult run_check_qaction(const Json& doc, const ScenarioSet& set,
                                        const Json& params, const RunParams& rp) {
  const QuasiAction& qa = lookup(set.actions, need_string(params, "action", "params"), "action");
  ReportBuilder rb(doc, "check-qaction");
  rb.line("action: " + qa.source().name() + " on " + std::to_string(qa.points()) + " points");
  ActionDefectReport rep = quasi_action_defect(qa, rp.defect_options());
  rb.machine["defects"] = action_json(rep);
  rb.method(rep.exhaustive, rep.pair_count * rep.points_per_pair, rp.seed);
  rb.bound("pair-defect", rep.max_pair_defect, qa.epsilon(), false,
           leq_with_tol(rep.max_pair_defect, qa.epsilon(), rep.exhaustive));
  return rb.finish();
}

inline ScenarioResult run_build_direct_product(const Json& doc, const ScenarioSet& set,
                                               const Json& params, const RunParams& rp) {
  const ApproxMap& left = lookup(set.maps, need_string(params, "left", "params"), "map");
  const ApproxMap& right = lookup(set.maps, need_string(params, "right", "params"), "map");
  Exponent p = parse_exponent(need(params, "p", "params"), "params.p");
  ApproxMap out = build_direct_product(left, right, p);
  ReportBuilder rb(doc, "build-direct-product");
  rb.line("target: " + out.target().name());
  rb.machine["witnesses"] =
      Json{{"target", out.target().name()}, {"window-size", out.window().size()}};
  QhomVerdict v = check_quasi_homomorphism(out, rp.defect_options());
  emit_qhom(rb, out, v);
  return rb.finish();
}

inline Json describe_all(const std::vector<Element>& es) {
  Json out = Json::array();
  for (const auto& e : es) out.push_back(e.describe());
  return out;
}

inline ScenarioResult run_build_wreath(const Json& doc, const ScenarioSet& set,
                                       const Json& params, const RunParams& rp) {
  const ApproxMap& phi = lookup(set.maps, need_string(params, "map", "params"), "map");
  const Group& w = lookup(set.groups, need_string(params, "group", "params"), "group");
  if (w.kind() != GroupKind::Wreath) schema_fail("params.group", "must name a wreath group");
  std::vector<Element> window =
      parse_elements(need(params, "window", "params"), w, "params.window");
  std::optional<QuotientMap> q;
  if (params.contains("quotient"))
    q = parse_quotient(params.at("quotient"), w.wreath_top(), "params.quotient");
  WreathScenario sc = build_wreath(phi, w, window, std::move(q));
  ReportBuilder rb(doc, "build-wreath");
  rb.line("target: " + sc.target.name());
  rb.line("quotient: " + sc.quotient.description());
  Json wit;
  wit["quotient"] = sc.quotient.description();
  if (sc.quotient.modulus()) wit["modulus"] = *sc.quotient.modulus();
  wit["top-window"] = describe_all(sc.top_window);
  wit["base-values"] = describe_all(sc.base_values);
  rb.machine["witnesses"] = std::move(wit);
  for (const auto& n : sc.notes) rb.note(n);
  QhomVerdict v = check_quasi_homomorphism(sc.map, rp.defect_options());
  emit_qhom(rb, sc.map, v);
  return rb.finish();
}

inline ScenarioResult run_build_sofic_wreath(const Json& doc, const ScenarioSet& set,
                                             const Json& params, const RunParams& rp) {
  double eps = positive_epsilon(params, "params");
  const QuasiAction& qa = lookup(set.actions, need_string(params, "action", "params"), "action");
  const Group& w = lookup(set.groups, need_string(params, "group", "params"), "group");
  if (w.kind() != GroupKind::Wreath) schema_fail("params.group", "must name a wreath group");
  std::vector<Element> window =
      parse_elements(need(params, "window", "params"), w, "params.window");
  std::optional<QuotientMap> q;
  if (params.contains("quotient"))
    q = parse_quotient(params.at("quotient"), w.wreath_top(), "params.quotient");
  SoficWreathScenario sc = build_sofic_wreath(qa, w, window, eps, std::move(q));
  ReportBuilder rb(doc, "build-sofic-wreath");
  rb.line("points: |X|^cosets = " + std::to_string(sc.action.points()));
  Json wit;
  wit["quotient"] = sc.quotient.description();
  if (sc.quotient.modulus()) wit["modulus"] = *sc.quotient.modulus();
  wit["top-window"] = describe_all(sc.top_window);
  wit["base-values"] = describe_all(sc.base_values);
  wit["cosets"] = sc.cosets;
  wit["x-points"] = sc.x_points;
  wit["y-points"] = sc.action.points();
  wit["fixed-point-bound"] = sc.fixed_point_bound;
  rb.machine["witnesses"] = std::move(wit);
  for (const auto& n : sc.notes) rb.note(n);
  ActionDefectReport rep = quasi_action_defect(sc.action, rp.defect_options());
  rb.machine["defects"] = action_json(rep);
  rb.method(rep.exhaustive, rep.pair_count * rep.points_per_pair, rp.seed);
  rb.bound("pair-defect", rep.max_pair_defect, eps, false,
           leq_with_tol(rep.max_pair_defect, eps, rep.exhaustive));
  double worst_fix = 0.0;
  bool any_moved = false;
  for (const auto& f : sc.action.window()) {
    if (w.wreath_top().is_identity(f.wreath_head())) continue;
    any_moved = true;
    worst_fix = std::max(worst_fix, fixed_proportion(sc.action, f, rp.defect_options()));
  }
  if (any_moved)
    rb.bound("head-moved-fixed-proportion", worst_fix, sc.fixed_point_bound, false,
             leq_with_tol(worst_fix, sc.fixed_point_bound, rep.exhaustive));
  return rb.finish();
}

inline ScenarioResult run_build_amenable(const Json& doc, const ScenarioSet& set,
                                         const Json& params, const RunParams& rp) {
  double eps = positive_epsilon(params, "params");
  const ApproxMap& psi = lookup(set.maps, need_string(params, "map", "params"), "map");
  std::optional<QuotientMap> q =
      parse_quotient(need(params, "quotient", "params"), psi.source(), "params.quotient");
  if (!q) schema_fail("params.quotient", "this task needs an explicit quotient");
  std::vector<Element> window =
      parse_elements(need(params, "window", "params"), psi.source(), "params.window");
  std::string head = opt_string(params, "head", "completed", "params");
  CompletionOrder order = CompletionOrder::Ascending;
  std::string order_name = opt_string(params, "order", "ascending", "params");
  if (order_name == "descending")
    order = CompletionOrder::Descending;
  else if (order_name != "ascending")
    schema_fail("params.order", "expected \"ascending\" or \"descending\"");
  std::optional<FolnerSet> folner;
  if (params.contains("folner"))
    folner = parse_folner(params.at("folner"), q->image(), "params.folner");
  AmenableScenario sc;
  if (head == "completed") {
    sc = build_amenable_extension(psi, *q, window, eps, order, std::move(folner));
  } else if (head == "mod-shift") {
    sc = build_amenable_extension_mod_shift(psi, *q, window, eps, std::move(folner));
  } else {
    schema_fail("params.head", "expected \"completed\" or \"mod-shift\"");
  }
  ReportBuilder rb(doc, "build-amenable-ext");
  rb.line("target: " + sc.map.target().name());
  Json wit;
  wit["quotient"] = sc.quotient.description();
  wit["folner"] = sc.folner.description;
  wit["folner-size"] = sc.folner.size();
  if (sc.folner.box_radius) wit["box-radius"] = *sc.folner.box_radius;
  wit["section-size"] = sc.section_set.size();
  wit["kernel-window"] = describe_all(sc.kernel_window);
  wit["weight-constant"] = sc.weight_constant;
  rb.machine["witnesses"] = std::move(wit);
  for (const auto& n : sc.notes) rb.note(n);
  QhomVerdict v = check_quasi_homomorphism(sc.map, rp.defect_options());
  emit_qhom(rb, sc.map, v);
  return rb.finish();
}

}  // namespace detail

// Executes one scenario document and renders both report formats.  Schema and
// structural problems throw; bound violations come back as pass = false.
inline ScenarioResult run_scenario(const Json& doc, const ScenarioOverrides& ov = {}) {
  using namespace detail;
  if (!doc.is_object()) schema_fail("scenario", "expected a top-level object");
  if (!doc.contains("version") || !doc.at("version").is_number_integer() ||
      doc.at("version").get<std::int64_t>() != 1)
    schema_fail("version", "expected the integer 1");
  std::string task = need_string(doc, "task", "scenario");
  ScenarioSet set = parse_scenario_set(doc);
  Json params = doc.contains("params") ? doc.at("params") : Json::object();
  if (!params.is_object()) schema_fail("params", "expected an object");
  RunParams rp = effective_params(params, ov);
  if (task == "check-length") return run_check_length(doc, set, params, rp);
  if (task == "check-qhom") return run_check_qhom(doc, set, params, rp);
  if (task == "check-qaction") return run_check_qaction(doc, set, params, rp);
  if (task == "build-direct-product") return run_build_direct_product(doc, set, params, rp);
  if (task == "build-wreath") return run_build_wreath(doc, set, params, rp);
  if (task == "build-sofic-wreath") return run_build_sofic_wreath(doc, set, params, rp);
  if (task == "build-amenable-ext") return run_build_amenable(doc, set, params, rp);
  schema_fail("task", "unknown task '" + task + "'");
}

// Parses the scenario text first, converting parse problems into schema
// errors carrying the parser's position diagnostics.
inline ScenarioResult run_scenario_text(const std::string& text,
                                        const ScenarioOverrides& ov = {}) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw schema_error(e.what());
  }
  return run_scenario(doc, ov);
}

// Machine report serialized with a trailing newline; key order is fixed by
// the JSON library, so identical runs produce identical bytes.
inline std::string machine_report_string(const ScenarioResult& res) {
  return res.machine.dump(2) + "\n";
}

}  // namespace grapp
