#include <gtest/gtest.h>

#include <string>

#include "grapp/scenario.hpp"

using namespace grapp;

namespace {

const char* kHammingScenario = R"({
  "version": 1,
  "task": "check-length",
  "groups": {"G": {"kind": "sym", "n": 4}},
  "lengths": {"ham": {"group": "G", "kind": "hamming"}},
  "params": {"length": "ham"}
})";

const char* kSkewQhomScenario = R"({
  "version": 1,
  "task": "check-qhom",
  "groups": {"G": {"kind": "cyclic", "m": 3}},
  "lengths": {"triv": {"group": "G", "kind": "trivial"}},
  "maps": {
    "phi": {
      "source": "G", "target": "G", "length": "triv",
      "assignments": [[{"lattice": [1]}, {"lattice": [1]}],
                      [{"lattice": [2]}, {"lattice": [0]}]],
      "window": [{"lattice": [1]}, {"lattice": [2]}],
      "epsilon": 0.1
    }
  },
  "params": {"map": "phi"}
})";

const char* kAmenableScenario = R"({
  "version": 1,
  "task": "build-amenable-ext",
  "groups": {"G": {"kind": "cyclic", "m": 6}, "K": {"kind": "cyclic", "m": 3}},
  "lengths": {"triv": {"group": "K", "kind": "trivial"}},
  "maps": {
    "psi": {
      "source": "G", "target": "K", "length": "triv",
      "assignments": [[{"lattice": [0]}, {"lattice": [0]}],
                      [{"lattice": [2]}, {"lattice": [1]}],
                      [{"lattice": [4]}, {"lattice": [2]}]],
      "window": [{"lattice": [2]}, {"lattice": [4]}],
      "epsilon": 0.0,
      "weight": 0.5
    }
  },
  "params": {"map": "psi", "quotient": {"kind": "mod", "m": 2},
             "window": [{"lattice": [1]}], "epsilon": 0.2}
})";

}  // namespace

TEST(ScenarioRun, HammingAxiomsPass) {
  ScenarioResult res = run_scenario_text(kHammingScenario);
  EXPECT_TRUE(res.pass);
  EXPECT_EQ(res.machine["verdict"], "pass");
  EXPECT_EQ(res.machine["task"], "check-length");
  EXPECT_EQ(res.machine["method"]["kind"], "exhaustive");
  ASSERT_EQ(res.machine["bounds"].size(), 1u);
  EXPECT_EQ(res.machine["bounds"][0]["name"], "axiom-violations");
  EXPECT_TRUE(res.machine["bounds"][0]["ok"].get<bool>());
  EXPECT_NE(res.text.find("verdict: pass"), std::string::npos);
  // the scenario document is echoed for audit
  EXPECT_EQ(res.machine["scenario"]["task"], "check-length");
}

TEST(ScenarioRun, ContractivityFlagCanFail) {
  const char* text = R"({
    "version": 1,
    "task": "check-length",
    "groups": {"G": {"kind": "sym", "n": 3}},
    "lengths": {"low": {"group": "G", "kind": "trivial", "value": 0.2}},
    "params": {"length": "low", "contractive": true}
  })";
  ScenarioResult res = run_scenario_text(text);
  EXPECT_FALSE(res.pass);
  EXPECT_EQ(res.machine["verdict"], "violation");
  bool found = false;
  for (const auto& b : res.machine["bounds"])
    if (b["name"] == "contractivity-violations") {
      found = true;
      EXPECT_FALSE(b["ok"].get<bool>());
    }
  EXPECT_TRUE(found);
}

TEST(ScenarioRun, QhomViolationReportsTheWorstPair) {
  ScenarioResult res = run_scenario_text(kSkewQhomScenario);
  EXPECT_FALSE(res.pass);
  EXPECT_DOUBLE_EQ(res.machine["defects"]["max-defect"].get<double>(), 1.0);
  EXPECT_NE(res.text.find("worst pair: (lat[1], lat[1])"), std::string::npos);
  bool found = false;
  for (const auto& b : res.machine["bounds"])
    if (b["name"] == "multiplicative-defect") {
      found = true;
      EXPECT_DOUBLE_EQ(b["measured"].get<double>(), 1.0);
      EXPECT_DOUBLE_EQ(b["limit"].get<double>(), 0.1);
      EXPECT_FALSE(b["ok"].get<bool>());
    }
  EXPECT_TRUE(found);
}

TEST(ScenarioRun, QhomModes) {
  const char* base = R"({
    "version": 1,
    "task": "check-qhom",
    "groups": {"G": {"kind": "cyclic", "m": 2}, "S": {"kind": "sym", "n": 2}},
    "lengths": {"ham": {"group": "S", "kind": "hamming"}},
    "maps": {
      "phi": {
        "source": "G", "target": "S", "length": "ham",
        "assignments": [[{"lattice": [1]}, {"perm": [1, 0]}]],
        "window": [{"lattice": [0]}, {"lattice": [1]}],
        "epsilon": 0.0
      }
    },
    "params": {"map": "phi", "mode": "MODE"PARAMS}
  })";
  auto with = [&](const std::string& mode, const std::string& extra) {
    std::string t = base;
    t.replace(t.find("MODE"), 4, mode);
    t.replace(t.find("PARAMS"), 6, extra);
    return t;
  };
  EXPECT_TRUE(run_scenario_text(with("discrete", ", \"c\": 1.0")).pass);
  EXPECT_TRUE(run_scenario_text(with("discrete", ", \"c\": 0.9")).pass);
  EXPECT_TRUE(run_scenario_text(with("strong", ", \"diameter\": 1.0")).pass);
  try {
    run_scenario_text(with("sideways", ""));
    FAIL() << "unknown mode accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::Schema);
    EXPECT_NE(std::string(e.what()).find("params.mode"), std::string::npos);
  }
}

TEST(ScenarioRun, QactionDefectBound) {
  const char* text = R"({
    "version": 1,
    "task": "check-qaction",
    "groups": {"G": {"kind": "cyclic", "m": 2}},
    "actions": {
      "a": {
        "source": "G", "points": 4,
        "images": [[{"lattice": [0]}, [0, 1, 2, 3]], [{"lattice": [1]}, [1, 2, 0, 3]]],
        "window": [{"lattice": [0]}, {"lattice": [1]}],
        "epsilon": EPS
      }
    },
    "params": {"action": "a"}
  })";
  auto with_eps = [&](const std::string& eps) {
    std::string t = text;
    t.replace(t.find("EPS"), 3, eps);
    return t;
  };
  ScenarioResult tight = run_scenario_text(with_eps("0.75"));
  EXPECT_TRUE(tight.pass);
  EXPECT_DOUBLE_EQ(tight.machine["defects"]["max-pair-defect"].get<double>(), 0.75);
  ScenarioResult loose = run_scenario_text(with_eps("0.5"));
  EXPECT_FALSE(loose.pass);
  ASSERT_EQ(loose.machine["bounds"].size(), 1u);
  EXPECT_EQ(loose.machine["bounds"][0]["name"], "pair-defect");
}

TEST(ScenarioRun, DirectProductAcceptsInfExponent) {
  const char* text = R"({
    "version": 1,
    "task": "build-direct-product",
    "groups": {"A": {"kind": "cyclic", "m": 2}, "S": {"kind": "sym", "n": 2}},
    "lengths": {"ham": {"group": "S", "kind": "hamming"}},
    "maps": {
      "phi": {
        "source": "A", "target": "S", "length": "ham",
        "assignments": [[{"lattice": [1]}, {"perm": [1, 0]}]],
        "window": [{"lattice": [0]}, {"lattice": [1]}],
        "epsilon": 0.0,
        "weight": 1.0
      }
    },
    "params": {"left": "phi", "right": "phi", "p": "inf"}
  })";
  ScenarioResult res = run_scenario_text(text);
  EXPECT_TRUE(res.pass);
  EXPECT_EQ(res.machine["witnesses"]["target"], "prod(Sym(2), Sym(2))");
  EXPECT_EQ(res.machine["witnesses"]["window-size"], 4);
  std::string finite = text;
  finite.replace(finite.find("\"inf\""), 5, "1");
  EXPECT_TRUE(run_scenario_text(finite).pass);
}

TEST(ScenarioRun, WreathBuildFindsTheModulus) {
  const char* text = R"({
    "version": 1,
    "task": "build-wreath",
    "groups": {"B": {"kind": "cyclic", "m": 2},
               "W": {"kind": "wreath", "bottom": {"kind": "cyclic", "m": 2},
                     "top": {"kind": "lattice", "d": 1}}},
    "lengths": {"triv": {"group": "B", "kind": "trivial"}},
    "maps": {
      "phi": {
        "source": "B", "target": "B", "length": "triv",
        "assignments": [[{"lattice": [1]}, {"lattice": [1]}]],
        "window": [{"lattice": [0]}, {"lattice": [1]}],
        "epsilon": 0.0,
        "weight": 1.0
      }
    },
    "params": {"map": "phi", "group": "W",
               "window": [{"wreath": {"head": {"lattice": [1]}, "base": []}},
                          {"wreath": {"head": {"lattice": [0]},
                                      "base": [[{"lattice": [0]}, {"lattice": [1]}]]}}]}
  })";
  ScenarioResult res = run_scenario_text(text);
  EXPECT_TRUE(res.pass);
  EXPECT_EQ(res.machine["witnesses"]["modulus"], 2);
  EXPECT_EQ(res.machine["witnesses"]["quotient"], "mod 2");
  EXPECT_NE(res.text.find("target: wr(Z/2, Z/2)"), std::string::npos);
}

TEST(ScenarioRun, SoficBuildReportsPointCounts) {
  const char* text = R"({
    "version": 1,
    "task": "build-sofic-wreath",
    "groups": {"B": {"kind": "cyclic", "m": 2},
               "W": {"kind": "wreath", "bottom": {"kind": "cyclic", "m": 2},
                     "top": {"kind": "cyclic", "m": 2}}},
    "actions": {
      "swap": {
        "source": "B", "points": 10,
        "images": [[{"lattice": [0]}, [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]],
                   [{"lattice": [1]}, [1, 0, 3, 2, 5, 4, 7, 6, 9, 8]]],
        "window": [{"lattice": [0]}, {"lattice": [1]}],
        "epsilon": 0.0
      }
    },
    "params": {"action": "swap", "group": "W", "epsilon": 0.2,
               "window": [{"wreath": {"head": {"lattice": [1]}, "base": []}},
                          {"wreath": {"head": {"lattice": [0]},
                                      "base": [[{"lattice": [0]}, {"lattice": [1]}]]}}]}
  })";
  ScenarioResult res = run_scenario_text(text);
  EXPECT_TRUE(res.pass);
  EXPECT_EQ(res.machine["witnesses"]["cosets"], 2);
  EXPECT_EQ(res.machine["witnesses"]["x-points"], 10);
  EXPECT_EQ(res.machine["witnesses"]["y-points"], 100);
  EXPECT_DOUBLE_EQ(res.machine["witnesses"]["fixed-point-bound"].get<double>(), 0.1);
  bool fix_bound = false;
  for (const auto& b : res.machine["bounds"])
    if (b["name"] == "head-moved-fixed-proportion") fix_bound = true;
  EXPECT_TRUE(fix_bound);
}

TEST(ScenarioRun, AmenableBuildEndToEnd) {
  ScenarioResult res = run_scenario_text(kAmenableScenario);
  EXPECT_TRUE(res.pass);
  EXPECT_EQ(res.machine["witnesses"]["folner"], "whole group");
  EXPECT_EQ(res.machine["witnesses"]["folner-size"], 2);
  EXPECT_DOUBLE_EQ(res.machine["witnesses"]["weight-constant"].get<double>(), 0.5);
  auto kw = res.machine["witnesses"]["kernel-window"];
  ASSERT_EQ(kw.size(), 2u);
  EXPECT_EQ(kw[0], "lat[0]");
  EXPECT_EQ(kw[1], "lat[2]");
  EXPECT_DOUBLE_EQ(res.machine["defects"]["max-defect"].get<double>(), 0.0);
  EXPECT_NE(res.text.find("target: wr(Z/3, Sym(2))"), std::string::npos);
}

TEST(ScenarioRun, ModShiftHeadThroughJson) {
  const char* text = R"({
    "version": 1,
    "task": "build-amenable-ext",
    "groups": {"G": {"kind": "product", "first": {"kind": "cyclic", "m": 3},
                     "second": {"kind": "lattice", "d": 1}},
               "K": {"kind": "cyclic", "m": 3}},
    "lengths": {"triv": {"group": "K", "kind": "trivial"}},
    "maps": {
      "psi": {
        "source": "G", "target": "K", "length": "triv",
        "assignments": [
          [{"pair": [{"lattice": [0]}, {"lattice": [0]}]}, {"lattice": [0]}],
          [{"pair": [{"lattice": [1]}, {"lattice": [0]}]}, {"lattice": [1]}],
          [{"pair": [{"lattice": [2]}, {"lattice": [0]}]}, {"lattice": [2]}]],
        "window": [{"pair": [{"lattice": [1]}, {"lattice": [0]}]}],
        "epsilon": 0.0,
        "weight": 0.5
      }
    },
    "params": {"map": "psi", "quotient": {"kind": "projection", "onto": "second"},
               "head": "mod-shift",
               "window": [{"pair": [{"lattice": [1]}, {"lattice": [0]}]},
                          {"pair": [{"lattice": [0]}, {"lattice": [1]}]}],
               "epsilon": 0.2}
  })";
  ScenarioResult res = run_scenario_text(text);
  EXPECT_TRUE(res.pass);
  EXPECT_EQ(res.machine["witnesses"]["box-radius"], 5);
  EXPECT_DOUBLE_EQ(res.machine["defects"]["max-defect"].get<double>(), 0.0);
  bool noted = false;
  for (const auto& l : res.machine["notes"])
    if (l == "head: reduction mod 11") noted = true;
  EXPECT_TRUE(noted);
}

TEST(ScenarioRun, OverridesForceSamplingDeterministically) {
  ScenarioOverrides ov;
  ov.budget = 300;  // Sym(4) has 576 pairs: forces sampling
  ov.samples = 200;
  ov.seed = 11;
  ScenarioResult a = run_scenario_text(kHammingScenario, ov);
  ScenarioResult b = run_scenario_text(kHammingScenario, ov);
  EXPECT_EQ(a.machine["method"]["kind"], "sampled");
  EXPECT_EQ(a.machine["method"]["seed"], 11);
  EXPECT_EQ(machine_report_string(a), machine_report_string(b));
  EXPECT_TRUE(a.pass);
}

TEST(ScenarioRun, MachineReportIsByteStable) {
  ScenarioResult a = run_scenario_text(kAmenableScenario);
  ScenarioResult b = run_scenario_text(kAmenableScenario);
  EXPECT_EQ(machine_report_string(a), machine_report_string(b));
  EXPECT_EQ(machine_report_string(a).back(), '\n');
}

TEST(ScenarioRun, SchemaErrorsNameTheField) {
  auto expect_schema = [](const std::string& text, const std::string& needle) {
    try {
      run_scenario_text(text);
      FAIL() << "expected a schema error mentioning " << needle;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), Error::Kind::Schema);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_schema(R"({"task": "check-length"})", "version");
  expect_schema(R"({"version": 2, "task": "check-length"})", "version");
  expect_schema(R"({"version": 1, "task": "mystery"})", "task");
  expect_schema(R"({"version": 1, "task": "check-length", "params": {"length": "nope"}})",
                "unresolved length name 'nope'");
  std::string bad_eps = kAmenableScenario;
  bad_eps.replace(bad_eps.find("\"epsilon\": 0.2"), 14, "\"epsilon\": -1.0");
  expect_schema(bad_eps, "params.epsilon: must be positive");
  expect_schema(R"({"version": 1, "task": )", "parse error");
}

TEST(ScenarioRun, ElementParsingValidatesAgainstTheGroup) {
  const char* text = R"({
    "version": 1,
    "task": "check-length",
    "groups": {"G": {"kind": "sym", "n": 3}},
    "lengths": {"ham": {"group": "G", "kind": "hamming"}},
    "params": {"length": "ham", "support": [{"perm": [0, 1]}]}
  })";
  EXPECT_THROW(run_scenario_text(text), Error);
}
