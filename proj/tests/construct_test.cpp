#include <gtest/gtest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "grapp/construct.hpp"
#include "oracles.hpp"

using namespace grapp;

namespace {

Element lat(std::int64_t v) { return Element::lattice({v}); }

ApproxMap bottom_identity_map(const Group& z2) {
  return ApproxMap::create(z2, z2, trivial_length(z2), {{lat(1), lat(1)}}, {lat(0), lat(1)},
                           0.0, WeightFunction::constant(1.0));
}

// phi : Z/3 -> Sym(3) with maximal defect 1 (3-cycle and transposition images).
ApproxMap skew_map(double epsilon, double weight) {
  Group z3 = Group::modular({3});
  Group s3 = Group::symmetric(3);
  return ApproxMap::create(z3, s3, hamming_length(s3),
                           {{lat(1), Element::perm({1, 2, 0})}, {lat(2), Element::perm({1, 0, 2})}},
                           {lat(0), lat(1), lat(2)}, epsilon, WeightFunction::constant(weight));
}

ApproxMap swap_map(double weight) {
  Group z2 = Group::modular({2});
  Group s2 = Group::symmetric(2);
  return ApproxMap::create(z2, s2, hamming_length(s2), {{lat(1), Element::perm({1, 0})}},
                           {lat(0), lat(1)}, 0.0, WeightFunction::constant(weight));
}

std::vector<std::int64_t> first_coords(const std::vector<Element>& es) {
  std::vector<std::int64_t> out;
  for (const auto& e : es) out.push_back(e.as_lattice()[0]);
  return out;
}

}  // namespace

TEST(EssentialSets, SupportsMeetTranslatedHeads) {
  Group w = Group::wreath(Group::modular({2}), Group::modular({3}));
  Element x = w.make_wreath(lat(2), {{lat(1), lat(1)}});
  auto top = essential_top_set(w, {x});
  EXPECT_EQ(first_coords(top), (std::vector<std::int64_t>{0, 1, 2}));
  auto base = essential_base_values(w, {x});
  EXPECT_EQ(first_coords(base), (std::vector<std::int64_t>{0, 1}));

  Group lamp = Group::wreath(Group::modular({2}), Group::lattice(1));
  Element t = lamp.make_wreath(lat(1), {});
  Element d0 = lamp.make_wreath(lat(0), {{lat(0), lat(1)}});
  auto small = essential_top_set(lamp, {t, d0});
  EXPECT_EQ(first_coords(small), (std::vector<std::int64_t>{0, 1}));
  EXPECT_THROW(essential_top_set(Group::symmetric(3), {}), Error);
}

TEST(DirectProduct, ExactInputsStayExact) {
  ApproxMap mg = swap_map(1.0);
  Group z3 = Group::modular({3});
  Group s3 = Group::symmetric(3);
  std::vector<std::pair<Element, Element>> a;
  std::vector<Element> f;
  for (std::int64_t g = 0; g < 3; ++g) {
    std::vector<std::uint32_t> images;
    for (std::uint32_t i = 0; i < 3; ++i)
      images.push_back(static_cast<std::uint32_t>((i + g) % 3));
    a.emplace_back(lat(g), Element::perm(images));
    f.push_back(lat(g));
  }
  ApproxMap rot = ApproxMap::create(z3, s3, hamming_length(s3), std::move(a), std::move(f),
                                    0.0, WeightFunction::constant(1.0));
  for (Exponent p : {Exponent::infinity(), Exponent::finite(1.0)}) {
    ApproxMap out = build_direct_product(mg, rot, p);
    EXPECT_EQ(out.window().size(), 6u);
    EXPECT_DOUBLE_EQ(out.epsilon(), 0.0);
    QhomVerdict v = check_quasi_homomorphism(out);
    EXPECT_TRUE(v.ok());
    EXPECT_DOUBLE_EQ(v.report.max_defect, 0.0);
  }
}

TEST(DirectProduct, KeepsTheWorseEpsilon) {
  ApproxMap out = build_direct_product(skew_map(1.0, 0.5), swap_map(1.0), Exponent::infinity());
  EXPECT_DOUBLE_EQ(out.epsilon(), 1.0);
  QhomVerdict v = check_quasi_homomorphism(out);
  EXPECT_TRUE(v.ok());
  EXPECT_DOUBLE_EQ(v.report.max_defect, 1.0);
  EXPECT_GE(v.report.min_weight_slack, 0.0);
}

TEST(DirectProduct, RequiresWeightProfiles) {
  Group z2 = Group::modular({2});
  Group s2 = Group::symmetric(2);
  ApproxMap bare = ApproxMap::create(z2, s2, hamming_length(s2),
                                     {{lat(1), Element::perm({1, 0})}}, {lat(0), lat(1)}, 0.0);
  EXPECT_THROW(build_direct_product(bare, swap_map(1.0), Exponent::infinity()), Error);
}

TEST(WreathConstruction, LamplighterCollapsesToModTwo) {
  Group w = Group::wreath(Group::modular({2}), Group::lattice(1));
  Element t = w.make_wreath(lat(1), {});
  Element d0 = w.make_wreath(lat(0), {{lat(0), lat(1)}});
  WreathScenario sc = build_wreath(bottom_identity_map(w.wreath_bottom()), w, {t, d0});
  EXPECT_EQ(sc.quotient.description(), "mod 2");
  ASSERT_TRUE(sc.quotient.modulus().has_value());
  EXPECT_EQ(*sc.quotient.modulus(), oracle::min_separating_modulus({0, 1}));
  EXPECT_EQ(sc.target.name(), "wr(Z/2, Z/2)");
  EXPECT_EQ(sc.top_window.size(), 2u);
  EXPECT_EQ(sc.base_values.size(), 2u);
  EXPECT_DOUBLE_EQ(sc.map.epsilon(), 0.0);
  QhomVerdict v = check_quasi_homomorphism(sc.map);
  EXPECT_TRUE(v.ok());
  EXPECT_DOUBLE_EQ(v.report.max_defect, 0.0);
}

TEST(WreathConstruction, NoisyBottomKeepsItsDefect) {
  Group z2 = Group::modular({2});
  Group s4 = Group::symmetric(4);
  // image of the generator is a 3-cycle: the map is off by 3/4 at (1,1)
  ApproxMap phi = ApproxMap::create(z2, s4, hamming_length(s4),
                                    {{lat(1), Element::perm({1, 2, 0, 3})}}, {lat(0), lat(1)},
                                    0.75, WeightFunction::constant(0.5));
  EXPECT_DOUBLE_EQ(defect_report(phi).max_defect, 0.75);

  Group w = Group::wreath(z2, Group::lattice(1));
  Element t = w.make_wreath(lat(1), {});
  Element tinv = w.inv(t);
  Element d0 = w.make_wreath(lat(0), {{lat(0), lat(1)}});
  Element d5 = w.make_wreath(lat(0), {{lat(5), lat(1)}});
  WreathScenario sc = build_wreath(phi, w, {t, d0, d5, tinv});
  EXPECT_EQ(first_coords(sc.top_window), (std::vector<std::int64_t>{-1, 0, 1, 4, 5, 6}));
  ASSERT_TRUE(sc.quotient.modulus().has_value());
  EXPECT_EQ(*sc.quotient.modulus(), oracle::min_separating_modulus({-1, 0, 1, 4, 5, 6}));
  EXPECT_EQ(*sc.quotient.modulus(), 8);
  QhomVerdict v = check_quasi_homomorphism(sc.map);
  EXPECT_TRUE(v.ok());
  EXPECT_DOUBLE_EQ(v.report.max_defect, 0.75);
}

TEST(WreathConstruction, ExplicitQuotientMustSeparate) {
  Group w = Group::wreath(Group::modular({2}), Group::lattice(1));
  Element t = w.make_wreath(lat(1), {});
  Element d0 = w.make_wreath(lat(0), {{lat(0), lat(1)}});
  ApproxMap phi = bottom_identity_map(w.wreath_bottom());
  WreathScenario sc = build_wreath(phi, w, {t, d0}, mod_quotient(Group::lattice(1), 3));
  EXPECT_EQ(sc.target.name(), "wr(Z/2, Z/3)");
  EXPECT_TRUE(check_quasi_homomorphism(sc.map).ok());
  try {
    build_wreath(phi, w, {t, d0}, mod_quotient(Group::lattice(1), 1));
    FAIL() << "collapsing quotient accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("fails to separate"), std::string::npos);
  }
}

TEST(SoficConstruction, SwapPairsActionScalesUp) {
  Group z2 = Group::modular({2});
  Group w = Group::wreath(z2, z2);
  std::vector<std::uint32_t> idp(100), swap(100);
  for (std::uint32_t i = 0; i < 100; ++i) {
    idp[i] = i;
    swap[i] = i ^ 1u;
  }
  QuasiAction qa = QuasiAction::table(z2, 100, {{lat(0), idp}, {lat(1), swap}},
                                      {lat(0), lat(1)}, 0.0);
  Element t = w.make_wreath(lat(1), {});
  Element d0 = w.make_wreath(lat(0), {{lat(0), lat(1)}});
  SoficWreathScenario sc = build_sofic_wreath(qa, w, {t, d0}, 0.02);
  EXPECT_EQ(sc.cosets, 2u);
  EXPECT_EQ(sc.x_points, 100u);
  EXPECT_EQ(sc.action.points(), 10000u);
  EXPECT_DOUBLE_EQ(sc.fixed_point_bound, 0.01);
  ActionDefectReport r = quasi_action_defect(sc.action);
  EXPECT_TRUE(r.exhaustive);
  EXPECT_DOUBLE_EQ(r.max_pair_defect, 0.0);
  // the head swap fixes exactly the diagonal digit pairs
  EXPECT_DOUBLE_EQ(fixed_proportion(sc.action, t), 0.01);
  EXPECT_LE(fixed_proportion(sc.action, t), sc.fixed_point_bound);
}

TEST(SoficConstruction, PreconditionsOnResolutionAndDefect) {
  Group z2 = Group::modular({2});
  Group w = Group::wreath(z2, z2);
  Element t = w.make_wreath(lat(1), {});
  std::vector<std::uint32_t> idp(100), swap(100);
  for (std::uint32_t i = 0; i < 100; ++i) {
    idp[i] = i;
    swap[i] = i ^ 1u;
  }
  QuasiAction fine = QuasiAction::table(z2, 100, {{lat(0), idp}, {lat(1), swap}},
                                        {lat(0), lat(1)}, 0.0);
  EXPECT_THROW(build_sofic_wreath(fine, w, {t}, 0.005), Error);  // 100^-1 not below epsilon
  QuasiAction noisy = QuasiAction::table(z2, 100, {{lat(0), idp}, {lat(1), swap}},
                                         {lat(0), lat(1)}, 0.2);
  EXPECT_THROW(build_sofic_wreath(noisy, w, {t}, 0.3), Error);  // 0.2 * 2 cosets > 0.3
  EXPECT_THROW(build_sofic_wreath(fine, w, {t}, 0.0), Error);

  QuasiAction tiny = QuasiAction::table(z2, 4, {{lat(0), {0, 1, 2, 3}}, {lat(1), {1, 0, 3, 2}}},
                                        {lat(0), lat(1)}, 0.0);
  SoficWreathScenario sc = build_sofic_wreath(tiny, w, {t}, 0.3);
  EXPECT_DOUBLE_EQ(sc.fixed_point_bound, 0.25);
}

TEST(AmenableConstruction, FiniteCyclicExtension) {
  Group z6 = Group::modular({6});
  Group z3 = Group::modular({3});
  QuotientMap q = mod_quotient(z6, 2);
  ApproxMap psi = ApproxMap::create(z6, z3, trivial_length(z3),
                                    {{lat(2), lat(1)}, {lat(4), lat(2)}},
                                    {lat(0), lat(2), lat(4)}, 0.0, WeightFunction::constant(0.5));
  AmenableScenario sc = build_amenable_extension(psi, q, {lat(1)}, 0.2);
  EXPECT_EQ(sc.folner.description, "whole group");
  EXPECT_EQ(sc.folner.size(), 2u);
  EXPECT_EQ(first_coords(sc.kernel_window), (std::vector<std::int64_t>{0, 2}));
  EXPECT_DOUBLE_EQ(sc.weight_constant, 0.5);
  EXPECT_DOUBLE_EQ(sc.map.epsilon(), 1.0);
  EXPECT_EQ(sc.map.target().name(), "wr(Z/3, Sym(2))");
  QhomVerdict v = check_quasi_homomorphism(sc.map);
  EXPECT_TRUE(v.ok());
  EXPECT_DOUBLE_EQ(v.report.max_defect, 0.0);
  EXPECT_DOUBLE_EQ(v.report.min_weight_slack, 0.5);
  bool asc = false;
  for (const auto& n : sc.notes)
    if (n == "completion: ascending") asc = true;
  EXPECT_TRUE(asc);
}

TEST(AmenableConstruction, IntegerShiftCompletesToARotation) {
  Group z = Group::lattice(1);
  Group k = Group::modular({1});
  QuotientMap q = identity_quotient(z);
  ApproxMap psi = ApproxMap::create(z, k, trivial_length(k), {}, {}, 0.0);
  AmenableScenario sc = build_amenable_extension(psi, q, {lat(1)}, 0.05);
  ASSERT_TRUE(sc.folner.box_radius.has_value());
  EXPECT_EQ(*sc.folner.box_radius, 20);
  EXPECT_EQ(sc.folner.size(), 41u);
  EXPECT_DOUBLE_EQ(sc.weight_constant, 0.5);  // trivial kernel window: default
  QhomVerdict v = check_quasi_homomorphism(sc.map);
  EXPECT_TRUE(v.ok());
  EXPECT_DOUBLE_EQ(v.report.max_defect, 0.0);
  EXPECT_DOUBLE_EQ(v.report.min_weight_slack, 0.5);
}

TEST(AmenableConstruction, ExplicitWitnessIsRechecked) {
  Group z = Group::lattice(1);
  Group k = Group::modular({1});
  QuotientMap q = identity_quotient(z);
  ApproxMap psi = ApproxMap::create(z, k, trivial_length(k), {}, {}, 0.0);
  AmenableScenario ok = build_amenable_extension(psi, q, {lat(1)}, 0.05,
                                                 CompletionOrder::Ascending,
                                                 folner_box(z, 20, {}));
  EXPECT_EQ(ok.folner.size(), 41u);
  try {
    build_amenable_extension(psi, q, {lat(1)}, 0.05, CompletionOrder::Ascending,
                             folner_box(z, 19, {}));
    FAIL() << "undersized witness accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("misses the loss target"), std::string::npos);
  }
}

TEST(AmenableConstruction, BothCompletionOrdersVerify) {
  Group z = Group::lattice(1);
  Group k = Group::modular({1});
  QuotientMap q = identity_quotient(z);
  ApproxMap psi = ApproxMap::create(z, k, trivial_length(k), {}, {}, 0.0);
  AmenableScenario up = build_amenable_extension(psi, q, {lat(2)}, 0.3,
                                                 CompletionOrder::Ascending);
  AmenableScenario down = build_amenable_extension(psi, q, {lat(2)}, 0.3,
                                                   CompletionOrder::Descending);
  EXPECT_TRUE(check_quasi_homomorphism(up.map).ok());
  EXPECT_TRUE(check_quasi_homomorphism(down.map).ok());
  bool saw_desc = false;
  for (const auto& n : down.notes)
    if (n == "completion: descending") saw_desc = true;
  EXPECT_TRUE(saw_desc);
  // the two completions fill the wrapped slots in opposite orders
  EXPECT_NE(up.map.apply(lat(2)), down.map.apply(lat(2)));
}

TEST(AmenableConstruction, ParameterChecks) {
  Group z6 = Group::modular({6});
  Group z3 = Group::modular({3});
  QuotientMap q = mod_quotient(z6, 2);
  ApproxMap psi = ApproxMap::create(z6, z3, trivial_length(z3),
                                    {{lat(2), lat(1)}, {lat(4), lat(2)}},
                                    {lat(0), lat(2), lat(4)}, 0.0, WeightFunction::constant(0.5));
  EXPECT_THROW(build_amenable_extension(psi, q, {lat(1)}, 0.0), Error);
  EXPECT_THROW(build_amenable_extension(psi, q, {lat(1)}, 0.5), Error);
  EXPECT_THROW(build_amenable_extension(psi, q, {}, 0.2), Error);
  ApproxMap odd = ApproxMap::create(z6, z3, trivial_length(z3),
                                    {{lat(2), lat(1)}, {lat(4), lat(2)}},
                                    {lat(0), lat(2), lat(4)}, 0.0,
                                    WeightFunction::custom([](const Element&) { return 0.5; },
                                                           "varying"));
  EXPECT_THROW(build_amenable_extension(odd, q, {lat(1)}, 0.2), Error);
  ApproxMap wrong = ApproxMap::create(z3, z3, trivial_length(z3), {}, {}, 0.0);
  EXPECT_THROW(build_amenable_extension(wrong, q, {lat(1)}, 0.2), Error);
}

TEST(ModShiftConstruction, SplitExtensionIsExact) {
  Group g = Group::product(Group::modular({3}), Group::lattice(1));
  Group k = Group::modular({3});
  QuotientMap q = projection_quotient(g);
  EXPECT_EQ(q.description(), "projection onto second factor");
  std::vector<std::pair<Element, Element>> a;
  std::vector<Element> f;
  for (std::int64_t v = 0; v < 3; ++v) {
    a.emplace_back(Element::pair(lat(v), lat(0)), lat(v));
    f.push_back(Element::pair(lat(v), lat(0)));
  }
  ApproxMap psi = ApproxMap::create(g, k, trivial_length(k), std::move(a), std::move(f), 0.0,
                                    WeightFunction::constant(0.5));
  Element gen_k = Element::pair(lat(1), lat(0));
  Element gen_z = Element::pair(lat(0), lat(1));
  AmenableScenario sc = build_amenable_extension_mod_shift(psi, q, {gen_k, gen_z}, 0.2);
  ASSERT_TRUE(sc.folner.box_radius.has_value());
  EXPECT_EQ(*sc.folner.box_radius, 5);
  EXPECT_DOUBLE_EQ(sc.map.epsilon(), 0.2);
  EXPECT_TRUE(sc.map.target_length().has_tag(LengthTag::CommutatorContractive));
  QhomVerdict v = check_quasi_homomorphism(sc.map);
  EXPECT_TRUE(v.ok());
  EXPECT_DOUBLE_EQ(v.report.max_defect, 0.0);
  bool noted = false;
  for (const auto& n : sc.notes)
    if (n == "head: reduction mod 11") noted = true;
  EXPECT_TRUE(noted);

  CheckOptions cc;
  for (const auto& [src, img] : sc.map.assignments()) cc.support.push_back(img);
  EXPECT_EQ(check_commutator_contractive(sc.map.target_length(), cc).violation_count, 0u);

  QuotientMap bad = identity_quotient(Group::modular({6}));
  ApproxMap triv = ApproxMap::create(Group::modular({6}), k, trivial_length(k),
                                     {{lat(2), lat(1)}, {lat(4), lat(2)}},
                                     {lat(0), lat(2), lat(4)}, 0.0,
                                     WeightFunction::constant(0.5));
  EXPECT_THROW(build_amenable_extension_mod_shift(triv, bad, {lat(1)}, 0.2), Error);
}
