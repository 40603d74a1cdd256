#include "normality/relnorm.hpp"
#include "normality/scenarios/flipping.hpp"
#include "support/random_models.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace normality;

namespace {

// Brute-force reading of the world-relative definitions, loop by loop.
struct RelOracle {
  const WorldlyProbabilityStructure& wps;

  Rational lambda(WorldIndex w, WorldIndex v) const {
    Rational num = 0, den = 0;
    for (WorldIndex u = 0; u < wps.size(); ++u) {
      if (!wps.accessible(w, u)) continue;
      den += wps.prior()[u];
      if (wps.label(u) == wps.label(v)) num += wps.prior()[u];
    }
    return num / den;
  }
  Rational tau(WorldIndex w, WorldIndex v) const {
    Rational num = 0, den = 0;
    for (WorldIndex u = 0; u < wps.size(); ++u) {
      if (!wps.accessible(w, u)) continue;
      den += wps.prior()[u];
      if (lambda(w, v) >= lambda(w, u)) num += wps.prior()[u];
    }
    return num / den;
  }
  // 1 - tau(b)/tau(a) >= t, read with tau(a) > 0.
  bool gg(WorldIndex w, WorldIndex a, WorldIndex b) const {
    Rational ta = tau(w, a);
    return ta > 0 && 1 - tau(w, b) / ta >= wps.threshold();
  }
  std::set<WorldIndex> doxastic(WorldIndex w) const {
    std::set<WorldIndex> out;
    for (WorldIndex v = 0; v < wps.size(); ++v) {
      if (!wps.accessible(w, v)) continue;
      bool defeated = false;
      for (WorldIndex u = 0; u < wps.size(); ++u)
        if (wps.accessible(w, u) && gg(w, u, v)) defeated = true;
      if (!defeated) out.insert(v);
    }
    return out;
  }
};

WorldlyProbabilityStructure chain(Rational t) {
  return WorldlyProbabilityStructure({"w1", "w2", "w3"}, {{0, 1}, {1, 2}, {2}}, {},
                                     {Rational(1, 3), Rational(1, 3), Rational(1, 3)}, t);
}

WorldlyProbabilityStructure random_worldly(std::mt19937_64& rng) {
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int n = uniform(1, 7);
  std::vector<std::string> names;
  std::vector<std::vector<WorldIndex>> access(n);
  std::vector<long> weight(n);
  long total = 0;
  for (int w = 0; w < n; ++w) {
    names.push_back("w" + std::to_string(w));
    weight[w] = uniform(1, 9);
    total += weight[w];
    for (int v = 0; v < n; ++v)
      if (v == w || uniform(0, 2) == 0) access[w].push_back(v);
  }
  std::vector<Rational> prior;
  for (auto x : weight) prior.push_back(Rational(x, total));
  std::vector<std::string> labels;
  if (uniform(0, 1)) {
    const int cells = uniform(1, n);
    for (int w = 0; w < n; ++w) labels.push_back("q" + std::to_string(uniform(0, cells - 1)));
  }
  const int den = uniform(2, 50);
  return WorldlyProbabilityStructure(names, access, labels, prior, Rational(uniform(1, den - 1), den));
}

std::set<WorldIndex> as_set(const std::vector<WorldIndex>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Relnorm, ChainLikelinessAndTypicality) {
  auto wps = chain(Rational(2, 5));
  EXPECT_EQ(rel_likeliness(wps, 0, 1), Rational(1, 2));
  EXPECT_EQ(rel_likeliness(wps, 1, 1), Rational(1, 2));
  // w3 lies outside w1's evidence, so by w1's lights it is the least normal world.
  EXPECT_EQ(rel_typicality(wps, 0, 2), 0);
  EXPECT_EQ(rel_typicality(wps, 1, 2), 1);
  EXPECT_EQ(rel_typicality(wps, 2, 2), 1);
}

TEST(Relnorm, ChainAccessibilityMatchesOracle) {
  for (const Rational& t : {Rational(2, 5), Rational(1, 2), Rational(1)}) {
    auto wps = chain(t);
    auto rns = rel_generate(wps);
    RelOracle oracle{wps};
    for (WorldIndex w = 0; w < 3; ++w) EXPECT_EQ(as_set(rel_doxastic(rns, w)), oracle.doxastic(w));
    EXPECT_EQ(rel_doxastic(rns, 0), (std::vector<WorldIndex>{0, 1}));
    EXPECT_TRUE(rns.sufficiently_more_normal(0, 1, 2));
    EXPECT_FALSE(rns.sufficiently_more_normal(1, 1, 2));
  }
}

TEST(Relnorm, SkewedChain) {
  // Priors 1/2, 1/3, 1/6: w2 is the likelier world at w2 but not at w1.
  WorldlyProbabilityStructure wps({"w1", "w2", "w3"}, {{0, 1}, {1, 2}, {2}}, {},
                                  {Rational(1, 2), Rational(1, 3), Rational(1, 6)}, Rational(2, 5));
  EXPECT_EQ(rel_likeliness(wps, 0, 1), Rational(2, 5));
  EXPECT_EQ(rel_likeliness(wps, 1, 1), Rational(2, 3));
  EXPECT_EQ(rel_typicality(wps, 0, 1), Rational(2, 5));
  EXPECT_EQ(rel_typicality(wps, 1, 1), 1);
  auto rns = rel_generate(wps);
  // At w1: 1 - (2/5)/1 = 3/5 >= 2/5, so w1 >>_{w1} w2 and only w1 is believed.
  EXPECT_EQ(rel_doxastic(rns, 0), (std::vector<WorldIndex>{0}));
  // At w2: 1 - (1/3)/1 = 2/3 >= 2/5, so w2 >>_{w2} w3.
  EXPECT_EQ(rel_doxastic(rns, 1), (std::vector<WorldIndex>{1}));
  EXPECT_EQ(rel_epistemic(rns, 1, KnowledgeVariant::Stalnakerian), (std::vector<WorldIndex>{1}));
  EXPECT_EQ(rel_epistemic(rns, 0, KnowledgeVariant::Williamsonian), (std::vector<WorldIndex>{0}));
}

TEST(Relnorm, WholeQuestion) {
  WorldlyProbabilityStructure wps({"a", "b", "c"}, {{0, 1}, {1, 2}, {0, 2}}, {"*", "*", "*"},
                                  {Rational(1, 2), Rational(1, 4), Rational(1, 4)}, Rational(9, 10));
  for (WorldIndex w = 0; w < 3; ++w)
    for (auto v : wps.access(w)) EXPECT_EQ(rel_likeliness(wps, w, v), 1);
}

TEST(Relnorm, Validation) {
  EXPECT_THROW(WorldlyProbabilityStructure({"a", "b"}, {{1}, {1}}, {}, {Rational(1, 2), Rational(1, 2)}, 1),
               ModelError);
  EXPECT_THROW(WorldlyProbabilityStructure({"a", "b"}, {{0}, {1}}, {}, {Rational(1), Rational(0)}, 1),
               ConditioningError);
  EXPECT_THROW(WorldlyProbabilityStructure({"a", "a"}, {{0}, {1}}, {}, {Rational(1, 2), Rational(1, 2)}, 1),
               ModelError);
  EXPECT_THROW(WorldlyProbabilityStructure({"a"}, {{0}}, {}, {Rational(1)}, 0), ModelError);
  EXPECT_THROW(WorldlyProbabilityStructure({"a"}, {{0}}, {}, {Rational(1, 2)}, 1), ModelError);

  // A hand-built ≫ that is not contained in ⪰ is rejected.
  using M = RelativizedNormalityStructure::Matrix;
  M ge(2, boost::dynamic_bitset<>(2)), gg(2, boost::dynamic_bitset<>(2));
  ge[0].set(0);
  ge[1].set(1);
  gg[0].set(1);
  EXPECT_THROW(RelativizedNormalityStructure({"a", "b"}, {{0, 1}, {1}}, {ge, ge}, {gg, gg}), StructuralError);
}

TEST(Relnorm, RandomStructuresMatchOracleAndThreshold) {
  std::mt19937_64 rng(20261016);
  for (int trial = 0; trial < 300; ++trial) {
    auto wps = random_worldly(rng);
    RelOracle oracle{wps};
    for (auto rule : {SufficiencyRule::Sufficiency, SufficiencyRule::SufficiencyPlus}) {
      auto rns = rel_generate(wps, rule);
      auto threshold = rel_check_threshold(wps, rns);
      EXPECT_TRUE(threshold.holds) << "trial " << trial;
      for (WorldIndex w = 0; w < wps.size(); ++w) {
        auto rb = as_set(rel_doxastic(rns, w));
        if (rule == SufficiencyRule::Sufficiency) {
          EXPECT_EQ(rb, oracle.doxastic(w)) << "trial " << trial;
        }
        auto stal = as_set(rel_epistemic(rns, w, KnowledgeVariant::Stalnakerian));
        auto will = as_set(rel_epistemic(rns, w, KnowledgeVariant::Williamsonian));
        EXPECT_TRUE(std::includes(stal.begin(), stal.end(), rb.begin(), rb.end()));
        EXPECT_TRUE(std::includes(will.begin(), will.end(), stal.begin(), stal.end()));
        EXPECT_TRUE(stal.count(w));
        for (auto v : will) EXPECT_TRUE(wps.accessible(w, v));
        for (WorldIndex v = 0; v < wps.size(); ++v) {
          EXPECT_EQ(rel_likeliness(wps, w, v), oracle.lambda(w, v));
          EXPECT_EQ(rel_typicality(wps, w, v), oracle.tau(w, v));
        }
      }
    }
  }
}

TEST(Relnorm, PartitionalAccessCoincidesWithPipeline) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    auto ps = normality::testing::random_structure(rng);
    auto wps = to_worldly(ps);
    for (auto rule : {SufficiencyRule::Sufficiency, SufficiencyRule::SufficiencyPlus}) {
      auto ns = generate(ps, rule).structure;
      auto rns = rel_generate(wps, rule);
      for (const auto& w : ns.worlds()) {
        const auto i = worldly_index(ps, w);
        EXPECT_EQ(rel_likeliness(wps, i, i), likeliness(ps, w));
        EXPECT_EQ(rel_typicality(wps, i, i), typicality(ps, w));
        std::set<WorldIndex> want;
        for (const auto& v : doxastic_accessible(ns, w)) want.insert(worldly_index(ps, v));
        EXPECT_EQ(as_set(rel_doxastic(rns, i)), want) << "trial " << trial;
        for (auto variant : {KnowledgeVariant::Stalnakerian, KnowledgeVariant::Williamsonian}) {
          std::set<WorldIndex> k;
          for (const auto& v : epistemic_accessible(ns, w, variant)) k.insert(worldly_index(ps, v));
          EXPECT_EQ(as_set(rel_epistemic(rns, i, variant)), k) << "trial " << trial;
        }
      }
    }
  }
}

TEST(Relnorm, FlippingCoincidence) {
  // Flipping with the unlisted tail folded into the last state, so every
  // world has a worldly counterpart.
  const unsigned depth = 24;
  std::vector<std::string> states;
  std::vector<Rational> prior;
  for (unsigned n = 1; n <= depth; ++n) {
    states.push_back(std::to_string(n));
    prior.push_back(pow2(-static_cast<long>(n)));
  }
  prior.back() *= 2;
  std::vector<Evidence> evidence;
  for (unsigned x = 0; x + 10 < depth; ++x) {
    StateSet set;
    for (unsigned n = x + 1; n <= depth; ++n) set.members.push_back(n - 1);
    evidence.push_back(Evidence{scenarios::flipping_evidence_name(x), set});
  }
  ProbabilityStructure ps(states, evidence, Question::finest(), prior, Rational(99, 100));
  auto ns = generate(ps, SufficiencyRule::Sufficiency).structure;
  auto wps = to_worldly(ps);
  auto rns = rel_generate(wps);
  for (EvidenceIndex x = 0; x < evidence.size(); ++x) {
    World w{x, x};
    const auto i = worldly_index(ps, w);
    std::vector<std::string> believed;
    for (auto v : rel_doxastic(rns, i)) believed.push_back(wps.names()[v]);
    std::vector<std::string> want;
    for (const auto& v : doxastic_accessible(ns, w)) want.push_back(ns.states()[v.state] + "@" + evidence[x].name);
    EXPECT_EQ(believed, want);
    EXPECT_EQ(believed.size(), 7u);
    EXPECT_EQ(believed.front(), std::to_string(x + 1) + "@" + evidence[x].name);
  }
}

TEST(Relnorm, TruncatedStructuresHaveNoWorldlyForm) {
  EXPECT_THROW(to_worldly(scenarios::build_flipping({})), ModelError);
}
