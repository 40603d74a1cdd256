#include "normality/scenarios/flipping.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <numeric>

using namespace normality;
using namespace normality::scenarios;

namespace {

std::vector<unsigned> range(unsigned first, unsigned last) {
  std::vector<unsigned> v(last - first + 1);
  std::iota(v.begin(), v.end(), first);
  return v;
}

// Typicality of <n, after x> from the geometric law: P(N >= n | N > x) = 2^(x+1-n).
Rational closed_form_tau(unsigned n, unsigned x) { return pow2(static_cast<long>(x) + 1 - static_cast<long>(n)); }

}  // namespace

TEST(Flipping, PriorAndLikeliness) {
  auto ps = build_flipping();
  EXPECT_EQ(ps.prior()[0], Rational(1, 2));
  EXPECT_EQ(ps.prior()[9], Rational(1, 1024));
  EXPECT_EQ(likeliness(ps, flipping_world(ps, 3, 0)), Rational(1, 8));
  EXPECT_EQ(ps.evidence_mass(*ps.find_evidence("after3")), Rational(1, 8));
}

TEST(Flipping, TypicalityMatchesClosedForm) {
  auto ps = build_flipping();
  for (unsigned x : {0u, 1u, 5u, 20u})
    for (unsigned n = x + 1; n <= 40; ++n) EXPECT_EQ(typicality(ps, flipping_world(ps, n, x)), closed_form_tau(n, x));
}

TEST(Flipping, BeliefWindowIsSevenFlips) {
  auto ps = build_flipping();
  for (unsigned x = 0; x <= 30; ++x) {
    auto answers = believed_answers(ps, *ps.find_evidence(flipping_evidence_name(x)), SufficiencyRule::Sufficiency);
    std::vector<unsigned> got;
    for (const auto& a : answers) got.push_back(static_cast<unsigned>(std::stoul(a)));
    EXPECT_EQ(got, range(x + 1, x + 7)) << "after " << x << " tails";
  }
}

TEST(Flipping, SufficientlyMoreNormalIffSevenApart) {
  auto ps = build_flipping();
  auto ns = generate(ps, SufficiencyRule::Sufficiency).structure;
  for (unsigned x : {0u, 3u}) {
    for (unsigned m = x + 1; m <= 40; ++m)
      for (unsigned n = x + 1; n <= 40; ++n) {
        bool oracle = 1 - closed_form_tau(n, x) / closed_form_tau(m, x) >= Rational(99, 100);
        EXPECT_EQ(oracle, n >= m + 7);
        EXPECT_EQ(ns.sufficiently_more_normal(flipping_world(ps, m, x), flipping_world(ps, n, x)), n >= m + 7)
            << m << " vs " << n;
      }
  }
}

TEST(Flipping, DoxasticAccessibilityFromTheStructure) {
  auto ps = build_flipping();
  auto ns = generate(ps, SufficiencyRule::Sufficiency).structure;
  EXPECT_EQ(flip_numbers(project_states(doxastic_accessible(ns, flipping_world(ps, 2, 0)))), range(1, 7));
  EXPECT_EQ(flip_numbers(project_states(doxastic_accessible(ns, flipping_world(ps, 2, 1)))), range(2, 8));
  EXPECT_EQ(flip_numbers(project_states(simple_williamsonian(ns, flipping_world(ps, 5, 0)))), range(1, 11));
  EXPECT_EQ(flip_numbers(project_states(epistemic_accessible(ns, flipping_world(ps, 5, 0),
                                                             KnowledgeVariant::Williamsonian))),
            range(1, 11));
  EXPECT_EQ(flip_numbers(project_states(epistemic_accessible(ns, flipping_world(ps, 9, 0),
                                                             KnowledgeVariant::Stalnakerian))),
            range(1, 9));
}

TEST(Flipping, LearningPastTailsShiftsTheWindow) {
  auto ps = build_flipping();
  auto ns = generate(ps, SufficiencyRule::Sufficiency).structure;
  auto report = revision_report(ns, flipping_world(ps, 2, 0), flips_from(ps, 2));
  EXPECT_EQ(report.after, flipping_world(ps, 2, 1));
  EXPECT_EQ(flip_numbers(report.pre_belief), range(1, 7));
  EXPECT_EQ(flip_numbers(report.post_belief), range(2, 8));
  EXPECT_FALSE(report.agm_preservation_holds);
  EXPECT_TRUE(report.agm_inclusion_holds);
}

TEST(Flipping, LearningWhatWasAlreadyKnownShrinksBelief) {
  FlippingOptions opts;
  opts.extra_evidence = {{1, 7}};
  auto ps = build_flipping(opts);
  auto ns = generate(ps, SufficiencyRule::Sufficiency).structure;
  auto report = revision_report(ns, flipping_world(ps, 1, 0), flips_between(1, 7));
  EXPECT_EQ(ns.evidence_family()[report.after.evidence].name, "{1..7}");
  EXPECT_EQ(flip_numbers(report.pre_belief), range(1, 7));
  EXPECT_EQ(flip_numbers(report.post_belief), range(1, 6));
  // Oracle: within {1..7}, tau(7) = 1/127 and tau(6) = 3/127.
  EXPECT_EQ(typicality(ps, World{6, report.after.evidence}), Rational(1, 127));
  EXPECT_EQ(typicality(ps, World{5, report.after.evidence}), Rational(3, 127));
  EXPECT_FALSE(report.agm_inclusion_holds);
  EXPECT_FALSE(report.agm_preservation_holds);
}

TEST(Flipping, DiscoveryErrors) {
  auto ps = build_flipping();
  auto ns = generate(ps, SufficiencyRule::Sufficiency).structure;
  EXPECT_THROW(discover(ns, flipping_world(ps, 1, 0), flips_from(ps, 2)), FalseDiscovery);
  EXPECT_THROW(discover(ns, flipping_world(ps, 1, 0), flips_between(1, 3)), InexpressibleEvidence);
}

TEST(Flipping, ShallowDepthIsUndecided) {
  FlippingOptions opts;
  opts.depth = 8;
  auto ps = build_flipping(opts);
  EXPECT_NO_THROW(believed_answers(ps, *ps.find_evidence("after0"), SufficiencyRule::Sufficiency));
  EXPECT_THROW(believed_answers(ps, *ps.find_evidence("after7"), SufficiencyRule::Sufficiency), UndecidedAtDepth);
}

TEST(Flipping, FlipsRemainingQuestion) {
  auto ps = build_flipping();
  auto de_se = ps.with_question(flips_remaining_question(ps));
  for (unsigned x : {0u, 4u, 12u})
    for (unsigned n = x + 1; n <= x + 10; ++n)
      EXPECT_EQ(likeliness(de_se, flipping_world(de_se, n, x)), pow2(-static_cast<long>(n - x)));
}

TEST(Flipping, DepthFromEnvironment) {
  ::setenv("NORMALITY_DEPTH", "32", 1);
  EXPECT_EQ(default_depth(), 32u);
  ::setenv("NORMALITY_DEPTH", "junk", 1);
  EXPECT_EQ(default_depth(), 64u);
  ::unsetenv("NORMALITY_DEPTH");
  EXPECT_EQ(default_depth(), 64u);
}

TEST(Flipping, InvalidParameters) {
  FlippingOptions opts;
  opts.depth = 1;
  EXPECT_THROW(build_flipping(opts), ModelError);
  opts.depth = 10;
  opts.extra_evidence = {{3, 11}};
  EXPECT_THROW(build_flipping(opts), ModelError);
}
