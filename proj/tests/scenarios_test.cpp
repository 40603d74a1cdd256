#include "normality/scenarios/heading.hpp"
#include "normality/scenarios/lottery.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace normality;
using namespace normality::scenarios;

namespace {

constexpr int kStal = static_cast<int>(KnowledgeVariant::Stalnakerian);
constexpr int kWill = static_cast<int>(KnowledgeVariant::Williamsonian);

bool accessible(const NormalityStructure& ns, const World& from, const World& to, KnowledgeVariant v) {
  auto rk = epistemic_accessible(ns, from, v);
  return std::find(rk.begin(), rk.end(), to) != rk.end();
}

}  // namespace

TEST(Heading, ExplicitModelAgreesWithAggregatedChecks) {
  // Small coins are enumerated in full; the aggregated report must agree.
  for (unsigned n : {3u, 6u, 10u}) {
    auto ps = build_heading(n);
    auto ns = generate(ps, SufficiencyRule::Sufficiency).structure;
    auto d = *ps.find_state("d");
    auto c = *ps.find_state("c");
    World d_before{d, 0}, c_before{c, 0}, d_after{d, 1}, c_after{c, 1};
    auto report = heading_checks(n);
    for (auto v : {KnowledgeVariant::Stalnakerian, KnowledgeVariant::Williamsonian}) {
      EXPECT_EQ(accessible(ns, d_before, c_before, v), report.c_accessible_before[static_cast<int>(v)]);
      EXPECT_EQ(accessible(ns, d_after, c_after, v), report.c_accessible_after[static_cast<int>(v)]);
    }
    EXPECT_EQ(1 - typicality(ps, c_after) / typicality(ps, d_after), report.ratio_after);
    EXPECT_EQ(1 - typicality(ps, c_before) / typicality(ps, d_before), report.ratio_before);
    EXPECT_EQ(typicality(ps, c_before), report.tau_c_finest);
    auto coarse = build_heading(n, heading_threshold(), HeadingQuestion::FairnessAndHeads);
    EXPECT_EQ(typicality(coarse, c_before), report.tau_c_fairness_heads);
    EXPECT_EQ(report.tau_c_fairness_heads, pow2(-static_cast<long>(n)));
  }
}

TEST(Heading, SmallCoinCannotRuleOutFairness) {
  // With three flips the ratio 8/9 falls short of .9999999.
  auto r = heading_checks(3);
  EXPECT_EQ(r.ratio_after, Rational(8, 9));
  EXPECT_TRUE(r.c_accessible_after[kStal]);
  EXPECT_TRUE(r.c_accessible_after[kWill]);
}

TEST(Heading, HundredFlips) {
  auto r = heading_checks(100);
  const BigInt two100 = BigInt(1) << 100;
  EXPECT_EQ(r.ratio_after, Rational(two100, two100 + 1));
  EXPECT_EQ(r.ratio_before, Rational(1, 2));
  EXPECT_FALSE(r.c_accessible_after[kStal]);
  EXPECT_FALSE(r.c_accessible_after[kWill]);
  EXPECT_TRUE(r.c_accessible_before[kStal]);
  EXPECT_TRUE(r.c_accessible_before[kWill]);
  EXPECT_EQ(r.believed_after, (std::vector<std::string>{"d"}));
  EXPECT_EQ(r.tau_c_finest, Rational(1, 2));
  EXPECT_EQ(r.tau_c_fairness_heads, pow2(-100));
}

TEST(Heading, LikelinessOfDoubleHeaded) {
  auto ps = build_heading(4);
  EXPECT_EQ(likeliness(ps, World{*ps.find_state("d"), 0}), Rational(1, 2));
  EXPECT_EQ(ps.evidence_family()[1].states.members.size(), 2u);
  EXPECT_THROW(build_heading(40), ModelError);
}

TEST(Lottery, SufficiencyPlusBlocksKnowledge) {
  auto ps = build_lottery();
  // Oracle: enumerate the answer distribution directly.
  const BigInt total = BigInt(1000) * 1000 + 999;
  Rational tau_alice(999, total);
  Rational lambda_ratio(999, 1000);
  ASSERT_EQ(typicality(ps, World{0, 0}), tau_alice);
  ASSERT_EQ(typicality(ps, World{1, 0}), 1);
  const bool oracle_plain = 1 - tau_alice >= ps.threshold();
  const bool oracle_plus = oracle_plain && 1 - lambda_ratio >= ps.threshold();
  EXPECT_TRUE(oracle_plain);
  EXPECT_FALSE(oracle_plus);

  auto plain = lottery_report(ps, SufficiencyRule::Sufficiency);
  auto plus = lottery_report(ps, SufficiencyRule::SufficiencyPlus);
  EXPECT_EQ(plain.alice_believed_to_lose, oracle_plain);
  EXPECT_EQ(plain.knows_alice_loses[kStal], oracle_plain);
  EXPECT_EQ(plain.knows_alice_loses[kWill], oracle_plain);
  EXPECT_EQ(plus.alice_believed_to_lose, oracle_plus);
  EXPECT_EQ(plus.knows_alice_loses[kStal], oracle_plus);
  EXPECT_EQ(plus.knows_alice_loses[kWill], oracle_plus);
}

TEST(Lottery, EqualTicketsMeanNoExclusion) {
  LotteryOptions o;
  o.entrants = 50;
  o.tickets_each = 10;
  o.alice_tickets = 10;
  auto r = lottery_report(build_lottery(o), SufficiencyRule::Sufficiency);
  EXPECT_FALSE(r.alice_believed_to_lose);
  EXPECT_FALSE(r.knows_alice_loses[kStal]);
}
