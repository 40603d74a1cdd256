#pragma once

#include "normality/genprob.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <vector>

namespace normality::scenarios {

// One ticket wins. Alice holds slightly fewer tickets than everyone else;
// the question is who wins.

struct LotteryOptions {
  unsigned entrants = 1000;
  unsigned tickets_each = 1000;
  unsigned alice_tickets = 999;
  Rational threshold = Rational(99, 100);
};

inline ProbabilityStructure build_lottery(const LotteryOptions& o = {}) {
  if (o.entrants == 0 || o.tickets_each == 0 || o.alice_tickets == 0) throw ModelError("lottery needs tickets");
  const BigInt total = BigInt(o.entrants) * o.tickets_each + o.alice_tickets;
  std::vector<std::string> states{"alice"};
  std::vector<Rational> prior{Rational(BigInt(o.alice_tickets), total)};
  for (unsigned i = 1; i <= o.entrants; ++i) {
    states.push_back("p" + std::to_string(i));
    prior.push_back(Rational(BigInt(o.tickets_each), total));
  }
  StateSet all;
  for (StateIndex s = 0; s < states.size(); ++s) all.members.push_back(s);
  return ProbabilityStructure(std::move(states), {Evidence{"draw", all}}, Question::finest(), std::move(prior),
                              o.threshold);
}

struct LotteryReport {
  bool alice_believed_to_lose = false;
  /// Indexed by KnowledgeVariant: does someone else's win rule out Alice's?
  std::array<bool, 2> knows_alice_loses{};
};

/// Evaluated at the world where the first other entrant wins.
inline LotteryReport lottery_report(const ProbabilityStructure& lottery, SufficiencyRule rule) {
  const auto ns = generate(lottery, rule).structure;
  const World alice{0, 0}, winner{1, 0};
  LotteryReport r;
  auto rb = doxastic_accessible(ns, winner);
  r.alice_believed_to_lose = std::find(rb.begin(), rb.end(), alice) == rb.end();
  for (auto v : {KnowledgeVariant::Stalnakerian, KnowledgeVariant::Williamsonian}) {
    auto rk = epistemic_accessible(ns, winner, v);
    r.knows_alice_loses[static_cast<int>(v)] = std::find(rk.begin(), rk.end(), alice) == rk.end();
  }
  return r;
}

}  // namespace normality::scenarios
