#pragma once

#include "normality/genprob.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <vector>

namespace normality::scenarios {

// A coin is either double-headed (d, prior 1/2) or fair; if fair, each of
// the 2^n sequences of n flips has prior 2^-(n+1). c is the all-heads fair
// sequence. Observing n heads leaves {c, d}.

enum class HeadingQuestion {
  Finest,            ///< which of the 2^n + 1 states
  FairnessAndHeads,  ///< double-headed, or fair with k heads
};

inline Rational heading_threshold() { return Rational(9999999, 10000000); }

/// Every state listed. Only practical for small n; the aggregated profiles
/// below cover n = 100.
inline ProbabilityStructure build_heading(unsigned flips, Rational threshold = heading_threshold(),
                                          HeadingQuestion question = HeadingQuestion::Finest) {
  if (flips < 1 || flips > 16) throw ModelError("explicit heading model supports 1..16 flips");
  const std::size_t sequences = std::size_t{1} << flips;
  std::vector<std::string> states{"d"};
  std::vector<Rational> prior{Rational(1, 2)};
  std::vector<std::string> labels{"double"};
  const Rational each = pow2(-static_cast<long>(flips) - 1);
  for (std::size_t bits = 0; bits < sequences; ++bits) {
    std::string seq;
    unsigned heads = 0;
    for (unsigned f = 0; f < flips; ++f) {
      bool h = (bits >> (flips - 1 - f)) & 1;
      seq += h ? 'H' : 'T';
      heads += h;
    }
    states.push_back(bits + 1 == sequences ? "c" : seq);
    prior.push_back(each);
    labels.push_back("fair:" + std::to_string(heads));
  }
  StateSet all;
  for (StateIndex s = 0; s < states.size(); ++s) all.members.push_back(s);
  StateSet observed{{0, states.size() - 1}};
  std::vector<Evidence> evidence{{"S", all}, {"all-heads", observed}};
  Question q = question == HeadingQuestion::Finest ? Question::finest() : Question::de_dicto(labels);
  return ProbabilityStructure(std::move(states), std::move(evidence), std::move(q), std::move(prior),
                              std::move(threshold));
}

/// Answer profile given S, with the fair non-c sequences grouped by heads count.
inline AnswerProfile heading_profile(unsigned flips, HeadingQuestion question) {
  const Rational each = pow2(-static_cast<long>(flips) - 1);
  AnswerProfile p;
  p.blocks.push_back(AnswerBlock{"d", 1, Rational(1, 2)});
  if (question == HeadingQuestion::Finest) {
    p.blocks.push_back(AnswerBlock{"c", 1, each});
    for (unsigned k = 0; k < flips; ++k)
      p.blocks.push_back(AnswerBlock{"fair:" + std::to_string(k), binomial(flips, k), each});
  } else {
    for (unsigned k = 0; k <= flips; ++k)
      p.blocks.push_back(AnswerBlock{"fair:" + std::to_string(k), 1, Rational(binomial(flips, k)) * each});
  }
  return p;
}

/// Profile given {c, d}; both questions separate c from d.
inline AnswerProfile heading_observed_profile(unsigned flips) {
  AnswerProfile p;
  p.blocks.push_back(AnswerBlock{"d", 1, Rational(1, 2)});
  p.blocks.push_back(AnswerBlock{"c", 1, pow2(-static_cast<long>(flips) - 1)});
  return p;
}

struct HeadingReport {
  /// Indexed by KnowledgeVariant.
  std::array<bool, 2> c_accessible_before{};
  std::array<bool, 2> c_accessible_after{};
  /// 1 - tau(c)/tau(d), before and after observing n heads.
  Rational ratio_before;
  Rational ratio_after;
  Rational tau_c_finest;
  Rational tau_c_fairness_heads;
  std::vector<std::string> believed_after;
};

inline HeadingReport heading_checks(unsigned flips = 100, Rational threshold = heading_threshold(),
                                    SufficiencyRule rule = SufficiencyRule::Sufficiency) {
  HeadingReport r;
  ProfileAnalysis before(heading_profile(flips, HeadingQuestion::Finest), threshold, rule);
  ProfileAnalysis after(heading_observed_profile(flips), threshold, rule);
  ProfileAnalysis coarse(heading_profile(flips, HeadingQuestion::FairnessAndHeads), threshold, rule);
  static constexpr std::size_t d = 0, c = 1;
  for (auto v : {KnowledgeVariant::Stalnakerian, KnowledgeVariant::Williamsonian}) {
    auto has_c = [](const std::vector<std::size_t>& blocks) {
      return std::find(blocks.begin(), blocks.end(), c) != blocks.end();
    };
    r.c_accessible_before[static_cast<int>(v)] = has_c(epistemic_blocks(before, d, v));
    r.c_accessible_after[static_cast<int>(v)] = has_c(epistemic_blocks(after, d, v));
  }
  r.ratio_before = 1 - before.exact_typicality(c) / before.exact_typicality(d);
  r.ratio_after = 1 - after.exact_typicality(c) / after.exact_typicality(d);
  r.tau_c_finest = before.exact_typicality(c);
  r.tau_c_fairness_heads = coarse.exact_typicality(flips + 1);  // "fair:n"
  for (auto i : after.believed()) r.believed_after.push_back(after.profile().blocks[i].label);
  return r;
}

}  // namespace normality::scenarios
