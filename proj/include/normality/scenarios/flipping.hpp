#pragma once

#include "normality/genprob.hpp"

#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

namespace normality::scenarios {

inline constexpr unsigned max_flipping_depth() { return 2048; }

/// Truncation depth used when none is given: $NORMALITY_DEPTH or 64.
inline unsigned default_depth() {
  if (const char* env = std::getenv("NORMALITY_DEPTH")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 8 && v <= static_cast<long>(max_flipping_depth())) return static_cast<unsigned>(v);
  }
  return 64;
}

struct FlippingOptions {
  unsigned depth = default_depth();
  Rational threshold = Rational(99, 100);
  /// Extra finite bodies of evidence {first..last}, e.g. learning the
  /// result was within the first seven flips.
  std::vector<std::pair<unsigned, unsigned>> extra_evidence;
};

inline std::string flipping_evidence_name(unsigned tails_seen) { return "after" + std::to_string(tails_seen); }

/// A fair coin flipped until it lands heads; state n = heads on flip n,
/// P(n) = 2^-n. Evidence after x tails is {x+1, x+2, ...}, held as the
/// flips up to `depth` plus an open tail of mass 2^-depth.
inline ProbabilityStructure build_flipping(const FlippingOptions& options = {}) {
  const unsigned depth = options.depth;
  if (depth < 2 || depth > max_flipping_depth()) throw ModelError("flipping depth must lie in 2..2048");
  std::vector<std::string> states;
  std::vector<Rational> prior;
  for (unsigned n = 1; n <= depth; ++n) {
    states.push_back(std::to_string(n));
    prior.push_back(pow2(-static_cast<long>(n)));
  }
  std::vector<Evidence> evidence;
  for (unsigned x = 0; x < depth; ++x) {
    StateSet set{{}, true};
    for (unsigned n = x + 1; n <= depth; ++n) set.members.push_back(n - 1);
    evidence.push_back(Evidence{flipping_evidence_name(x), set});
  }
  for (auto [first, last] : options.extra_evidence) {
    if (first < 1 || last < first || last > depth) throw ModelError("extra flipping evidence out of range");
    StateSet set;
    for (unsigned n = first; n <= last; ++n) set.members.push_back(n - 1);
    evidence.push_back(Evidence{"{" + std::to_string(first) + ".." + std::to_string(last) + "}", set});
  }
  Tail tail{pow2(-static_cast<long>(depth)), pow2(-static_cast<long>(depth) - 1)};
  return ProbabilityStructure(std::move(states), std::move(evidence), Question::finest(), std::move(prior),
                              options.threshold, tail);
}

/// "How many more flips?": the answer at <n, E> is n minus the flips already seen.
inline Question flips_remaining_question(const ProbabilityStructure& flipping) {
  std::vector<unsigned> seen;
  for (const auto& ev : flipping.evidence_family())
    seen.push_back(ev.states.members.empty() ? 0 : static_cast<unsigned>(ev.states.members.front()));
  return Question::de_se([seen](StateIndex s, EvidenceIndex e) {
    return std::to_string(static_cast<unsigned>(s) + 1 - seen.at(e));
  });
}

/// Flipping world: heads on flip `n`, after seeing `tails_seen` tails.
inline World flipping_world(const ProbabilityStructure& flipping, unsigned n, unsigned tails_seen) {
  auto e = flipping.find_evidence(flipping_evidence_name(tails_seen));
  if (!e) throw StructuralError("no evidence after " + std::to_string(tails_seen) + " tails");
  return World{n - 1, *e};
}

/// {first, first+1, ...}; open-ended in the truncated model.
inline StateSet flips_from(const ProbabilityStructure& flipping, unsigned first) {
  StateSet set{{}, true};
  for (StateIndex s = first - 1; s < flipping.states().size(); ++s) set.members.push_back(s);
  return set;
}

inline StateSet flips_between(unsigned first, unsigned last) {
  StateSet set;
  for (unsigned n = first; n <= last; ++n) set.members.push_back(n - 1);
  return set;
}

/// Flip numbers of a set of states.
inline std::vector<unsigned> flip_numbers(const StateSet& set) {
  std::vector<unsigned> out;
  for (auto s : set.members) out.push_back(static_cast<unsigned>(s) + 1);
  return out;
}

}  // namespace normality::scenarios
