#pragma once

#include "normality/error.hpp"

#include <boost/dynamic_bitset.hpp>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace normality {

using StateIndex = std::size_t;
using EvidenceIndex = std::size_t;

/// A set of states. `open_tail` marks sets that also contain every state
/// beyond the truncation depth of an infinite model (e.g. {2,3,...}).
struct StateSet {
  std::vector<StateIndex> members;  // sorted, unique
  bool open_tail = false;

  bool contains(StateIndex s) const { return std::binary_search(members.begin(), members.end(), s); }
  bool operator==(const StateSet&) const = default;
};

inline StateSet intersect(const StateSet& a, const StateSet& b) {
  StateSet out;
  std::set_intersection(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
                        std::back_inserter(out.members));
  out.open_tail = a.open_tail && b.open_tail;
  return out;
}

inline bool is_subset(const StateSet& a, const StateSet& b) {
  if (a.open_tail && !b.open_tail) return false;
  return std::includes(b.members.begin(), b.members.end(), a.members.begin(), a.members.end());
}

struct Evidence {
  std::string name;
  StateSet states;
};

/// A centered world: a state together with the body of evidence the agent has.
struct World {
  StateIndex state = 0;
  EvidenceIndex evidence = 0;
  auto operator<=>(const World&) const = default;
};

enum class KnowledgeVariant { Stalnakerian, Williamsonian };

using WorldPair = std::pair<World, World>;

namespace detail {

/// Throws StructuralError unless ge is a preorder, gg is irreflexive and
/// acyclic, gg ⊆ ge, and ge∘gg∘ge ⊆ gg. `describe` names element i.
inline void check_axioms(const std::vector<boost::dynamic_bitset<>>& ge,
                         const std::vector<boost::dynamic_bitset<>>& gg,
                         const std::function<std::string(std::size_t)>& describe) {
  const std::size_t n = ge.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!ge[i].test(i)) throw StructuralError("at-least-as-normal is not reflexive at " + describe(i));
    if (gg[i].test(i)) throw StructuralError("sufficiently-more-normal is reflexive at " + describe(i));
    if (!gg[i].is_subset_of(ge[i]))
      throw StructuralError(describe(i) +
                            " is sufficiently more normal than a world it is not at least as normal as");
    for (auto j = ge[i].find_first(); j != boost::dynamic_bitset<>::npos; j = ge[i].find_next(j))
      if (!ge[j].is_subset_of(ge[i]))
        throw StructuralError("at-least-as-normal is not transitive through " + describe(j));
  }
  // w1 >= w2 >> w3 >= w4 must give w1 >> w4, i.e. (ge . gg . ge) is contained in gg.
  for (std::size_t i = 0; i < n; ++i) {
    boost::dynamic_bitset<> mid(n);
    for (auto j = ge[i].find_first(); j != boost::dynamic_bitset<>::npos; j = ge[i].find_next(j)) mid |= gg[j];
    boost::dynamic_bitset<> reach(n);
    for (auto k = mid.find_first(); k != boost::dynamic_bitset<>::npos; k = mid.find_next(k)) reach |= ge[k];
    if (!reach.is_subset_of(gg[i])) {
      auto bad = (reach - gg[i]).find_first();
      throw StructuralError("sufficiently-more-normal is not closed under at-least-as-normal: " +
                            describe(i) + " should be sufficiently more normal than " +
                            describe(bad));
    }
  }
  // Finite well-foundedness: the sufficiently-more-normal graph is acyclic.
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j = gg[i].find_first(); j != boost::dynamic_bitset<>::npos; j = gg[i].find_next(j)) ++indegree[j];
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::size_t seen = 0;
  while (!ready.empty()) {
    auto i = ready.back();
    ready.pop_back();
    ++seen;
    for (auto j = gg[i].find_first(); j != boost::dynamic_bitset<>::npos; j = gg[i].find_next(j))
      if (--indegree[j] == 0) ready.push_back(j);
  }
  if (seen != n) throw StructuralError("sufficiently-more-normal has a cycle (not well-founded)");
}

}  // namespace detail

/// Worlds, an at-least-as-normal preorder and a well-founded
/// sufficiently-more-normal relation. Immutable once constructed; the
/// constructor rejects anything violating the axioms.
class NormalityStructure {
 public:
  NormalityStructure(std::vector<std::string> states, std::vector<Evidence> evidence,
                     const std::vector<WorldPair>& at_least_as_normal,
                     const std::vector<WorldPair>& sufficiently_more_normal)
      : states_(std::move(states)), evidence_(std::move(evidence)) {
    index_worlds();
    ge_.assign(worlds_.size(), boost::dynamic_bitset<>(worlds_.size()));
    gg_.assign(worlds_.size(), boost::dynamic_bitset<>(worlds_.size()));
    for (const auto& [a, b] : at_least_as_normal) ge_[index_of(a)].set(index_of(b));
    for (const auto& [a, b] : sufficiently_more_normal) gg_[index_of(a)].set(index_of(b));
    validate();
  }

  using Relation = std::function<bool(const World&, const World&)>;

  /// Evaluates both relations on every pair of worlds.
  static NormalityStructure from_predicates(std::vector<std::string> states, std::vector<Evidence> evidence,
                                            const Relation& at_least_as_normal,
                                            const Relation& sufficiently_more_normal) {
    NormalityStructure ns(std::move(states), std::move(evidence));
    const std::size_t n = ns.worlds_.size();
    ns.ge_.assign(n, boost::dynamic_bitset<>(n));
    ns.gg_.assign(n, boost::dynamic_bitset<>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (at_least_as_normal(ns.worlds_[i], ns.worlds_[j])) ns.ge_[i].set(j);
        if (sufficiently_more_normal(ns.worlds_[i], ns.worlds_[j])) ns.gg_[i].set(j);
      }
    }
    ns.validate();
    return ns;
  }

  /// As `from_predicates`, for relations that never hold across evidence
  /// cells: only same-cell pairs are evaluated.
  static NormalityStructure from_cell_predicates(std::vector<std::string> states, std::vector<Evidence> evidence,
                                                 const Relation& at_least_as_normal,
                                                 const Relation& sufficiently_more_normal) {
    NormalityStructure ns(std::move(states), std::move(evidence));
    const std::size_t n = ns.worlds_.size();
    ns.ge_.assign(n, boost::dynamic_bitset<>(n));
    ns.gg_.assign(n, boost::dynamic_bitset<>(n));
    for (EvidenceIndex e = 0; e < ns.evidence_.size(); ++e) {
      for (std::size_t i = ns.cell_begin(e); i < ns.cell_end(e); ++i) {
        for (std::size_t j = ns.cell_begin(e); j < ns.cell_end(e); ++j) {
          if (at_least_as_normal(ns.worlds_[i], ns.worlds_[j])) ns.ge_[i].set(j);
          if (sufficiently_more_normal(ns.worlds_[i], ns.worlds_[j])) ns.gg_[i].set(j);
        }
      }
    }
    ns.validate();
    return ns;
  }

  const std::vector<std::string>& states() const { return states_; }
  const std::vector<Evidence>& evidence_family() const { return evidence_; }
  const std::vector<World>& worlds() const { return worlds_; }

  bool contains(const World& w) const {
    return w.evidence < evidence_.size() && evidence_[w.evidence].states.contains(w.state);
  }

  std::size_t index_of(const World& w) const {
    if (!contains(w)) throw StructuralError("unknown world " + describe(w));
    const auto& m = evidence_[w.evidence].states.members;
    return offset_[w.evidence] +
           static_cast<std::size_t>(std::lower_bound(m.begin(), m.end(), w.state) - m.begin());
  }

  bool at_least_as_normal(const World& a, const World& b) const { return ge_[index_of(a)].test(index_of(b)); }
  bool sufficiently_more_normal(const World& a, const World& b) const {
    return gg_[index_of(a)].test(index_of(b));
  }

  std::optional<StateIndex> find_state(std::string_view name) const {
    for (StateIndex s = 0; s < states_.size(); ++s)
      if (states_[s] == name) return s;
    return std::nullopt;
  }

  std::optional<EvidenceIndex> find_evidence(const StateSet& set) const {
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e)
      if (evidence_[e].states == set) return e;
    return std::nullopt;
  }

  std::optional<EvidenceIndex> find_evidence(std::string_view name) const {
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e)
      if (evidence_[e].name == name) return e;
    return std::nullopt;
  }

  std::string describe(const World& w) const {
    std::string s = w.state < states_.size() ? states_[w.state] : "#" + std::to_string(w.state);
    std::string e = w.evidence < evidence_.size() ? evidence_[w.evidence].name : "#" + std::to_string(w.evidence);
    return "<" + s + "," + e + ">";
  }

  /// True when the at-least-as-normal relation is total on every evidence cell.
  std::optional<EvidenceIndex> first_non_total_cell() const {
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e) {
      const std::size_t begin = offset_[e];
      const std::size_t end = begin + evidence_[e].states.members.size();
      for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = i + 1; j < end; ++j)
          if (!ge_[i].test(j) && !ge_[j].test(i)) return e;
    }
    return std::nullopt;
  }

  // Bit-level access for the accessibility computations below.
  const boost::dynamic_bitset<>& ge_row(std::size_t i) const { return ge_[i]; }
  const boost::dynamic_bitset<>& gg_row(std::size_t i) const { return gg_[i]; }
  std::size_t cell_begin(EvidenceIndex e) const { return offset_[e]; }
  std::size_t cell_end(EvidenceIndex e) const { return offset_[e] + evidence_[e].states.members.size(); }

 private:
  NormalityStructure(std::vector<std::string> states, std::vector<Evidence> evidence)
      : states_(std::move(states)), evidence_(std::move(evidence)) {
    index_worlds();
  }

  void index_worlds() {
    if (states_.empty()) throw StructuralError("state space is empty");
    for (std::size_t i = 0; i < states_.size(); ++i)
      for (std::size_t j = i + 1; j < states_.size(); ++j)
        if (states_[i] == states_[j]) throw StructuralError("duplicate state id '" + states_[i] + "'");
    offset_.clear();
    worlds_.clear();
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e) {
      auto& members = evidence_[e].states.members;
      std::sort(members.begin(), members.end());
      members.erase(std::unique(members.begin(), members.end()), members.end());
      if (members.empty()) throw StructuralError("evidence '" + evidence_[e].name + "' has no states");
      for (StateIndex s : members)
        if (s >= states_.size()) throw StructuralError("evidence '" + evidence_[e].name + "' names an unknown state");
      for (EvidenceIndex f = 0; f < e; ++f)
        if (evidence_[f].states == evidence_[e].states)
          throw StructuralError("evidence '" + evidence_[e].name + "' duplicates '" + evidence_[f].name + "'");
      offset_.push_back(worlds_.size());
      for (StateIndex s : members) worlds_.push_back(World{s, e});
    }
  }

  void validate() const {
    detail::check_axioms(ge_, gg_, [this](std::size_t i) { return describe(worlds_[i]); });
  }

  std::vector<std::string> states_;
  std::vector<Evidence> evidence_;
  std::vector<World> worlds_;
  std::vector<std::size_t> offset_;
  std::vector<boost::dynamic_bitset<>> ge_;
  std::vector<boost::dynamic_bitset<>> gg_;
};

inline std::vector<World> evidential_accessible(const NormalityStructure& ns, const World& w) {
  ns.index_of(w);
  std::vector<World> out;
  for (StateIndex s : ns.evidence_family()[w.evidence].states.members) out.push_back(World{s, w.evidence});
  return out;
}

namespace detail {

inline std::vector<World> collect(const NormalityStructure& ns, const boost::dynamic_bitset<>& bits) {
  std::vector<World> out;
  for (auto i = bits.find_first(); i != boost::dynamic_bitset<>::npos; i = bits.find_next(i))
    out.push_back(ns.worlds()[i]);
  return out;
}

inline boost::dynamic_bitset<> cell_mask(const NormalityStructure& ns, EvidenceIndex e) {
  boost::dynamic_bitset<> m(ns.worlds().size());
  for (std::size_t i = ns.cell_begin(e); i < ns.cell_end(e); ++i) m.set(i);
  return m;
}

inline boost::dynamic_bitset<> doxastic_bits(const NormalityStructure& ns, const World& w) {
  ns.index_of(w);
  auto cell = cell_mask(ns, w.evidence);
  auto defeated = boost::dynamic_bitset<>(cell.size());
  for (auto u = cell.find_first(); u != boost::dynamic_bitset<>::npos; u = cell.find_next(u)) defeated |= ns.gg_row(u);
  return cell - defeated;
}

inline boost::dynamic_bitset<> epistemic_bits(const NormalityStructure& ns, const World& w, KnowledgeVariant variant) {
  const std::size_t self = ns.index_of(w);
  auto cell = cell_mask(ns, w.evidence);
  auto result = doxastic_bits(ns, w);
  for (auto v = cell.find_first(); v != boost::dynamic_bitset<>::npos; v = cell.find_next(v)) {
    if (ns.ge_row(v).test(self)) result.set(v);
    if (variant == KnowledgeVariant::Williamsonian && ns.ge_row(self).test(v) && !ns.gg_row(self).test(v))
      result.set(v);
  }
  return result;
}

}  // namespace detail

/// Evidential possibilities not sufficiently less normal than any other.
inline std::vector<World> doxastic_accessible(const NormalityStructure& ns, const World& w) {
  return detail::collect(ns, detail::doxastic_bits(ns, w));
}

inline std::vector<World> epistemic_accessible(const NormalityStructure& ns, const World& w,
                                               KnowledgeVariant variant) {
  return detail::collect(ns, detail::epistemic_bits(ns, w, variant));
}

/// {v in R_e(w) : not w >> v}. Agrees with the Williamsonian definition when
/// at-least-as-normal is total on each evidence cell; throws otherwise.
inline std::vector<World> simple_williamsonian(const NormalityStructure& ns, const World& w) {
  if (auto bad = ns.first_non_total_cell())
    throw PreconditionError("at-least-as-normal is not total on evidence '" + ns.evidence_family()[*bad].name + "'");
  const std::size_t self = ns.index_of(w);
  auto bits = detail::cell_mask(ns, w.evidence) - ns.gg_row(self);
  return detail::collect(ns, bits);
}

inline StateSet project_states(const std::vector<World>& worlds) {
  StateSet out;
  for (const auto& w : worlds) out.members.push_back(w.state);
  std::sort(out.members.begin(), out.members.end());
  out.members.erase(std::unique(out.members.begin(), out.members.end()), out.members.end());
  return out;
}

/// The world reached by learning `p` at `w`: same state, evidence p ∩ E.
inline World discover(const NormalityStructure& ns, const World& w, const StateSet& p) {
  ns.index_of(w);
  if (!p.contains(w.state))
    throw FalseDiscovery("cannot discover a proposition false at " + ns.describe(w));
  auto updated = intersect(p, ns.evidence_family()[w.evidence].states);
  auto e = ns.find_evidence(updated);
  if (!e) throw InexpressibleEvidence("learning at " + ns.describe(w) + " yields evidence outside the family");
  return World{w.state, *e};
}

struct RevisionReport {
  World before;
  World after;
  StateSet pre_belief;
  StateSet post_belief;
  /// pre ∩ p ⊆ post: nothing believed after learning p that expansion would not give.
  bool agm_inclusion_holds = false;
  /// pre ∩ p ≠ ∅ implies post = pre ∩ p.
  bool agm_preservation_holds = false;
};

inline RevisionReport revision_report(const NormalityStructure& ns, const World& w, const StateSet& p) {
  RevisionReport r;
  r.before = w;
  r.after = discover(ns, w, p);
  r.pre_belief = project_states(doxastic_accessible(ns, w));
  r.post_belief = project_states(doxastic_accessible(ns, r.after));
  auto expanded = intersect(r.pre_belief, p);
  r.agm_inclusion_holds = is_subset(expanded, r.post_belief);
  r.agm_preservation_holds = expanded.members.empty() || expanded.members == r.post_belief.members;
  return r;
}

}  // namespace normality
