#pragma once

#include "normality/core.hpp"
#include "normality/error.hpp"
#include "normality/profile.hpp"
#include "normality/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace normality {

enum class QuestionKind { DeDicto, DeSe };

/// A question, given by its labeling. De dicto questions label states; de se
/// questions label worlds, so the label may depend on the evidence too.
class Question {
 public:
  using Labeler = std::function<std::string(StateIndex, EvidenceIndex)>;

  /// Every state is its own answer.
  static Question finest() { return Question(Mode::Finest, QuestionKind::DeDicto); }

  /// One answer covering everything.
  static Question whole() { return Question(Mode::Whole, QuestionKind::DeDicto); }

  static Question de_dicto(std::vector<std::string> labels) {
    Question q(Mode::Table, QuestionKind::DeDicto);
    q.labels_ = std::move(labels);
    return q;
  }

  static Question de_se(Labeler labeler) {
    Question q(Mode::Function, QuestionKind::DeSe);
    q.labeler_ = std::move(labeler);
    return q;
  }

  /// A de dicto question viewed as a partition of worlds.
  Question lifted() const {
    Question q = *this;
    q.kind_ = QuestionKind::DeSe;
    return q;
  }

  QuestionKind kind() const { return kind_; }
  bool is_finest() const { return mode_ == Mode::Finest; }
  bool is_whole() const { return mode_ == Mode::Whole; }
  const std::vector<std::string>& table() const { return labels_; }

  std::string label(const std::vector<std::string>& state_names, StateIndex s, EvidenceIndex e) const {
    switch (mode_) {
      case Mode::Finest: return state_names.at(s);
      case Mode::Whole: return "*";
      case Mode::Table: return labels_.at(s);
      case Mode::Function: return labeler_(s, e);
    }
    return {};
  }

  void check(std::size_t state_count) const {
    if (mode_ == Mode::Table && labels_.size() != state_count)
      throw ModelError("question labels " + std::to_string(labels_.size()) + " states, structure has " +
                       std::to_string(state_count));
    if (mode_ == Mode::Function && !labeler_) throw ModelError("question has no labeling function");
  }

 private:
  enum class Mode { Finest, Whole, Table, Function };
  Question(Mode mode, QuestionKind kind) : mode_(mode), kind_(kind) {}

  Mode mode_;
  QuestionKind kind_;
  std::vector<std::string> labels_;
  Labeler labeler_;
};

/// Mass of states beyond the truncation depth. Each answer cell out there
/// carries at most `cell_bound`; the mass sits in every open-tail evidence set.
struct Tail {
  Rational mass = 0;
  Rational cell_bound = 0;
};

/// States, evidence, a question, a prior and a threshold. The normality
/// structure it determines is obtained with `generate`.
class ProbabilityStructure {
 public:
  ProbabilityStructure(std::vector<std::string> states, std::vector<Evidence> evidence, Question question,
                       std::vector<Rational> prior, Rational threshold, Tail tail = {})
      : states_(std::move(states)),
        evidence_(std::move(evidence)),
        question_(std::move(question)),
        prior_(std::move(prior)),
        threshold_(std::move(threshold)),
        tail_(std::move(tail)) {
    for (auto& ev : evidence_) {
      auto& m = ev.states.members;
      std::sort(m.begin(), m.end());
      m.erase(std::unique(m.begin(), m.end()), m.end());
    }
    validate();
    build_profiles();
  }

  const std::vector<std::string>& states() const { return states_; }
  const std::vector<Evidence>& evidence_family() const { return evidence_; }
  const Question& question() const { return question_; }
  const std::vector<Rational>& prior() const { return prior_; }
  const Rational& threshold() const { return threshold_; }
  const Tail& tail() const { return tail_; }

  std::vector<World> worlds() const {
    std::vector<World> out;
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e)
      for (StateIndex s : evidence_[e].states.members) out.push_back(World{s, e});
    return out;
  }

  Rational mass(const StateSet& set) const {
    Rational m = set.open_tail ? tail_.mass : Rational(0);
    for (StateIndex s : set.members) m += prior_.at(s);
    return m;
  }

  Rational evidence_mass(EvidenceIndex e) const { return mass(evidence_.at(e).states); }

  const AnswerProfile& profile(EvidenceIndex e) const { return profiles_.at(e); }

  /// Block (answer cell) of the profile of w's evidence containing w.
  std::size_t block_of(const World& w) const {
    check_world(w);
    const auto& members = evidence_[w.evidence].states.members;
    auto pos = static_cast<std::size_t>(std::lower_bound(members.begin(), members.end(), w.state) - members.begin());
    return block_index_[w.evidence][pos];
  }

  void check_world(const World& w) const {
    if (w.evidence >= evidence_.size() || !evidence_[w.evidence].states.contains(w.state))
      throw StructuralError("not a world of this structure");
  }

  std::optional<StateIndex> find_state(std::string_view name) const {
    for (StateIndex s = 0; s < states_.size(); ++s)
      if (states_[s] == name) return s;
    return std::nullopt;
  }

  std::optional<EvidenceIndex> find_evidence(std::string_view name) const {
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e)
      if (evidence_[e].name == name) return e;
    return std::nullopt;
  }

  std::optional<EvidenceIndex> find_evidence(const StateSet& set) const {
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e)
      if (evidence_[e].states == set) return e;
    return std::nullopt;
  }

  /// Same model with a different threshold.
  ProbabilityStructure with_threshold(Rational t) const {
    return ProbabilityStructure(states_, evidence_, question_, prior_, std::move(t), tail_);
  }

  ProbabilityStructure with_question(Question q) const {
    return ProbabilityStructure(states_, evidence_, std::move(q), prior_, threshold_, tail_);
  }

 private:
  void validate() const {
    if (states_.empty()) throw ModelError("state space is empty");
    if (prior_.size() != states_.size())
      throw ModelError("prior has " + std::to_string(prior_.size()) + " entries for " +
                       std::to_string(states_.size()) + " states");
    if (threshold_ <= 0) throw ModelError("threshold must be positive (t = 0 makes >> reflexive)");
    if (threshold_ > 1) throw ModelError("threshold exceeds 1");
    if (tail_.mass < 0 || tail_.cell_bound < 0) throw ModelError("negative tail mass");
    Rational sum = tail_.mass;
    for (std::size_t s = 0; s < prior_.size(); ++s) {
      if (prior_[s] < 0) throw ModelError("negative prior for state '" + states_[s] + "'");
      sum += prior_[s];
    }
    if (sum != 1) throw ModelError("prior mass " + to_string(sum) + " ≠ 1");
    question_.check(states_.size());
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e) {
      const auto& ev = evidence_[e];
      if (ev.states.members.empty() && !ev.states.open_tail)
        throw ModelError("evidence '" + ev.name + "' is empty");
      for (StateIndex s : ev.states.members)
        if (s >= states_.size()) throw ModelError("evidence '" + ev.name + "' names a state outside S");
      if (evidence_mass(e) <= 0) throw ConditioningError("evidence '" + ev.name + "' has zero prior mass");
    }
  }

  void build_profiles() {
    profiles_.resize(evidence_.size());
    block_index_.resize(evidence_.size());
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e) {
      std::map<std::string, std::size_t> seen;
      auto& profile = profiles_[e];
      for (StateIndex s : evidence_[e].states.members) {
        auto label = question_.label(states_, s, e);
        auto [it, fresh] = seen.emplace(label, profile.blocks.size());
        if (fresh) profile.blocks.push_back(AnswerBlock{label, 1, 0});
        profile.blocks[it->second].mass += prior_[s];
        block_index_[e].push_back(it->second);
      }
      if (evidence_[e].states.open_tail) {
        profile.tail_mass = tail_.mass;
        profile.tail_cell_bound = tail_.cell_bound;
      }
    }
  }

  std::vector<std::string> states_;
  std::vector<Evidence> evidence_;
  Question question_;
  std::vector<Rational> prior_;
  Rational threshold_;
  Tail tail_;
  std::vector<AnswerProfile> profiles_;
  std::vector<std::vector<std::size_t>> block_index_;
};

inline ProfileAnalysis analyze(const ProbabilityStructure& ps, EvidenceIndex e, SufficiencyRule rule) {
  return ProfileAnalysis(ps.profile(e), ps.threshold(), rule);
}

/// Evidential probability of the true answer.
inline Rational likeliness(const ProbabilityStructure& ps, const World& w) {
  const auto& profile = ps.profile(w.evidence);
  return profile.blocks[ps.block_of(w)].mass / profile.total();
}

/// Evidential probability that things are no more normal than at w.
inline Rational typicality(const ProbabilityStructure& ps, const World& w) {
  return analyze(ps, w.evidence, SufficiencyRule::Sufficiency).exact_typicality(ps.block_of(w));
}

/// The generated normality structure together with, per evidence set,
/// whether belief is settled despite truncation.
struct Generated {
  NormalityStructure structure;
  std::vector<bool> exact;
};

inline Generated generate(const ProbabilityStructure& ps, SufficiencyRule rule) {
  std::vector<ProfileAnalysis> analyses;
  analyses.reserve(ps.evidence_family().size());
  std::vector<bool> exact;
  for (EvidenceIndex e = 0; e < ps.evidence_family().size(); ++e) {
    analyses.push_back(analyze(ps, e, rule));
    const auto& a = analyses.back();
    for (std::size_t i = 0; i < a.size(); ++i) a.exact_typicality(i);
    exact.push_back(a.fully_decided());
  }

  // Relations only hold inside one evidence cell; precompute per-block verdicts.
  std::vector<std::vector<std::vector<char>>> gg(analyses.size());
  for (std::size_t e = 0; e < analyses.size(); ++e) {
    const auto& a = analyses[e];
    gg[e].assign(a.size(), std::vector<char>(a.size(), 0));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a.size(); ++j) gg[e][i][j] = a.sufficiently_more_normal(i, j) ? 1 : 0;
  }
  auto ge = [&](const World& w, const World& v) {
    if (w.evidence != v.evidence) return false;
    const auto& blocks = ps.profile(w.evidence).blocks;
    return blocks[ps.block_of(w)].mass >= blocks[ps.block_of(v)].mass;
  };
  auto gt = [&](const World& w, const World& v) {
    if (w.evidence != v.evidence) return false;
    return gg[w.evidence][ps.block_of(w)][ps.block_of(v)] != 0;
  };
  return Generated{NormalityStructure::from_cell_predicates(ps.states(), ps.evidence_family(), ge, gt), std::move(exact)};
}

/// Labels of the believed answers given evidence e, in first-seen order.
inline std::vector<std::string> believed_answers(const ProbabilityStructure& ps, EvidenceIndex e, SufficiencyRule rule) {
  auto a = analyze(ps, e, rule);
  std::vector<std::string> out;
  for (auto i : a.believed()) out.push_back(ps.profile(e).blocks[i].label);
  return out;
}

/// Blocks holding worlds epistemically accessible from a world in block i,
/// for profiles too large to expand into a normality structure.
inline std::vector<std::size_t> epistemic_blocks(const ProfileAnalysis& a, std::size_t i, KnowledgeVariant variant) {
  const auto& blocks = a.profile().blocks;
  std::vector<char> in(blocks.size(), 0);
  for (auto j : a.believed()) in[j] = 1;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (blocks[j].mass >= blocks[i].mass) in[j] = 1;
    if (variant == KnowledgeVariant::Williamsonian && blocks[i].mass >= blocks[j].mass &&
        !a.sufficiently_more_normal(i, j))
      in[j] = 1;
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < blocks.size(); ++j)
    if (in[j]) out.push_back(j);
  return out;
}

struct ThresholdCheck {
  bool holds = true;
  std::optional<World> witness;
  Rational witness_mass = 0;
};

/// Does every world's doxastic state-set get conditional mass >= t under `ns`?
inline ThresholdCheck check_threshold(const ProbabilityStructure& ps, const NormalityStructure& ns) {
  for (const auto& w : ns.worlds()) {
    auto believed = project_states(doxastic_accessible(ns, w));
    Rational m = ps.mass(believed) / ps.evidence_mass(w.evidence);
    if (m < ps.threshold()) return ThresholdCheck{false, w, m};
  }
  return {};
}

inline ThresholdCheck check_threshold(const ProbabilityStructure& ps, SufficiencyRule rule) {
  return check_threshold(ps, generate(ps, rule).structure);
}

}  // namespace normality
