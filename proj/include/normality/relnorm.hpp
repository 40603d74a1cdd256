#pragma once

#include "normality/core.hpp"
#include "normality/error.hpp"
#include "normality/genprob.hpp"
#include "normality/profile.hpp"
#include "normality/rational.hpp"

#include <boost/dynamic_bitset.hpp>

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace normality {

// Worlds as unstructured points with an arbitrary reflexive evidential
// accessibility. Normality is relative to a reference world whose evidence
// supplies the probabilities. There is no discovery here: worlds do not
// factor into a state and a body of evidence.

using WorldIndex = std::size_t;

class WorldlyProbabilityStructure {
 public:
  /// `access[w]` lists the worlds evidentially accessible from w. `labels`
  /// partitions the worlds into answers; empty means every world is its own.
  WorldlyProbabilityStructure(std::vector<std::string> worlds, std::vector<std::vector<WorldIndex>> access,
                              std::vector<std::string> labels, std::vector<Rational> prior, Rational threshold)
      : names_(std::move(worlds)),
        access_(std::move(access)),
        labels_(std::move(labels)),
        prior_(std::move(prior)),
        threshold_(std::move(threshold)) {
    if (labels_.empty()) labels_ = names_;
    for (auto& a : access_) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    validate();
    for (WorldIndex w = 0; w < names_.size(); ++w) {
      access_bits_.emplace_back(names_.size());
      for (auto v : access_[w]) access_bits_.back().set(v);
      access_mass_.push_back(mass(access_[w]));
    }
    std::map<std::string, std::vector<WorldIndex>> cells;
    for (WorldIndex w = 0; w < names_.size(); ++w) cells[labels_[w]].push_back(w);
    cell_of_.resize(names_.size());
    for (auto& [label, members] : cells) {
      for (auto w : members) cell_of_[w] = cells_.size();
      cells_.push_back(std::move(members));
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<WorldIndex>& access(WorldIndex w) const { return access_.at(w); }
  bool accessible(WorldIndex w, WorldIndex v) const { return access_bits_.at(w).test(v); }
  const std::string& label(WorldIndex w) const { return labels_.at(w); }
  const std::vector<Rational>& prior() const { return prior_; }
  const Rational& threshold() const { return threshold_; }

  /// Worlds sharing w's answer.
  const std::vector<WorldIndex>& cell(WorldIndex w) const { return cells_.at(cell_of_.at(w)); }

  Rational mass(const std::vector<WorldIndex>& set) const {
    Rational m = 0;
    for (auto w : set) m += prior_.at(w);
    return m;
  }
  const Rational& access_mass(WorldIndex w) const { return access_mass_.at(w); }

  std::optional<WorldIndex> find_world(std::string_view name) const {
    for (WorldIndex w = 0; w < names_.size(); ++w)
      if (names_[w] == name) return w;
    return std::nullopt;
  }

 private:
  void validate() const {
    const std::size_t n = names_.size();
    if (n == 0) throw ModelError("world set is empty");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (names_[i] == names_[j]) throw ModelError("duplicate world id '" + names_[i] + "'");
    if (access_.size() != n) throw ModelError("accessibility given for " + std::to_string(access_.size()) +
                                              " worlds, structure has " + std::to_string(n));
    if (labels_.size() != n) throw ModelError("question labels " + std::to_string(labels_.size()) +
                                              " worlds, structure has " + std::to_string(n));
    if (prior_.size() != n) throw ModelError("prior has " + std::to_string(prior_.size()) + " entries for " +
                                             std::to_string(n) + " worlds");
    if (threshold_ <= 0) throw ModelError("threshold must be positive (t = 0 makes >> reflexive)");
    if (threshold_ > 1) throw ModelError("threshold exceeds 1");
    Rational sum = 0;
    for (std::size_t w = 0; w < n; ++w) {
      if (prior_[w] < 0) throw ModelError("negative prior for world '" + names_[w] + "'");
      sum += prior_[w];
    }
    if (sum != 1) throw ModelError("prior mass " + to_string(sum) + " ≠ 1");
    for (std::size_t w = 0; w < n; ++w) {
      for (auto v : access_[w])
        if (v >= n) throw ModelError("accessibility of '" + names_[w] + "' names an unknown world");
      if (!std::binary_search(access_[w].begin(), access_[w].end(), w))
        throw ModelError("evidential accessibility is not reflexive at '" + names_[w] + "'");
      if (mass(access_[w]) <= 0)
        throw ConditioningError("evidence at '" + names_[w] + "' has zero prior mass");
    }
  }

  std::vector<std::string> names_;
  std::vector<std::vector<WorldIndex>> access_;
  std::vector<std::string> labels_;
  std::vector<Rational> prior_;
  Rational threshold_;
  std::vector<boost::dynamic_bitset<>> access_bits_;
  std::vector<Rational> access_mass_;
  std::vector<std::vector<WorldIndex>> cells_;
  std::vector<std::size_t> cell_of_;
};

/// λ_w(v): probability of v's answer given the evidence at w. Defined for
/// every v, accessible or not.
inline Rational rel_likeliness(const WorldlyProbabilityStructure& wps, WorldIndex w, WorldIndex v) {
  Rational m = 0;
  for (auto u : wps.cell(v))
    if (wps.accessible(w, u)) m += wps.prior()[u];
  return m / wps.access_mass(w);
}

namespace detail {

inline std::vector<Rational> rel_likeliness_row(const WorldlyProbabilityStructure& wps, WorldIndex w) {
  std::vector<Rational> out;
  out.reserve(wps.size());
  for (WorldIndex v = 0; v < wps.size(); ++v) out.push_back(rel_likeliness(wps, w, v));
  return out;
}

inline std::vector<Rational> rel_typicality_row(const WorldlyProbabilityStructure& wps, WorldIndex w,
                                                const std::vector<Rational>& lambda) {
  std::vector<Rational> out;
  out.reserve(wps.size());
  for (WorldIndex v = 0; v < wps.size(); ++v) {
    Rational m = 0;
    for (auto u : wps.access(w))
      if (lambda[v] >= lambda[u]) m += wps.prior()[u];
    out.push_back(m / wps.access_mass(w));
  }
  return out;
}

}  // namespace detail

/// τ_w(v): probability, given the evidence at w, that things are no more
/// normal (by w's lights) than at v.
inline Rational rel_typicality(const WorldlyProbabilityStructure& wps, WorldIndex w, WorldIndex v) {
  auto lambda = detail::rel_likeliness_row(wps, w);
  return detail::rel_typicality_row(wps, w, lambda).at(v);
}

/// Worlds, reflexive evidential accessibility, and per reference world an
/// at-least-as-normal preorder and a well-founded sufficiently-more-normal
/// relation satisfying the usual two axioms.
class RelativizedNormalityStructure {
 public:
  using Matrix = std::vector<boost::dynamic_bitset<>>;

  /// ge[w][a] has bit b set when a ⪰_w b; likewise gg for ≫_w.
  RelativizedNormalityStructure(std::vector<std::string> worlds, std::vector<std::vector<WorldIndex>> access,
                                std::vector<Matrix> ge, std::vector<Matrix> gg)
      : names_(std::move(worlds)), ge_(std::move(ge)), gg_(std::move(gg)) {
    const std::size_t n = names_.size();
    if (n == 0) throw StructuralError("world set is empty");
    if (access.size() != n || ge_.size() != n || gg_.size() != n)
      throw StructuralError("relations must be given for every reference world");
    for (WorldIndex w = 0; w < n; ++w) {
      access_.emplace_back(n);
      for (auto v : access[w]) {
        if (v >= n) throw StructuralError("accessibility of '" + names_[w] + "' names an unknown world");
        access_.back().set(v);
      }
      if (!access_.back().test(w))
        throw StructuralError("evidential accessibility is not reflexive at '" + names_[w] + "'");
      if (ge_[w].size() != n || gg_[w].size() != n)
        throw StructuralError("relations at '" + names_[w] + "' have the wrong size");
      for (WorldIndex v = 0; v < n; ++v)
        if (ge_[w][v].size() != n || gg_[w][v].size() != n)
          throw StructuralError("relations at '" + names_[w] + "' have the wrong size");
      try {
        detail::check_axioms(ge_[w], gg_[w], [this](std::size_t i) { return "'" + names_[i] + "'"; });
      } catch (const StructuralError& e) {
        throw StructuralError(std::string(e.what()) + " (relative to '" + names_[w] + "')");
      }
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const boost::dynamic_bitset<>& access(WorldIndex w) const { return access_.at(w); }

  /// a ⪰_w b
  bool at_least_as_normal(WorldIndex w, WorldIndex a, WorldIndex b) const { return ge_.at(w).at(a).test(b); }
  /// a ≫_w b
  bool sufficiently_more_normal(WorldIndex w, WorldIndex a, WorldIndex b) const { return gg_.at(w).at(a).test(b); }

 private:
  std::vector<std::string> names_;
  std::vector<boost::dynamic_bitset<>> access_;
  std::vector<Matrix> ge_;
  std::vector<Matrix> gg_;
};

inline std::vector<WorldIndex> to_indices(const boost::dynamic_bitset<>& bits) {
  std::vector<WorldIndex> out;
  for (auto i = bits.find_first(); i != boost::dynamic_bitset<>::npos; i = bits.find_next(i)) out.push_back(i);
  return out;
}

/// Accessible worlds not sufficiently less normal, by w's lights, than another accessible world.
inline std::vector<WorldIndex> rel_doxastic(const RelativizedNormalityStructure& rns, WorldIndex w) {
  const auto& access = rns.access(w);
  auto out = access;
  for (auto v = access.find_first(); v != boost::dynamic_bitset<>::npos; v = access.find_next(v))
    for (auto u = access.find_first(); u != boost::dynamic_bitset<>::npos; u = access.find_next(u))
      if (rns.sufficiently_more_normal(w, u, v)) {
        out.reset(v);
        break;
      }
  return to_indices(out);
}

inline std::vector<WorldIndex> rel_epistemic(const RelativizedNormalityStructure& rns, WorldIndex w,
                                             KnowledgeVariant variant) {
  const auto& access = rns.access(w);
  boost::dynamic_bitset<> out(rns.size());
  for (auto v : rel_doxastic(rns, w)) out.set(v);
  for (auto v = access.find_first(); v != boost::dynamic_bitset<>::npos; v = access.find_next(v)) {
    if (rns.at_least_as_normal(w, v, w)) out.set(v);
    if (variant == KnowledgeVariant::Williamsonian && rns.at_least_as_normal(w, w, v) &&
        !rns.sufficiently_more_normal(w, w, v))
      out.set(v);
  }
  return to_indices(out);
}

/// The relativized structure determined by world-relative likeliness and typicality.
inline RelativizedNormalityStructure rel_generate(const WorldlyProbabilityStructure& wps,
                                                  SufficiencyRule rule = SufficiencyRule::Sufficiency) {
  const std::size_t n = wps.size();
  const Rational keep = 1 - wps.threshold();
  std::vector<RelativizedNormalityStructure::Matrix> ge(n), gg(n);
  std::vector<std::vector<WorldIndex>> access;
  for (WorldIndex w = 0; w < n; ++w) {
    access.push_back(wps.access(w));
    auto lambda = detail::rel_likeliness_row(wps, w);
    auto tau = detail::rel_typicality_row(wps, w, lambda);
    ge[w].assign(n, boost::dynamic_bitset<>(n));
    gg[w].assign(n, boost::dynamic_bitset<>(n));
    // Both relations hold against a prefix of the worlds sorted by λ_w or τ_w.
    std::vector<WorldIndex> by_lambda(n), by_tau(n);
    for (WorldIndex v = 0; v < n; ++v) by_lambda[v] = by_tau[v] = v;
    std::sort(by_lambda.begin(), by_lambda.end(), [&](auto a, auto b) { return lambda[a] < lambda[b]; });
    std::sort(by_tau.begin(), by_tau.end(), [&](auto a, auto b) { return tau[a] < tau[b]; });
    for (WorldIndex a = 0; a < n; ++a) {
      for (auto b : by_lambda) {
        if (lambda[b] > lambda[a]) break;
        ge[w][a].set(b);
      }
      if (tau[a] == 0) continue;
      const Rational bound = keep * tau[a];
      const Rational lambda_bound = keep * lambda[a];
      for (auto b : by_tau) {
        if (tau[b] > bound) break;
        if (rule == SufficiencyRule::SufficiencyPlus && lambda[b] > lambda_bound) continue;
        gg[w][a].set(b);
      }
    }
  }
  return RelativizedNormalityStructure(wps.names(), std::move(access), std::move(ge), std::move(gg));
}

struct RelThresholdCheck {
  bool holds = true;
  std::optional<WorldIndex> witness;
  Rational witness_mass = 0;
};

/// Does every world's doxastic set get mass >= t given its evidence?
inline RelThresholdCheck rel_check_threshold(const WorldlyProbabilityStructure& wps,
                                             const RelativizedNormalityStructure& rns) {
  for (WorldIndex w = 0; w < wps.size(); ++w) {
    Rational m = wps.mass(rel_doxastic(rns, w)) / wps.access_mass(w);
    if (m < wps.threshold()) return RelThresholdCheck{false, w, m};
  }
  return {};
}

/// Index of the worldly counterpart of `w` in the structure built by `to_worldly`.
inline WorldIndex worldly_index(const ProbabilityStructure& ps, const World& w) {
  ps.check_world(w);
  WorldIndex i = 0;
  for (EvidenceIndex e = 0; e < w.evidence; ++e) i += ps.evidence_family()[e].states.members.size();
  const auto& m = ps.evidence_family()[w.evidence].states.members;
  return i + static_cast<WorldIndex>(std::lower_bound(m.begin(), m.end(), w.state) - m.begin());
}

/// The same model with worlds as points: evidence sets become equivalence
/// classes of accessibility. Each class gets equal total weight and, inside
/// it, weights proportional to the state prior, so conditional probabilities
/// are unchanged. Truncated structures are rejected.
inline WorldlyProbabilityStructure to_worldly(const ProbabilityStructure& ps) {
  if (ps.tail().mass != 0) throw ModelError("truncated structures have no worldly counterpart");
  const auto& family = ps.evidence_family();
  std::vector<std::string> names, labels;
  std::vector<std::vector<WorldIndex>> access;
  std::vector<Rational> prior;
  const Rational share = Rational(1, static_cast<long>(family.size()));
  WorldIndex first = 0;
  for (EvidenceIndex e = 0; e < family.size(); ++e) {
    const auto& members = family[e].states.members;
    std::vector<WorldIndex> cls;
    for (std::size_t k = 0; k < members.size(); ++k) cls.push_back(first + k);
    const Rational total = ps.evidence_mass(e);
    for (StateIndex s : members) {
      names.push_back(ps.states()[s] + "@" + family[e].name);
      labels.push_back(ps.question().label(ps.states(), s, e));
      access.push_back(cls);
      prior.push_back(share * ps.prior()[s] / total);
    }
    first += members.size();
  }
  return WorldlyProbabilityStructure(std::move(names), std::move(access), std::move(labels), std::move(prior),
                                     ps.threshold());
}

}  // namespace normality
