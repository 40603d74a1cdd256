#pragma once

#include "normality/error.hpp"
#include "normality/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace normality {

enum class SufficiencyRule { Sufficiency, SufficiencyPlus };

/// `count` answer cells that all carry the same prior mass `mass` within one
/// body of evidence. Explicit structures use count = 1; aggregated models
/// (e.g. all 2^100 non-special coin sequences) put many cells in one block.
struct AnswerBlock {
  std::string label;
  BigInt count = 1;
  Rational mass;
};

/// The answer distribution within one body of evidence, possibly truncated.
///
/// `tail_mass` belongs to cells that are not listed, none heavier than
/// `tail_cell_bound`. `slack` is mass not yet attributed to any cell; it may
/// end up in listed or unlisted cells. Both are zero for finite models.
struct AnswerProfile {
  std::vector<AnswerBlock> blocks;
  Rational tail_mass = 0;
  Rational tail_cell_bound = 0;
  Rational slack = 0;

  Rational total() const {
    Rational t = tail_mass + slack;
    for (const auto& b : blocks) t += Rational(b.count) * b.mass;
    return t;
  }
};

enum class Decision { In, Out, Undecided };

/// Typicality bounds (conditional on the evidence). Equal when exact.
struct TypicalityBounds {
  Rational low;
  Rational high;
  bool exact() const { return low == high; }
};

/// Likeliness, typicality and doxastic status of every block of a profile.
/// A block is doxastically possible iff no cell is sufficiently more normal
/// than it; with truncation the verdict is only reported when every
/// completion of the tail and slack agrees.
class ProfileAnalysis {
 public:
  ProfileAnalysis(AnswerProfile profile, Rational threshold, SufficiencyRule rule)
      : profile_(std::move(profile)), threshold_(std::move(threshold)), keep_(1 - threshold_), rule_(rule) {
    if (threshold_ <= 0 || threshold_ > 1) throw ModelError("threshold must lie in (0,1], got " + to_string(threshold_));
    total_ = profile_.total();
    if (total_ <= 0) throw ConditioningError("evidence has zero probability");
    for (const auto& b : profile_.blocks)
      if (b.count < 1 || b.mass < 0) throw ModelError("answer block '" + b.label + "' is malformed");
    compute_typicality();
    compute_decisions();
  }

  const AnswerProfile& profile() const { return profile_; }
  const Rational& threshold() const { return threshold_; }
  SufficiencyRule rule() const { return rule_; }
  const Rational& total() const { return total_; }
  std::size_t size() const { return profile_.blocks.size(); }

  Rational likeliness(std::size_t i) const { return profile_.blocks.at(i).mass / total_; }

  TypicalityBounds typicality(std::size_t i) const { return {low_.at(i) / total_, high_.at(i) / total_}; }

  /// Exact typicality; throws when truncation leaves it uncertain.
  Rational exact_typicality(std::size_t i) const {
    require_exact(i);
    return low_[i] / total_;
  }

  /// w >> v for cells in blocks i and j, in the exact case.
  bool sufficiently_more_normal(std::size_t i, std::size_t j) const {
    require_exact(i);
    require_exact(j);
    // Unnormalized masses: the common evidence total cancels.
    const Rational& ti = low_[i];
    const Rational& tj = low_[j];
    if (ti <= 0) return false;
    if (tj > keep_ * ti) return false;
    if (rule_ == SufficiencyRule::SufficiencyPlus && profile_.blocks[j].mass > keep_ * profile_.blocks[i].mass)
      return false;
    return true;
  }

  Decision decision(std::size_t i) const { return decisions_.at(i); }
  Decision tail_decision() const { return tail_decision_; }

  bool fully_decided() const {
    return tail_decision_ != Decision::Undecided &&
           std::none_of(decisions_.begin(), decisions_.end(), [](Decision d) { return d == Decision::Undecided; });
  }

  /// Indices of blocks whose cells are doxastically possible.
  std::vector<std::size_t> believed() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < decisions_.size(); ++i) {
      if (decisions_[i] == Decision::Undecided)
        throw UndecidedAtDepth("belief in answer '" + profile_.blocks[i].label + "' is not settled at this depth");
      if (decisions_[i] == Decision::In) out.push_back(i);
    }
    if (tail_decision_ == Decision::Undecided)
      throw UndecidedAtDepth("answers beyond the truncation depth might be doxastically possible");
    return out;
  }

  /// Conditional mass of the believed blocks (lower bound when truncated).
  Rational believed_mass() const {
    Rational m = 0;
    for (auto i : believed()) m += Rational(profile_.blocks[i].count) * profile_.blocks[i].mass;
    return m / total_;
  }

  /// Blocks of maximal likeliness.
  std::vector<std::size_t> top_blocks() const {
    std::vector<std::size_t> out;
    if (profile_.blocks.empty()) return out;
    Rational best = profile_.blocks[0].mass;
    for (const auto& b : profile_.blocks) best = std::max(best, b.mass);
    for (std::size_t i = 0; i < profile_.blocks.size(); ++i)
      if (profile_.blocks[i].mass == best) out.push_back(i);
    return out;
  }

 private:
  void require_exact(std::size_t i) const {
    if (low_.at(i) != high_[i])
      throw UndecidedAtDepth("typicality of '" + profile_.blocks[i].label + "' depends on the truncated tail");
  }

  void compute_typicality() {
    const auto& blocks = profile_.blocks;
    const std::size_t n = blocks.size();
    low_.assign(n, 0);
    high_.assign(n, 0);
    const Rational& s = profile_.slack;
    const Rational& tail = profile_.tail_mass;
    const Rational& bound = profile_.tail_cell_bound;

    if (s == 0) {
      // Typicality is the mass at or below the block's level.
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return blocks[a].mass < blocks[b].mass; });
      Rational running = 0;
      for (std::size_t k = 0; k < n;) {
        std::size_t end = k;
        while (end < n && blocks[order[end]].mass == blocks[order[k]].mass) {
          running += Rational(blocks[order[end]].count) * blocks[order[end]].mass;
          ++end;
        }
        for (std::size_t q = k; q < end; ++q) {
          const auto i = order[q];
          low_[i] = running;
          high_[i] = running;
          if (tail > 0) {
            if (bound <= blocks[i].mass) low_[i] += tail;
            high_[i] += tail;
          }
        }
        k = end;
      }
      return;
    }

    // With unattributed mass, orderings within `s` of each other are open.
    for (std::size_t i = 0; i < n; ++i) {
      Rational lo = blocks[i].mass;
      Rational hi = blocks[i].mass + s;
      if (blocks[i].count > 1) hi += Rational(blocks[i].count - 1) * blocks[i].mass;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const Rational cm = Rational(blocks[j].count) * blocks[j].mass;
        if (blocks[j].mass + s <= blocks[i].mass) lo += cm;
        if (blocks[j].mass <= blocks[i].mass + s) hi += cm;
      }
      if (tail > 0) {
        if (bound + s <= blocks[i].mass) lo += tail;
        hi += tail;
      }
      low_[i] = lo;
      high_[i] = hi;
    }
  }

  void compute_decisions() {
    const auto& blocks = profile_.blocks;
    const std::size_t n = blocks.size();
    const Rational& keep = keep_;
    const Rational& s = profile_.slack;
    const bool plus = rule_ == SufficiencyRule::SufficiencyPlus;

    Rational max_low = 0, max_high = 0, max_mass = 0;
    for (std::size_t i = 0; i < n; ++i) {
      max_low = std::max(max_low, low_[i]);
      max_high = std::max(max_high, high_[i]);
      max_mass = std::max(max_mass, blocks[i].mass);
    }
    const bool has_tail = profile_.tail_mass > 0;
    Rational tail_high = 0;
    if (has_tail) {
      tail_high = profile_.tail_mass + s;
      for (const auto& b : blocks)
        if (b.mass <= profile_.tail_cell_bound + s) tail_high += Rational(b.count) * b.mass;
      max_high = std::max(max_high, tail_high);
    }
    const Rational max_mass_high = std::max(max_mass, has_tail ? profile_.tail_cell_bound : Rational(0)) + s;

    // Some cell certainly defeats a cell with typicality <= hi and mass <= mhi.
    auto certainly_defeated = [&](const Rational& hi, const Rational& mhi) {
      if (!plus) return max_low > 0 && hi <= keep * max_low;
      for (std::size_t j = 0; j < n; ++j)
        if (low_[j] > 0 && hi <= keep * low_[j] && mhi <= keep * blocks[j].mass) return true;
      return false;
    };
    auto certainly_undefeated = [&](const Rational& lo, const Rational& mlo) {
      if (lo > keep * max_high) return true;
      return plus && mlo > keep * max_mass_high;
    };

    decisions_.assign(n, Decision::Undecided);
    if (plus && s == 0 && !has_tail) {
      // Exact case: the top block maximizes both typicality and likeliness.
      for (std::size_t i = 0; i < n; ++i) {
        bool out = max_low > 0 && low_[i] <= keep * max_low && blocks[i].mass <= keep * max_mass;
        decisions_[i] = out ? Decision::Out : Decision::In;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (certainly_defeated(high_[i], blocks[i].mass + s))
          decisions_[i] = Decision::Out;
        else if (certainly_undefeated(low_[i], blocks[i].mass))
          decisions_[i] = Decision::In;
      }
    }

    if (!has_tail)
      tail_decision_ = Decision::Out;
    else if (certainly_defeated(tail_high, profile_.tail_cell_bound + s))
      tail_decision_ = Decision::Out;
    else
      tail_decision_ = Decision::Undecided;
  }

  AnswerProfile profile_;
  Rational threshold_;
  Rational keep_;
  SufficiencyRule rule_;
  Rational total_;
  std::vector<Rational> low_;
  std::vector<Rational> high_;
  std::vector<Decision> decisions_;
  Decision tail_decision_ = Decision::Out;
};

}  // namespace normality
