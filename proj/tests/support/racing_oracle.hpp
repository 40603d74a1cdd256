#pragma once

// Brute-force racing oracle: enumerate every outcome of a few coins up to a
// fixed number of flips each. Shared by the unit and acceptance suites.

#include "normality/scenarios/racing.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace normality::testing {

using scenarios::EndTogetherReading;
using scenarios::RacingQuestion;
using scenarios::RacingState;


// Full enumeration of every state with all coins landing by flip `depth`.
struct Enumerated {
  struct Cell {
    Rational mass = 0;
    std::vector<RacingState> states;
  };
  std::map<std::string, Cell> cells;
};

inline std::string oracle_label(RacingQuestion q, const RacingState& s, EndTogetherReading reading) {
  std::vector<unsigned> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  unsigned sum = 0, last = 0;
  for (auto v : s) {
    sum += v;
    last = std::max(last, v);
  }
  switch (q) {
    case RacingQuestion::ExactOutcome: {
      std::string out;
      for (auto v : s) out += std::to_string(v) + ";";
      return out;
    }
    case RacingQuestion::OutcomeShape: {
      std::string out;
      for (auto v : sorted) out += std::to_string(v) + ";";
      return out;
    }
    case RacingQuestion::TotalTails: return std::to_string(sum - s.size());
    case RacingQuestion::HowLongUntilOver: return std::to_string(last);
    case RacingQuestion::HowManyEndTogether: {
      std::map<unsigned, unsigned> count;
      for (auto v : s) ++count[v];
      unsigned k = 0;
      if (reading == EndTogetherReading::MaxSimultaneous)
        for (auto [v, c] : count) k = std::max(k, c);
      else if (reading == EndTogetherReading::FinalTogether)
        k = count[last];
      else
        k = count[1];
      return std::to_string(k);
    }
  }
  return {};
}

inline Enumerated enumerate(unsigned coins, unsigned depth, RacingQuestion q, EndTogetherReading reading) {
  Enumerated e;
  RacingState s(coins, 1);
  while (true) {
    auto& cell = e.cells[oracle_label(q, s, reading)];
    unsigned sum = 0;
    for (auto v : s) sum += v;
    cell.mass += pow2(-static_cast<long>(sum));
    cell.states.push_back(s);
    std::size_t i = 0;
    while (i < coins && s[i] == depth) s[i++] = 1;
    if (i == coins) break;
    ++s[i];
  }
  return e;
}

// Least set of cells closed under "at least as probable" with mass >= t.
// Enumeration misses mass `slack`, so masses and sums closer than that are
// read as equal.
inline std::set<std::string> oracle_believed(const Enumerated& e, const Rational& t) {
  Rational enumerated = 0;
  std::vector<std::pair<Rational, std::string>> cells;
  for (const auto& [label, cell] : e.cells) {
    cells.emplace_back(cell.mass, label);
    enumerated += cell.mass;
  }
  const Rational slack = 1 - enumerated;
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::set<std::string> out;
  Rational mass = 0;
  for (std::size_t i = 0; i < cells.size();) {
    std::size_t j = i;
    while (j < cells.size() && cells[i].first - cells[j].first <= slack) {
      out.insert(cells[j].second);
      mass += cells[j].first;
      ++j;
    }
    if (mass + slack >= t) break;
    i = j;
  }
  return out;
}

struct OracleSummary {
  unsigned long min_tails = ~0ul, max_tails = 0, min_trials = ~0ul, max_trials = 0;
  bool same = false, not_same = false;
};

inline OracleSummary oracle_features(const Enumerated& e, const std::set<std::string>& believed) {
  OracleSummary o;
  for (const auto& label : believed) {
    for (const auto& s : e.cells.at(label).states) {
      unsigned long tails = 0, trials = 0;
      for (auto v : s) {
        tails += v - 1;
        trials = std::max<unsigned long>(trials, v);
      }
      o.min_tails = std::min(o.min_tails, tails);
      o.max_tails = std::max(o.max_tails, tails);
      o.min_trials = std::min(o.min_trials, trials);
      o.max_trials = std::max(o.max_trials, trials);
      bool same = std::all_of(s.begin(), s.end(), [&](unsigned v) { return v == s.front(); });
      o.same |= same;
      o.not_same |= !same;
    }
  }
  return o;
}

}  // namespace normality::testing
