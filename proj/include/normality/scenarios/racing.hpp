#pragma once

#include "normality/genprob.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace normality::scenarios {

// n fair coins, each flipped until it lands heads. A state lists, per coin,
// the flip on which it landed heads; its prior is 2^-(sum of entries).

enum class RacingQuestion { ExactOutcome, OutcomeShape, TotalTails, HowLongUntilOver, HowManyEndTogether };

/// Readings of "how many of the coins will ever land heads at the same time".
enum class EndTogetherReading {
  MaxSimultaneous,  ///< the largest number landing heads on any single flip
  FinalTogether,    ///< how many land heads on the last flip
  FirstFlip,        ///< how many land heads on the first flip
};

struct RacingOptions {
  unsigned coins = 10;
  /// Per-coin truncation: flips, tails or trials beyond this are tail mass.
  unsigned depth = 128;
  EndTogetherReading reading = EndTogetherReading::MaxSimultaneous;
};

using RacingState = std::vector<unsigned>;

/// Extremes of the statistics over every state in an answer cell.
/// nullopt maxima are unbounded.
struct CellFeatures {
  unsigned long min_tails = 0;
  std::optional<unsigned long> max_tails;
  unsigned long min_trials = 0;
  std::optional<unsigned long> max_trials;
  bool some_same_end = false;
  bool some_not_same_end = false;
};

struct RacingDistribution {
  RacingQuestion question;
  EndTogetherReading reading;
  unsigned coins;
  AnswerProfile profile;
  std::vector<CellFeatures> features;  // parallel to profile.blocks
};

enum class SameEnd { Yes, No, Maybe };

struct BeliefSummary {
  unsigned long min_tails = 0;
  std::optional<unsigned long> max_tails;
  unsigned long min_trials = 0;
  std::optional<unsigned long> max_trials;
  SameEnd same_end = SameEnd::No;
  std::string most_normal;
  std::vector<std::string> believed;
};

inline const char* to_string(SameEnd s) {
  switch (s) {
    case SameEnd::Yes: return "yes";
    case SameEnd::No: return "no";
    case SameEnd::Maybe: return "maybe";
  }
  return "";
}

inline const char* to_string(RacingQuestion q) {
  switch (q) {
    case RacingQuestion::ExactOutcome: return "exact outcome";
    case RacingQuestion::OutcomeShape: return "outcome shape";
    case RacingQuestion::TotalTails: return "how many total tails";
    case RacingQuestion::HowLongUntilOver: return "how long until over";
    case RacingQuestion::HowManyEndTogether: return "how many end together";
  }
  return "";
}

inline const char* to_string(EndTogetherReading r) {
  switch (r) {
    case EndTogetherReading::MaxSimultaneous: return "max-simultaneous";
    case EndTogetherReading::FinalTogether: return "final-together";
    case EndTogetherReading::FirstFlip: return "first-flip";
  }
  return "";
}

inline Rational racing_prior(const RacingState& s) {
  long total = 0;
  for (auto v : s) total += v;
  return pow2(-total);
}

inline CellFeatures state_features(const RacingState& s) {
  CellFeatures f;
  unsigned long tails = 0, trials = 0;
  for (auto v : s) {
    tails += v - 1;
    trials = std::max<unsigned long>(trials, v);
  }
  f.min_tails = tails;
  f.max_tails = tails;
  f.min_trials = trials;
  f.max_trials = trials;
  bool same = std::all_of(s.begin(), s.end(), [&](unsigned v) { return v == s.front(); });
  f.some_same_end = same;
  f.some_not_same_end = !same;
  return f;
}

/// The answer to `q` at state `s`, as a label.
inline std::string racing_answer(RacingQuestion q, const RacingState& s,
                                 EndTogetherReading reading = EndTogetherReading::MaxSimultaneous) {
  std::map<unsigned, unsigned> at;
  unsigned long sum = 0;
  for (auto v : s) {
    ++at[v];
    sum += v;
  }
  switch (q) {
    case RacingQuestion::ExactOutcome: {
      std::string out;
      for (auto v : s) out += (out.empty() ? "" : ",") + std::to_string(v);
      return out;
    }
    case RacingQuestion::OutcomeShape: {
      std::string out;
      for (auto [v, k] : at) out += (out.empty() ? "" : ",") + std::to_string(k) + "x" + std::to_string(v);
      return out;
    }
    case RacingQuestion::TotalTails: return std::to_string(sum - s.size());
    case RacingQuestion::HowLongUntilOver: return std::to_string(at.rbegin()->first);
    case RacingQuestion::HowManyEndTogether: {
      unsigned k = 0;
      if (reading == EndTogetherReading::MaxSimultaneous)
        for (auto [v, c] : at) k = std::max(k, c);
      else if (reading == EndTogetherReading::FinalTogether)
        k = at.rbegin()->second;
      else
        k = at.count(1) ? at.at(1) : 0;
      return std::to_string(k);
    }
  }
  return {};
}

namespace detail {

inline unsigned long ceil_div(unsigned long a, unsigned long b) { return (a + b - 1) / b; }

// Non-increasing sequences of `parts` positive integers summing to `total`.
inline void partitions(unsigned total, unsigned parts, unsigned max_part, std::vector<unsigned>& prefix,
                       std::vector<std::vector<unsigned>>& out) {
  if (parts == 0) {
    if (total == 0) out.push_back(prefix);
    return;
  }
  for (unsigned v = std::min(max_part, total - (parts - 1)); v >= 1; --v) {
    if (static_cast<unsigned long>(v) * parts < total) break;
    prefix.push_back(v);
    partitions(total - v, parts - 1, v, prefix, out);
    prefix.pop_back();
  }
}

// P(a given coin is still going after d flips) = 2^-d; all finished by d: (1-2^-d)^n.
inline Rational all_done_by(unsigned n, unsigned d) {
  Rational one_done = 1 - pow2(-static_cast<long>(d));
  Rational out = 1;
  for (unsigned i = 0; i < n; ++i) out *= one_done;
  return out;
}

inline std::string ordinal(unsigned long k) {
  const char* suffix = "th";
  if (k % 100 < 11 || k % 100 > 13) {
    if (k % 10 == 1) suffix = "st";
    else if (k % 10 == 2) suffix = "nd";
    else if (k % 10 == 3) suffix = "rd";
  }
  return std::to_string(k) + suffix;
}

inline RacingDistribution exact_outcome(const RacingOptions& o) {
  const unsigned n = o.coins;
  RacingDistribution d{RacingQuestion::ExactOutcome, o.reading, n, {}, {}};
  Rational listed = 0;
  for (unsigned k = n; k <= n + o.depth; ++k) {
    // Every outcome summing to k is its own cell of mass 2^-k.
    AnswerBlock b{"sum=" + std::to_string(k), binomial(k - 1, n - 1), pow2(-static_cast<long>(k))};
    listed += Rational(b.count) * b.mass;
    d.profile.blocks.push_back(b);
    CellFeatures f;
    f.min_tails = k - n;
    f.max_tails = k - n;
    f.min_trials = ceil_div(k, n);
    f.max_trials = k - n + 1;
    f.some_same_end = k % n == 0;
    f.some_not_same_end = n > 1 && k > n;
    d.features.push_back(f);
  }
  d.profile.tail_mass = 1 - listed;
  d.profile.tail_cell_bound = pow2(-static_cast<long>(n + o.depth) - 1);
  return d;
}

inline RacingDistribution outcome_shape(const RacingOptions& o, unsigned max_sum) {
  const unsigned n = o.coins;
  RacingDistribution d{RacingQuestion::OutcomeShape, o.reading, n, {}, {}};
  const BigInt n_factorial = factorial(n);
  Rational listed = 0;
  for (unsigned s = n; s <= max_sum; ++s) {
    std::vector<std::vector<unsigned>> shapes;
    std::vector<unsigned> prefix;
    partitions(s, n, s, prefix, shapes);
    for (const auto& p : shapes) {
      RacingState state(p.rbegin(), p.rend());
      BigInt arrangements = n_factorial;
      std::map<unsigned, unsigned> at;
      for (auto v : p) ++at[v];
      for (auto [v, k] : at) arrangements /= factorial(k);
      AnswerBlock b{racing_answer(RacingQuestion::OutcomeShape, state), 1,
                    Rational(arrangements) * pow2(-static_cast<long>(s))};
      listed += b.mass;
      d.profile.blocks.push_back(std::move(b));
      d.features.push_back(state_features(state));
    }
  }
  d.profile.tail_mass = 1 - listed;
  // No unlisted shape has more than n! arrangements of mass 2^-(max_sum+1).
  d.profile.tail_cell_bound = Rational(n_factorial) * pow2(-static_cast<long>(max_sum) - 1);
  return d;
}

inline RacingDistribution total_tails(const RacingOptions& o) {
  const unsigned n = o.coins;
  RacingDistribution d{RacingQuestion::TotalTails, o.reading, n, {}, {}};
  auto mass = [&](unsigned j) { return Rational(binomial(j + n - 1, n - 1)) * pow2(-static_cast<long>(j + n)); };
  Rational listed = 0;
  for (unsigned j = 0; j <= o.depth; ++j) {
    d.profile.blocks.push_back(AnswerBlock{std::to_string(j), 1, mass(j)});
    listed += mass(j);
    CellFeatures f;
    f.min_tails = j;
    f.max_tails = j;
    f.min_trials = ceil_div(j + n, n);
    f.max_trials = j + 1;
    f.some_same_end = j % n == 0;
    f.some_not_same_end = n > 1 && j > 0;
    d.features.push_back(f);
  }
  d.profile.tail_mass = 1 - listed;
  // The negative binomial decreases past its mode n-1, so the first unlisted cell is the heaviest.
  d.profile.tail_cell_bound = o.depth + 1 >= n ? mass(o.depth + 1) : d.profile.tail_mass;
  return d;
}

inline RacingDistribution until_over(const RacingOptions& o) {
  const unsigned n = o.coins;
  RacingDistribution d{RacingQuestion::HowLongUntilOver, o.reading, n, {}, {}};
  auto mass = [&](unsigned t) { return all_done_by(n, t) - all_done_by(n, t - 1); };
  for (unsigned t = 1; t <= o.depth; ++t) {
    d.profile.blocks.push_back(AnswerBlock{std::to_string(t), 1, mass(t)});
    CellFeatures f;
    f.min_tails = t - 1;
    f.max_tails = static_cast<unsigned long>(n) * (t - 1);
    f.min_trials = t;
    f.max_trials = t;
    f.some_same_end = true;
    f.some_not_same_end = n > 1 && t > 1;
    d.features.push_back(f);
  }
  d.profile.tail_mass = 1 - all_done_by(n, o.depth);
  // P(duration = t) decreases once 2^t exceeds n; otherwise fall back to the tail mass.
  d.profile.tail_cell_bound = (1ul << std::min(o.depth, 60u)) > 2ul * n ? mass(o.depth + 1) : d.profile.tail_mass;
  return d;
}

inline CellFeatures end_together_features(unsigned n, unsigned k, EndTogetherReading reading) {
  CellFeatures f;
  switch (reading) {
    case EndTogetherReading::MaxSimultaneous: {
      // Fill flips greedily, k coins per flip.
      unsigned left = n;
      for (unsigned long flip = 1; left > 0; ++flip) {
        unsigned now = std::min(k, left);
        f.min_tails += now * (flip - 1);
        left -= now;
      }
      f.min_trials = ceil_div(n, k);
      f.some_same_end = k == n;
      f.some_not_same_end = k < n;
      break;
    }
    case EndTogetherReading::FinalTogether:
      f.min_tails = k == n ? 0 : k;
      f.min_trials = k == n ? 1 : 2;
      f.some_same_end = k == n;
      f.some_not_same_end = k < n;
      break;
    case EndTogetherReading::FirstFlip:
      f.min_tails = n - k;
      f.min_trials = k == n ? 1 : 2;
      if (k == n) {
        f.max_tails = 0;
        f.max_trials = 1;
      }
      f.some_same_end = k == n || k == 0;
      f.some_not_same_end = n > 1 && k < n;
      break;
  }
  return f;
}

inline RacingDistribution end_together(const RacingOptions& o) {
  const unsigned n = o.coins;
  RacingDistribution d{RacingQuestion::HowManyEndTogether, o.reading, n, {}, {}};
  std::vector<Rational> mass(n + 1, Rational(0));
  Rational unresolved = 0;
  switch (o.reading) {
    case EndTogetherReading::MaxSimultaneous: {
      // Exact DP over (coins still flipping, most heads on one flip so far).
      std::vector<std::vector<Rational>> split(n + 1);  // split[a][k] = C(a,k) 2^-a
      for (unsigned a = 0; a <= n; ++a)
        for (unsigned k = 0; k <= a; ++k) split[a].push_back(Rational(binomial(a, k)) * pow2(-static_cast<long>(a)));
      std::map<std::pair<unsigned, unsigned>, Rational> dist{{{n, 0}, Rational(1)}};
      for (unsigned flip = 0; flip < o.depth; ++flip) {
        std::map<std::pair<unsigned, unsigned>, Rational> next;
        for (const auto& [key, p] : dist) {
          auto [active, best] = key;
          if (active == 0) {
            next[key] += p;
            continue;
          }
          for (unsigned k = 0; k <= active; ++k) next[{active - k, std::max(best, k)}] += p * split[active][k];
        }
        dist = std::move(next);
      }
      for (const auto& [key, p] : dist) {
        if (key.first == 0)
          mass[key.second] += p;
        else
          unresolved += p;
      }
      break;
    }
    case EndTogetherReading::FinalTogether:
      // k coins finish on flip m, the rest strictly earlier, summed over m:
      // C(n,k) sum_m 2^-km (1 - 2^-(m-1))^(n-k), expanded binomially and
      // summed as geometric series. Exact, so no slack.
      for (unsigned k = 1; k <= n; ++k) {
        Rational sum = 0;
        for (unsigned j = 0; j <= n - k; ++j) {
          Rational term = Rational(binomial(n - k, j)) * pow2(static_cast<long>(j)) / (pow2(static_cast<long>(k + j)) - 1);
          sum += j % 2 ? -term : term;
        }
        mass[k] = Rational(binomial(n, k)) * sum;
      }
      break;
    case EndTogetherReading::FirstFlip:
      for (unsigned k = 0; k <= n; ++k) mass[k] = Rational(binomial(n, k)) * pow2(-static_cast<long>(n));
      break;
  }
  const unsigned first = o.reading == EndTogetherReading::FirstFlip ? 0 : 1;
  for (unsigned k = first; k <= n; ++k) {
    d.profile.blocks.push_back(AnswerBlock{std::to_string(k), 1, mass[k]});
    d.features.push_back(end_together_features(n, k, o.reading));
  }
  d.profile.slack = unresolved;
  return d;
}

}  // namespace detail

/// Exact answer distribution for one question. Outcome shapes are listed up
/// to `shape_max_sum` total flips (default: coins + 30).
inline RacingDistribution answer_distribution(RacingQuestion q, const RacingOptions& o = {},
                                              unsigned shape_max_sum = 0) {
  if (o.coins < 1 || o.coins > 64) throw ModelError("racing supports 1..64 coins");
  if (o.depth < 4 || o.depth > 4096) throw ModelError("racing depth must lie in 4..4096");
  switch (q) {
    case RacingQuestion::ExactOutcome: return detail::exact_outcome(o);
    case RacingQuestion::OutcomeShape:
      return detail::outcome_shape(o, shape_max_sum ? shape_max_sum : o.coins + 30);
    case RacingQuestion::TotalTails: return detail::total_tails(o);
    case RacingQuestion::HowLongUntilOver: return detail::until_over(o);
    case RacingQuestion::HowManyEndTogether: return detail::end_together(o);
  }
  throw ModelError("unknown racing question");
}

/// Plain-language description of the most normal answers.
inline std::string most_normal_description(const RacingDistribution& d, const std::vector<std::size_t>& top) {
  std::vector<std::string> labels;
  for (auto i : top) labels.push_back(d.profile.blocks[i].label);
  auto joined = [&](const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) out += (i ? sep : "") + labels[i];
    return out;
  };
  const std::string tied = labels.size() > 1 ? " [tied]" : "";
  switch (d.question) {
    case RacingQuestion::ExactOutcome:
      if (labels.size() == 1 && labels[0] == "sum=" + std::to_string(d.coins)) return "all coins land heads first time";
      return "outcomes with " + joined(" or ") + tied;
    case RacingQuestion::OutcomeShape: {
      std::string out;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += " or ";
        std::stringstream parts(labels[i]);
        std::string part, shape;
        while (std::getline(parts, part, ',')) {
          auto x = part.find('x');
          auto count = part.substr(0, x), flips = part.substr(x + 1);
          shape += (shape.empty() ? "" : ", ") + count + " × " + flips + (flips == "1" ? " flip" : " flips");
        }
        out += shape;
      }
      return out + tied;
    }
    case RacingQuestion::TotalTails: return joined(" or ") + " total tails" + tied;
    case RacingQuestion::HowLongUntilOver: {
      std::string out;
      for (std::size_t i = 0; i < labels.size(); ++i)
        out += (i ? " or " : "") + detail::ordinal(std::stoul(labels[i]));
      return "ends on " + out + " trial" + tied;
    }
    case RacingQuestion::HowManyEndTogether:
      if (d.reading == EndTogetherReading::FinalTogether) return joined(" or ") + " flippers finish together last" + tied;
      if (d.reading == EndTogetherReading::FirstFlip) return joined(" or ") + " flippers get heads on the first flip" + tied;
      return joined(" or ") + " flippers get heads at once" + tied;
  }
  return {};
}

/// What is believed at the start about tails, trials and a common ending,
/// relative to question `q` at threshold t.
inline BeliefSummary summarize(const RacingDistribution& d, const Rational& t,
                               SufficiencyRule rule = SufficiencyRule::Sufficiency) {
  ProfileAnalysis a(d.profile, t, rule);
  const auto believed = a.believed();
  if (believed.empty()) throw ModelError("no answer is believed");
  BeliefSummary s;
  bool any_same = false, any_not = false, unbounded_tails = false, unbounded_trials = false;
  s.min_tails = d.features[believed.front()].min_tails;
  s.min_trials = d.features[believed.front()].min_trials;
  unsigned long max_tails = 0, max_trials = 0;
  for (auto i : believed) {
    const auto& f = d.features[i];
    s.believed.push_back(d.profile.blocks[i].label);
    s.min_tails = std::min(s.min_tails, f.min_tails);
    s.min_trials = std::min(s.min_trials, f.min_trials);
    if (f.max_tails) max_tails = std::max(max_tails, *f.max_tails);
    else unbounded_tails = true;
    if (f.max_trials) max_trials = std::max(max_trials, *f.max_trials);
    else unbounded_trials = true;
    any_same |= f.some_same_end;
    any_not |= f.some_not_same_end;
  }
  if (!unbounded_tails) s.max_tails = max_tails;
  if (!unbounded_trials) s.max_trials = max_trials;
  s.same_end = any_same && any_not ? SameEnd::Maybe : any_same ? SameEnd::Yes : SameEnd::No;
  s.most_normal = most_normal_description(d, a.top_blocks());
  return s;
}

/// Summary for one question. Outcome shapes are enumerated to increasing
/// total flips until the belief set is certified.
inline BeliefSummary racing_summary(RacingQuestion q, const Rational& t, const RacingOptions& o = {}) {
  if (q != RacingQuestion::OutcomeShape) return summarize(answer_distribution(q, o), t);
  const unsigned limit = o.coins + std::min(o.depth, 120u);
  for (unsigned max_sum = o.coins + 16;; max_sum += 6) {
    max_sum = std::min(max_sum, limit);
    try {
      return summarize(answer_distribution(q, o, max_sum), t);
    } catch (const UndecidedAtDepth&) {
      if (max_sum >= limit) throw;
    }
  }
}

struct RacingRow {
  RacingQuestion question;
  Rational threshold;
  BeliefSummary summary;
};

inline std::vector<RacingRow> racing_table(const std::vector<Rational>& thresholds, const RacingOptions& o = {}) {
  std::vector<RacingRow> rows;
  for (auto q : {RacingQuestion::ExactOutcome, RacingQuestion::OutcomeShape, RacingQuestion::TotalTails,
                 RacingQuestion::HowLongUntilOver, RacingQuestion::HowManyEndTogether})
    for (const auto& t : thresholds) rows.push_back(RacingRow{q, t, racing_summary(q, t, o)});
  return rows;
}

inline std::string format_bound(const std::optional<unsigned long>& v) { return v ? std::to_string(*v) : "∞"; }

/// Decimal form of a threshold such as 3/4 -> ".75".
inline std::string format_threshold(const Rational& t) {
  if (t == 1) return "1";
  std::string digits;
  Rational frac = t;
  for (int i = 0; i < 12 && frac != 0; ++i) {
    frac *= 10;
    BigInt d = numerator(frac) / denominator(frac);
    digits += d.str();
    frac -= Rational(d);
  }
  if (frac != 0) return normality::to_string(t);
  return "." + digits;
}

inline std::string racing_table_tsv(const std::vector<RacingRow>& rows) {
  std::string out = "Q\twhich worlds are most normal\tt\tmin tails\tmax tails\tmin trials\tmax trials\tsame end?\n";
  const char* numerals[] = {"(i)", "(ii)", "(iii)", "(iv)", "(v)"};
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out += std::string(numerals[static_cast<int>(r.question)]) + " " + to_string(r.question) + "\t" + s.most_normal +
           "\t" + format_threshold(r.threshold) + "\t" + std::to_string(s.min_tails) + "\t" + format_bound(s.max_tails) +
           "\t" + std::to_string(s.min_trials) + "\t" + format_bound(s.max_trials) + "\t" + to_string(s.same_end) + "\n";
  }
  return out;
}

}  // namespace normality::scenarios
