#pragma once

#include "normality/density.hpp"
#include "normality/error.hpp"
#include "normality/genprob.hpp"
#include "normality/rational.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace normality {

// De se questions partition worlds, so the answer at <s, E> may depend on E.
// Finite structures carry them as Question::de_se labelings; this header adds
// the generalized likeliness and the continuous Decay case.

/// P([s]_{Q_E} | E), where Q_E = {q_E : q in Q} partitions E.
inline Rational dese_likeliness(const ProbabilityStructure& ps, const World& w) {
  if (ps.question().kind() != QuestionKind::DeSe)
    throw PreconditionError("de se likeliness needs a question over worlds (lift a de dicto question first)");
  const auto& ev = ps.evidence_family().at(w.evidence);
  if (!ev.states.contains(w.state)) throw PreconditionError("world's state lies outside its evidence");
  const auto answer = ps.question().label(ps.states(), w.state, w.evidence);
  Rational cell = 0;
  for (StateIndex s : ev.states.members)
    if (ps.question().label(ps.states(), s, w.evidence) == answer) cell += ps.prior()[s];
  return cell / ps.evidence_mass(w.evidence);
}

/// The same structure asking `question` instead.
inline ProbabilityStructure with_question(const ProbabilityStructure& ps, Question question) {
  return ProbabilityStructure(ps.states(), ps.evidence_family(), std::move(question), ps.prior(), ps.threshold(),
                              ps.tail());
}

// Decay: an atom with mean lifetime one year. States are decay times t' > 0
// after creation; evidence (t, inf) says it has not decayed by t.

enum class Measuring { Index, Logarithmic };

enum class DecayQuestion {
  DeSe,     // how long after now
  DeDicto,  // how long after creation
};

struct DecayModel {
  Measuring measuring = Measuring::Logarithmic;
  DecayQuestion question = DecayQuestion::DeSe;
  double threshold = 0.95;

  void validate() const {
    if (!(threshold > 0) || threshold > 1) throw ModelError("decay threshold must lie in (0, 1]");
  }
};

inline std::string to_string(Measuring m) { return m == Measuring::Index ? "index" : "log"; }

inline Measuring parse_measuring(const std::string& s) {
  if (s == "index" || s == "I") return Measuring::Index;
  if (s == "log" || s == "ln" || s == "logarithmic") return Measuring::Logarithmic;
  throw ModelError("unknown measuring function '" + s + "' (index or log)");
}

/// <t', (t, inf)>: decays at t' having survived to t.
struct DecayWorld {
  double decay_time = 0;
  double evidence_start = 0;
};

namespace detail {

inline void check_start(double t) {
  if (!(t >= 0) || !std::isfinite(t)) throw ModelError("evidence (t, inf) needs finite t >= 0");
}

inline void check_world(const DecayWorld& w) {
  check_start(w.evidence_start);
  if (!(w.decay_time > w.evidence_start) || !std::isfinite(w.decay_time))
    throw ModelError("malformed decay world: decay time " + std::to_string(w.decay_time) +
                     " does not lie in its evidence (" + std::to_string(w.evidence_start) + ", inf)");
}

// P(decay after t + r | no decay by t), from the chance law at creation.
inline double survival_after(double t, double r) { return std::exp(-(t + r) + t); }

// P(decay within r more years | no decay by t).
inline double decays_within(double t, double r) { return -std::expm1(-(t + r) + t); }

}  // namespace detail

/// Coordinate the question's measuring function assigns to the answer at w.
inline double decay_coordinate(const DecayModel& model, const DecayWorld& w) {
  detail::check_world(w);
  const double x = model.question == DecayQuestion::DeSe ? w.decay_time - w.evidence_start : w.decay_time;
  return model.measuring == Measuring::Index ? x : std::log(x);
}

/// Density f_E over coordinates for evidence (t, inf).
inline Density decay_evidence_density(const DecayModel& model, double t) {
  detail::check_start(t);
  const double inf = std::numeric_limits<double>::infinity();
  const bool dese = model.question == DecayQuestion::DeSe;
  // De dicto coordinates measure from creation: r = coordinate - t.
  const double offset = dese ? 0.0 : t;
  if (model.measuring == Measuring::Index) {
    const double lo = offset;
    return Density(
        "index density, evidence (" + std::to_string(t) + ", inf)",
        [t, offset](double x) { return x < offset ? 0.0 : detail::survival_after(t, x - offset); }, lo, inf, {},
        [t, offset](double x) { return x <= offset ? 0.0 : detail::decays_within(t, x - offset); });
  }
  // Log: coordinate x = ln(offset + r).
  const double lo = dese ? -inf : (t > 0 ? std::log(t) : -inf);
  const double mode = dese ? 0.0 : std::max(0.0, lo);
  std::vector<double> turns;
  if (mode > lo) turns.push_back(mode);
  return Density(
      "log density, evidence (" + std::to_string(t) + ", inf)",
      [t, offset, lo](double x) {
        if (x < lo) return 0.0;
        const double y = std::exp(x);
        const double s = detail::survival_after(t, y - offset);
        return s == 0 ? 0.0 : y * s;
      },
      lo, inf, turns,
      [t, offset, lo](double x) {
        return x <= lo ? 0.0 : std::max(0.0, detail::decays_within(t, std::exp(x) - offset));
      });
}

/// d(w) = f_E(m([w]_Q)): e^{t-t'} under the index measure, and
/// (t'-t)e^{t-t'} (de se) or t'e^{t-t'} (de dicto) under the log measure.
inline double decay_density(const DecayModel& model, const DecayWorld& w) {
  return decay_evidence_density(model, w.evidence_start)(decay_coordinate(model, w));
}

/// τ(w): probability given E of an answer with density at most d(w).
inline double decay_typicality(const DecayModel& model, const DecayWorld& w) {
  return density_typicality(decay_evidence_density(model, w.evidence_start), decay_coordinate(model, w));
}

/// Doxastically possible decay times, as distances r = t' - t from now.
struct DecayInterval {
  double lo = 0;
  double hi = 0;
  bool lo_open = false;  // r may be arbitrarily close to lo but not equal
  double cutoff = 0;     // density of the least normal possible answer
  double mass = 0;

  bool contains(double r) const { return (lo_open ? r > lo : r >= lo) && r <= hi; }
};

inline DecayInterval decay_belief_interval(const DecayModel& model, double evidence_start) {
  model.validate();
  const auto f = decay_evidence_density(model, evidence_start);
  const auto region = belief_region(f, model.threshold);
  if (region.intervals.size() != 1) throw NumericError("decay belief region is not an interval");
  const bool dese = model.question == DecayQuestion::DeSe;
  auto to_r = [&](double x) {
    const double y = model.measuring == Measuring::Index ? x : std::exp(x);
    return dese ? y : y - evidence_start;
  };
  const auto& iv = region.intervals.front();
  DecayInterval out;
  // The support's lower end is r = 0, which no world realises.
  out.lo_open = iv.lo <= f.lo();
  out.lo = out.lo_open ? 0.0 : to_r(iv.lo);
  out.hi = to_r(iv.hi);
  out.cutoff = region.cutoff;
  out.mass = region.mass;
  return out;
}

/// The de dicto question "how long after creation" against the de se one.
struct DeDictoContrast {
  double threshold = 0;
  double later = 0;  // evidence (later, inf) for the comparison
  DecayInterval dese_at_creation;
  DecayInterval dedicto_at_creation;
  DecayInterval dese_later;
  DecayInterval dedicto_later;
  double first_year_at_creation = 0;  // P(t' <= 1)
  double first_year_later = 0;        // P(t' <= 1 | t' > later)
  double next_year_at_creation = 0;
  double next_year_later = 0;  // P(t' <= later + 1 | t' > later)
};

inline DeDictoContrast dedicto_contrast(double threshold, double later = 1.0) {
  if (!(later > 0)) throw ModelError("comparison time must be positive");
  DecayModel dese{Measuring::Logarithmic, DecayQuestion::DeSe, threshold};
  DecayModel dedicto{Measuring::Logarithmic, DecayQuestion::DeDicto, threshold};
  DeDictoContrast c;
  c.threshold = threshold;
  c.later = later;
  c.dese_at_creation = decay_belief_interval(dese, 0);
  c.dedicto_at_creation = decay_belief_interval(dedicto, 0);
  c.dese_later = decay_belief_interval(dese, later);
  c.dedicto_later = decay_belief_interval(dedicto, later);
  c.first_year_at_creation = detail::decays_within(0, 1);
  c.first_year_later = later >= 1 ? 0.0 : detail::decays_within(later, 1 - later);
  c.next_year_at_creation = detail::decays_within(0, 1);
  c.next_year_later = detail::decays_within(later, 1);
  return c;
}

/// Samples of f^I(x), f^ln(x), d^I(r), d^ln(r) at the same abscissa v, as
/// CSV. Cells outside a curve's domain are empty.
inline std::string decay_curves_csv(double lo, double hi, int samples) {
  if (samples < 2 || !(lo < hi)) throw ModelError("need at least two samples over a non-empty range");
  const DecayModel index{Measuring::Index, DecayQuestion::DeSe, 1};
  const DecayModel log{Measuring::Logarithmic, DecayQuestion::DeSe, 1};
  const auto fi = decay_evidence_density(index, 0);
  const auto fl = decay_evidence_density(log, 0);
  std::ostringstream out;
  out << std::setprecision(12) << "v,f_index,f_log,d_index,d_log\n";
  for (int i = 0; i < samples; ++i) {
    const double v = lo + (hi - lo) * i / (samples - 1);
    out << v << ',';
    if (v >= 0) out << fi(v);
    out << ',' << fl(v) << ',';
    if (v > 0) out << decay_density(index, {v, 0}) << ',' << decay_density(log, {v, 0});
    else out << ',';
    out << '\n';
  }
  return out.str();
}

}  // namespace normality
