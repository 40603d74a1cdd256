#pragma once

#include "normality/core.hpp"
#include "normality/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace normality {

// Continuous questions. Every answer has probability zero, so normality is
// read off a probability density over a real coordinate (the measuring
// function's image) instead of off answer probabilities.

/// Closed interval in measuring coordinates. Endpoints may be infinite.
struct Interval {
  double lo = 0;
  double hi = 0;
  bool contains(double x) const { return lo <= x && x <= hi; }
  double width() const { return hi - lo; }
};

/// Maps an answer (a real parameter) to the coordinate densities are taken in.
struct MeasuringFunction {
  std::string name;
  std::function<double(double)> to;
  std::function<double(double)> from;

  static MeasuringFunction identity() {
    return {"identity", [](double x) { return x; }, [](double x) { return x; }};
  }
};

/// A density on [lo, hi] given in closed form, monotone between consecutive
/// turning points. An optional CDF (mass of [lo, x]) replaces quadrature.
class Density {
 public:
  using Fn = std::function<double(double)>;

  Density(std::string description, Fn f, double lo, double hi, std::vector<double> turning_points = {},
          Fn cdf = {})
      : description_(std::move(description)), f_(std::move(f)), cdf_(std::move(cdf)), lo_(lo), hi_(hi) {
    if (!f_) throw ModelError("density has no function");
    if (!(lo_ < hi_)) throw ModelError("density support is empty");
    std::sort(turning_points.begin(), turning_points.end());
    std::vector<double> cuts{lo_};
    for (double x : turning_points)
      if (x > lo_ && x < hi_ && x != cuts.back()) cuts.push_back(x);
    cuts.push_back(hi_);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      Piece p{cuts[i], cuts[i + 1], end_value(cuts[i]), end_value(cuts[i + 1])};
      if (!std::isfinite(p.fa) || !std::isfinite(p.fb) || p.fa < 0 || p.fb < 0)
        throw NumericError("density '" + description_ + "' is not finite and non-negative at a piece boundary");
      check_monotone(p);
      pieces_.push_back(p);
      peak_ = std::max({peak_, p.fa, p.fb});
    }
  }

  const std::string& description() const { return description_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double peak() const { return peak_; }
  bool has_cdf() const { return static_cast<bool>(cdf_); }

  double operator()(double x) const { return x < lo_ || x > hi_ ? 0.0 : f_(x); }

  /// Probability of [a, b] ∩ support.
  double mass(double a, double b) const {
    a = std::max(a, lo_);
    b = std::min(b, hi_);
    if (!(a < b)) return 0;
    if (cdf_) return cdf_(b) - cdf_(a);
    return integrate(a, b);
  }

  /// ∫ f over [a, b] by adaptive Gauss–Kronrod, ignoring any CDF.
  double integrate(double a, double b) const {
    double error = 0;
    double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [this](double x) { return f_(x); }, a, b, 20, 1e-13, &error);
    if (!std::isfinite(value) || !(error <= 1e-10 * std::max(1.0, std::abs(value))))
      throw NumericError("density '" + description_ + "' failed to integrate on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]: value " + std::to_string(value) + ", error estimate " +
                         std::to_string(error));
    return value;
  }

  double total() const { return mass(lo_, hi_); }

  /// {x : f(x) >= c}, or {x : f(x) > c} when `strict`, as disjoint closed
  /// intervals (strictness only matters on flat pieces).
  std::vector<Interval> superlevel(double c, bool strict = false) const {
    std::vector<Interval> out;
    auto keep = [&](double v) { return strict ? v > c : v >= c; };
    for (const auto& p : pieces_) {
      std::optional<Interval> part;
      if (p.fa == p.fb) {
        if (keep(p.fa)) part = Interval{p.a, p.b};
      } else if (p.fa < p.fb) {
        if (!keep(p.fb)) continue;
        part = Interval{keep(p.fa) ? p.a : crossing(p.a, p.b, c, true), p.b};
      } else {
        if (!keep(p.fa)) continue;
        part = Interval{p.a, keep(p.fb) ? p.b : crossing(p.a, p.b, c, false)};
      }
      if (!part) continue;
      if (!out.empty() && out.back().hi >= part->lo)
        out.back().hi = std::max(out.back().hi, part->hi);
      else
        out.push_back(*part);
    }
    return out;
  }

  double mass_of(const std::vector<Interval>& set) const {
    double m = 0;
    for (const auto& i : set) m += mass(i.lo, i.hi);
    return m;
  }

 private:
  struct Piece {
    double a, b, fa, fb;
  };

  // Samples the piece and rejects a turn the caller did not declare.
  void check_monotone(const Piece& p) const {
    constexpr int kSamples = 64;
    const double a = std::isinf(p.a) ? p.b - std::max(1.0, std::abs(p.b)) * 64 : p.a;
    const double b = std::isinf(p.b) ? p.a + std::max(1.0, std::abs(p.a)) * 64 : p.b;
    const double slack = 1e-12 * std::max(1.0, std::max(p.fa, p.fb));
    double prev = p.fa;
    for (int i = 1; i <= kSamples; ++i) {
      const double x = i == kSamples && !std::isinf(p.b) ? p.b : a + (b - a) * i / kSamples;
      const double v = i == kSamples ? p.fb : f_(x);
      const bool bad = p.fa < p.fb ? v < prev - slack : p.fa > p.fb ? v > prev + slack : std::abs(v - p.fa) > slack;
      if (bad)
        throw NumericError("density '" + description_ + "' turns near " + std::to_string(x) +
                           " without a declared turning point");
      prev = v;
    }
  }

  // Density at a piece boundary; an infinite end contributes its limit 0.
  double end_value(double x) const { return std::isinf(x) ? 0.0 : f_(x); }

  // The point in (a, b) where a monotone piece crosses c.
  double crossing(double a, double b, double c, bool increasing) const {
    auto g = [&](double x) { return f_(x) - c; };
    // Replace an infinite end by a finite point on the far side of c.
    if (std::isinf(a) || std::isinf(b)) {
      const double anchor = std::isinf(a) ? b : a;
      const double dir = std::isinf(a) ? -1.0 : 1.0;
      double step = std::max(1.0, std::abs(anchor));
      double x = anchor + dir * step;
      for (int i = 0; i < 1100 && g(x) >= 0; ++i) {
        step *= 2;
        x = anchor + dir * step;
      }
      if (g(x) >= 0) throw NumericError("density '" + description_ + "' does not fall below the cutoff");
      (std::isinf(a) ? a : b) = x;
    }
    double ga = g(a), gb = g(b);
    if (ga == 0) return a;
    if (gb == 0) return b;
    if ((ga < 0) != increasing || (gb > 0) != increasing)
      throw NumericError("density '" + description_ + "' is not monotone between its turning points");
    std::uintmax_t iterations = 300;
    auto [left, right] = boost::math::tools::toms748_solve(
        g, a, b, ga, gb, boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2),
        iterations);
    return increasing ? right : left;
  }

  std::string description_;
  Fn f_;
  Fn cdf_;
  double lo_;
  double hi_;
  std::vector<Piece> pieces_;
  double peak_ = 0;
};

/// Throws NumericError unless the density integrates to 1 within `tolerance`
/// and, when it carries a CDF, the CDF agrees with quadrature on test intervals.
inline void validate(const Density& f, double tolerance = 1e-9) {
  const double total = f.integrate(f.lo(), f.hi());
  if (!(std::abs(total - 1) <= tolerance))
    throw NumericError("density '" + f.description() + "' integrates to " + std::to_string(total) + ", not 1");
  if (!f.has_cdf()) return;
  const double mid = std::isfinite(f.lo()) && std::isfinite(f.hi()) ? (f.lo() + f.hi()) / 2
                     : std::isfinite(f.lo())                        ? f.lo() + 1
                     : std::isfinite(f.hi())                        ? f.hi() - 1
                                                                    : 0.0;
  std::vector<double> points{f.lo()};
  for (double off : {-5.0, -1.0, -0.25, 0.0, 0.5, 2.0, 6.0})
    if (mid + off > f.lo() && mid + off < f.hi()) points.push_back(mid + off);
  points.push_back(f.hi());
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double q = f.integrate(points[i], points[i + 1]);
    const double c = f.mass(points[i], points[i + 1]);
    if (!(std::abs(q - c) <= tolerance))
      throw NumericError("density '" + f.description() + "': CDF gives " + std::to_string(c) + " on [" +
                         std::to_string(points[i]) + ", " + std::to_string(points[i + 1]) + "], quadrature " +
                         std::to_string(q));
  }
}

/// A superlevel set of the density reaching the required mass, plus any
/// positive-probability answers (atoms) it includes.
struct BeliefRegion {
  std::vector<Interval> intervals;
  std::vector<double> atoms;
  double cutoff = 0;
  double mass = 0;

  bool contains(double x) const {
    if (std::find(atoms.begin(), atoms.end(), x) != atoms.end()) return true;
    return std::any_of(intervals.begin(), intervals.end(), [&](const Interval& i) { return i.contains(x); });
  }
  double width() const {
    double w = 0;
    for (const auto& i : intervals) w += i.width();
    return w;
  }
};

/// The superlevel set {f >= c} for the largest c whose mass reaches `target`
/// (an absolute mass, so sub-probability densities work too).
inline BeliefRegion superlevel_region(const Density& f, double target) {
  BeliefRegion r;
  if (target <= 0) {
    r.cutoff = f.peak();
    return r;
  }
  auto mass_at = [&](double c) { return f.mass_of(f.superlevel(c)); };
  const double whole = mass_at(0);
  if (target > whole + 1e-12)
    throw NumericError("density '" + f.description() + "' has mass " + std::to_string(whole) + " < " +
                       std::to_string(target));
  double lo = 0, hi = f.peak();
  if (target >= whole - 1e-12) {
    hi = 0;
  } else if (mass_at(hi) >= target) {
    lo = hi;
  } else {
    for (int i = 0; i < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++i) {
      const double mid = lo + (hi - lo) / 2;
      (mass_at(mid) >= target ? lo : hi) = mid;
    }
  }
  r.cutoff = lo;
  r.intervals = f.superlevel(lo);
  r.mass = f.mass_of(r.intervals);
  return r;
}

/// Shortest region of probability t: the highest-density region.
inline BeliefRegion belief_region(const Density& f, double t) {
  if (!(t > 0) || t > 1) throw ModelError("threshold must lie in (0, 1]");
  return superlevel_region(f, t);
}

/// Evidential probability that the density is no higher than at x.
inline double density_typicality(const Density& f, double x) {
  const double total = f.total();
  return (total - f.mass_of(f.superlevel(f(x), true))) / total;
}

struct DensityEvidence {
  std::string name;
  Density density;
};

/// Worlds pair a real answer with a body of evidence; each body of evidence
/// carries its own density in measuring coordinates.
class DensityStructure {
 public:
  DensityStructure(std::string question, std::vector<DensityEvidence> evidence, double threshold,
                   MeasuringFunction measuring = MeasuringFunction::identity())
      : question_(std::move(question)),
        evidence_(std::move(evidence)),
        threshold_(threshold),
        measuring_(std::move(measuring)) {
    if (evidence_.empty()) throw ModelError("density structure has no evidence");
    if (!(threshold_ > 0)) throw ModelError("threshold must be positive (t = 0 leaves >> ill-founded)");
    if (threshold_ > 1) throw ModelError("threshold exceeds 1");
    for (std::size_t i = 0; i < evidence_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (evidence_[i].name == evidence_[j].name)
          throw ModelError("duplicate evidence '" + evidence_[i].name + "'");
  }

  const std::string& question() const { return question_; }
  const std::vector<DensityEvidence>& evidence_family() const { return evidence_; }
  double threshold() const { return threshold_; }
  const MeasuringFunction& measuring() const { return measuring_; }
  const Density& density(EvidenceIndex e) const { return evidence_.at(e).density; }

  std::optional<EvidenceIndex> find_evidence(std::string_view name) const {
    for (EvidenceIndex e = 0; e < evidence_.size(); ++e)
      if (evidence_[e].name == name) return e;
    return std::nullopt;
  }

 private:
  std::string question_;
  std::vector<DensityEvidence> evidence_;
  double threshold_;
  MeasuringFunction measuring_;
};

struct ContinuousWorld {
  double answer = 0;
  EvidenceIndex evidence = 0;
};

inline double coordinate(const DensityStructure& ds, const ContinuousWorld& w) {
  return ds.measuring().to(w.answer);
}

/// d(w): the evidence's density at the measured value of w's answer.
inline double world_density(const DensityStructure& ds, const ContinuousWorld& w) {
  return ds.density(w.evidence)(coordinate(ds, w));
}

inline double typicality(const DensityStructure& ds, const ContinuousWorld& w) {
  return density_typicality(ds.density(w.evidence), coordinate(ds, w));
}

inline bool at_least_as_normal(const DensityStructure& ds, const ContinuousWorld& w, const ContinuousWorld& v) {
  return w.evidence == v.evidence && world_density(ds, w) >= world_density(ds, v);
}

inline bool sufficiently_more_normal(const DensityStructure& ds, const ContinuousWorld& w,
                                     const ContinuousWorld& v) {
  if (w.evidence != v.evidence) return false;
  const double tw = typicality(ds, w);
  return tw > 0 && typicality(ds, v) <= (1 - ds.threshold()) * tw;
}

/// Doxastically accessible answers given evidence e, in measuring coordinates.
/// Reported closed: the shortest intervals of probability t.
inline BeliefRegion doxastic_region(const DensityStructure& ds, EvidenceIndex e) {
  return belief_region(ds.density(e), ds.threshold());
}

/// Epistemically accessible answers from w. Both variants add every answer
/// at least as dense as w's; the Williamsonian one also adds the less dense
/// answers w is not sufficiently more normal than, a margin for error.
inline BeliefRegion epistemic_region(const DensityStructure& ds, const ContinuousWorld& w,
                                     KnowledgeVariant variant) {
  const auto& f = ds.density(w.evidence);
  auto belief = doxastic_region(ds, w.evidence);
  double cutoff = std::min(belief.cutoff, world_density(ds, w));
  if (variant == KnowledgeVariant::Williamsonian) {
    const double tw = typicality(ds, w);
    if (tw <= 0) {
      cutoff = 0;
    } else {
      const double margin = superlevel_region(f, f.total() * (1 - (1 - ds.threshold()) * tw)).cutoff;
      cutoff = std::min(cutoff, margin);
    }
  }
  BeliefRegion r;
  r.cutoff = cutoff;
  r.intervals = f.superlevel(cutoff);
  r.mass = f.mass_of(r.intervals);
  return r;
}

/// Answers (not coordinates) spanned by an interval, for increasing measuring functions.
inline Interval answer_interval(const DensityStructure& ds, const Interval& i) {
  return {ds.measuring().from(i.lo), ds.measuring().from(i.hi)};
}

// Positive-probability answers mixed with a density over the rest. Atoms
// outrank every density-only answer; atoms compare by probability and
// density-only answers by density.

struct Atom {
  double at = 0;
  double mass = 0;
};

class HybridDistribution {
 public:
  /// `continuous` carries the non-atomic mass (total 1 − Σ atoms).
  HybridDistribution(std::vector<Atom> atoms, std::optional<Density> continuous)
      : atoms_(std::move(atoms)), continuous_(std::move(continuous)) {
    double sum = 0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!(atoms_[i].mass > 0)) throw ModelError("answer " + std::to_string(atoms_[i].at) +
                                                  " has neither positive probability nor a density");
      for (std::size_t j = 0; j < i; ++j)
        if (atoms_[j].at == atoms_[i].at) throw ModelError("duplicate atom at " + std::to_string(atoms_[i].at));
      sum += atoms_[i].mass;
    }
    atom_mass_ = sum;
    const double rest = continuous_ ? continuous_->total() : 0.0;
    if (!(std::abs(sum + rest - 1) <= 1e-9))
      throw NumericError("atoms and density carry total mass " + std::to_string(sum + rest) + ", not 1");
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::optional<Density>& continuous() const { return continuous_; }
  double atom_mass() const { return atom_mass_; }

  std::optional<double> atom_mass_at(double x) const {
    for (const auto& a : atoms_)
      if (a.at == x) return a.mass;
    return std::nullopt;
  }

  double density_at(double x) const { return continuous_ ? (*continuous_)(x) : 0.0; }

  bool at_least_as_normal(double x, double y) const {
    auto ax = atom_mass_at(x), ay = atom_mass_at(y);
    if (ax || ay) return (ax ? *ax : 0.0) >= (ay ? *ay : 0.0);
    return density_at(x) >= density_at(y);
  }

  /// Mass of the answers no more normal than x under the mixed measure.
  double typicality(double x) const {
    if (auto ax = atom_mass_at(x)) {
      double m = continuous_ ? continuous_->total() : 0.0;
      for (const auto& a : atoms_)
        if (a.mass <= *ax) m += a.mass;
      return m;
    }
    if (!continuous_) throw ModelError("answer " + std::to_string(x) + " has neither probability nor density");
    const auto& f = *continuous_;
    return f.total() - f.mass_of(f.superlevel(f(x), true));
  }

  bool sufficiently_more_normal(double x, double y, double t) const {
    const double tx = typicality(x);
    return tx > 0 && typicality(y) <= (1 - t) * tx;
  }

 private:
  std::vector<Atom> atoms_;
  std::optional<Density> continuous_;
  double atom_mass_ = 0;
};

/// Answers with typicality above 1 − t: the likeliest atoms, and once every
/// atom is in, the densest slab making up the rest of t.
inline BeliefRegion hybrid_region(const HybridDistribution& h, double t) {
  if (!(t > 0) || t > 1) throw ModelError("threshold must lie in (0, 1]");
  BeliefRegion r;
  for (const auto& a : h.atoms())
    if (h.typicality(a.at) > 1 - t) {
      r.atoms.push_back(a.at);
      r.mass += a.mass;
    }
  std::sort(r.atoms.begin(), r.atoms.end());
  if (h.continuous() && r.atoms.size() == h.atoms().size()) {
    auto slab = superlevel_region(*h.continuous(), t - h.atom_mass());
    r.intervals = std::move(slab.intervals);
    r.cutoff = slab.cutoff;
    r.mass += slab.mass;
  } else if (h.continuous()) {
    r.cutoff = h.continuous()->peak();
  }
  return r;
}

/// Samples of the density with region membership, for plotting.
inline std::string density_csv(const Density& f, const BeliefRegion& region, double lo, double hi,
                               std::size_t samples) {
  if (samples < 2 || !(lo < hi)) throw ModelError("need at least two samples on a non-empty range");
  std::ostringstream out;
  out << std::setprecision(12) << "m,density,in_belief_region\n";
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    out << x << ',' << f(x) << ',' << (region.contains(x) ? 1 : 0) << '\n';
  }
  return out.str();
}

// Standard densities.

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline Density gaussian_density(double mu, double sigma) {
  if (!(sigma > 0)) throw ModelError("standard deviation must be positive");
  const double norm = 1 / (sigma * std::sqrt(2 * std::numbers::pi));
  std::ostringstream d;
  d << "N(" << mu << ", " << sigma << "^2)";
  return Density(
      d.str(), [=](double x) { return norm * std::exp(-0.5 * ((x - mu) / sigma) * ((x - mu) / sigma)); },
      -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), {mu},
      [=](double x) { return normal_cdf((x - mu) / sigma); });
}

/// `weight` times a Gaussian, for mixtures.
inline Density scaled_gaussian(double mu, double sigma, double weight) {
  auto g = gaussian_density(mu, sigma);
  std::ostringstream d;
  d << weight << "·" << g.description();
  return Density(
      d.str(), [=](double x) { return weight * g(x); }, g.lo(), g.hi(), {mu},
      [=](double x) { return weight * normal_cdf((x - mu) / sigma); });
}

inline Density uniform_density(double lo, double hi) {
  if (!(lo < hi)) throw ModelError("uniform density needs lo < hi");
  const double h = 1 / (hi - lo);
  return Density(
      "U[" + std::to_string(lo) + ", " + std::to_string(hi) + ")", [=](double) { return h; }, lo, hi, {},
      [=](double x) { return (x - lo) * h; });
}

/// Normal with mean `centre` and deviation `sigma` wrapped onto [0, 2π).
/// Wrapping terms reach 6σ past the circle on each side.
inline Density wrapped_normal(double centre, double sigma) {
  if (!(sigma > 0)) throw ModelError("standard deviation must be positive");
  const double two_pi = 2 * std::numbers::pi;
  centre = std::fmod(centre, two_pi);
  if (centre < 0) centre += two_pi;
  const int reach = static_cast<int>(std::ceil(6 * sigma / two_pi)) + 1;
  const double norm = 1 / (sigma * std::sqrt(2 * std::numbers::pi));
  auto f = [=](double x) {
    double s = 0;
    for (int k = -reach; k <= reach; ++k) {
      const double z = (x - centre + k * two_pi) / sigma;
      s += std::exp(-0.5 * z * z);
    }
    return norm * s;
  };
  auto cdf = [=](double x) {
    double s = 0;
    for (int k = -reach; k <= reach; ++k)
      s += normal_cdf((x - centre + k * two_pi) / sigma) - normal_cdf((-centre + k * two_pi) / sigma);
    return s;
  };
  double antipode = std::fmod(centre + std::numbers::pi, two_pi);
  std::ostringstream d;
  d << "wrapped N(" << centre << ", " << sigma << "^2)";
  return Density(d.str(), f, 0, two_pi, {centre, antipode}, cdf);
}

}  // namespace normality
