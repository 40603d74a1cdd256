#pragma once

#include "normality/density.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace normality::scenarios {

// Noisy instruments: a scale whose reading is Gaussian about the true weight
// difference, and an unmarked clock whose apparent orientation is a wrapped
// normal about the true one.

/// Mass within two standard deviations of a Gaussian mean, erf(√2) = .9545…
inline double two_sigma_threshold() { return std::erf(std::numbers::sqrt2); }

inline std::string reading_name(double mu) {
  std::ostringstream s;
  s << "reads " << mu;
  return s.str();
}

/// After the scale reads mu: the true difference is N(mu, sigma²).
inline DensityStructure build_weighing(double mu, double sigma, double threshold = two_sigma_threshold()) {
  return DensityStructure("how much heavier is the apple than the orange",
                          {DensityEvidence{reading_name(mu), gaussian_density(mu, sigma)}}, threshold);
}

inline std::string looks_name(double apparent) {
  std::ostringstream s;
  s << "looks " << apparent;
  return s.str();
}

/// Evidence "S" before looking (uniform orientation) and "looks y" after
/// seeing apparent orientation y.
inline DensityStructure build_clock(double sigma, double apparent, double threshold) {
  return DensityStructure("what is the hand's orientation",
                          {DensityEvidence{"S", uniform_density(0, 2 * std::numbers::pi)},
                           DensityEvidence{looks_name(apparent), wrapped_normal(apparent, sigma)}},
                          threshold);
}

/// An arc of the dial, running anticlockwise from centre − half_width to
/// centre + half_width (angles in [0, 2π)).
struct Arc {
  double centre = 0;
  double half_width = 0;
};

/// The arc covered by a region that is connected on the circle.
inline Arc region_arc(const BeliefRegion& r) {
  const double two_pi = 2 * std::numbers::pi;
  if (r.intervals.empty()) throw ModelError("empty region has no arc");
  double lo = r.intervals.front().lo, hi = r.intervals.back().hi;
  if (r.intervals.size() == 2 && lo == 0 && hi == two_pi) {
    lo = r.intervals.back().lo - two_pi;  // wraps through 0
    hi = r.intervals.front().hi;
  } else if (r.intervals.size() != 1) {
    throw ModelError("region is not a single arc");
  }
  double centre = std::fmod((lo + hi) / 2 + two_pi, two_pi);
  return Arc{centre, (hi - lo) / 2};
}

}  // namespace normality::scenarios
