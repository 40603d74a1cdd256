#pragma once

#include "normality/dese.hpp"

namespace normality::scenarios {

/// Decay, asking how long from now the atom will decay.
inline DecayModel build_decay(Measuring measuring, double threshold = 0.95) {
  DecayModel model{measuring, DecayQuestion::DeSe, threshold};
  model.validate();
  return model;
}

}  // namespace normality::scenarios
