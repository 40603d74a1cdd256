#pragma once

// Everything except the command-line front end (normality/cli.hpp).

#include "normality/core.hpp"
#include "normality/density.hpp"
#include "normality/dese.hpp"
#include "normality/error.hpp"
#include "normality/genprob.hpp"
#include "normality/modelspec.hpp"
#include "normality/profile.hpp"
#include "normality/rational.hpp"
#include "normality/relnorm.hpp"
#include "normality/scenarios/decay.hpp"
#include "normality/scenarios/flipping.hpp"
#include "normality/scenarios/heading.hpp"
#include "normality/scenarios/instruments.hpp"
#include "normality/scenarios/lottery.hpp"
#include "normality/scenarios/racing.hpp"
