#pragma once

#include "stfluct/bounds.hpp"
#include "stfluct/core.hpp"
#include "stfluct/dyson.hpp"
#include "stfluct/error.hpp"
#include "stfluct/fluctuations.hpp"
#include "stfluct/interferometer.hpp"
#include "stfluct/parallel.hpp"
#include "stfluct/qsd_markov.hpp"
#include "stfluct/random.hpp"
#include "stfluct/stats.hpp"
#include "stfluct/version.hpp"
