#pragma once

#include "mft/analytic.hpp"
#include "mft/core.hpp"
#include "mft/market.hpp"
#include "mft/model.hpp"
#include "mft/montecarlo.hpp"
#include "mft/projection.hpp"
#include "mft/smoothing.hpp"
#include "mft/strategy.hpp"
#include "mft/trace.hpp"
#include "mft/utility.hpp"
#include "mft/wealth.hpp"
