#pragma once

#include "fracsmooth/chaos.hpp"
#include "fracsmooth/csv.hpp"
#include "fracsmooth/errors.hpp"
#include "fracsmooth/expectation.hpp"
#include "fracsmooth/hedging.hpp"
#include "fracsmooth/hermite.hpp"
#include "fracsmooth/model.hpp"
#include "fracsmooth/normal.hpp"
#include "fracsmooth/parallel.hpp"
#include "fracsmooth/payoffs.hpp"
#include "fracsmooth/quadrature.hpp"
#include "fracsmooth/random.hpp"
#include "fracsmooth/ratefit.hpp"
#include "fracsmooth/regression.hpp"
#include "fracsmooth/smoothness.hpp"
#include "fracsmooth/timenets.hpp"
#include "fracsmooth/version.hpp"
#include "fracsmooth/weaklimit.hpp"
