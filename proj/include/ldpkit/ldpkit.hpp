#pragma once

#include "ldpkit/cramer_rate.hpp"
#include "ldpkit/dist_core.hpp"
#include "ldpkit/error.hpp"
#include "ldpkit/gartner_ellis.hpp"
#include "ldpkit/io.hpp"
#include "ldpkit/iprojection.hpp"
#include "ldpkit/montecarlo.hpp"
#include "ldpkit/numeric.hpp"
#include "ldpkit/rng.hpp"
#include "ldpkit/sanov_types.hpp"
#include "ldpkit/strong_asymptotics.hpp"
