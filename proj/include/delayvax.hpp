#pragma once

// Umbrella header: the whole library in one include.

#include "delayvax/delay.hpp"
#include "delayvax/errors.hpp"
#include "delayvax/experiment.hpp"
#include "delayvax/galton_watson.hpp"
#include "delayvax/io.hpp"
#include "delayvax/multisource.hpp"
#include "delayvax/oracle.hpp"
#include "delayvax/parallel.hpp"
#include "delayvax/planner.hpp"
#include "delayvax/random.hpp"
#include "delayvax/reward.hpp"
#include "delayvax/selfcheck.hpp"
#include "delayvax/sim.hpp"
#include "delayvax/tree.hpp"
