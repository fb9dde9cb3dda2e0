#pragma once

/// Umbrella header: stochastic stability analysis for switched linear systems
/// whose modes hold for a fixed dwell time plus an exponentially distributed
/// residence time.

#include "switchstab/format.hpp"
#include "switchstab/lemmas.hpp"
#include "switchstab/matrix.hpp"
#include "switchstab/model.hpp"
#include "switchstab/parallel.hpp"
#include "switchstab/rng.hpp"
#include "switchstab/sim.hpp"
#include "switchstab/stability.hpp"
#include "switchstab/sweep.hpp"
