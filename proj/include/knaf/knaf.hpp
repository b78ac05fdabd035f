#pragma once

// Umbrella header: sparse RKHS policies with normalized advantage functions,
// online Q-learning, KOMP pruning, density-arbitrated policy composition and
// a 2D lidar-robot simulator to train in.

#include "knaf/compose.hpp"
#include "knaf/eval.hpp"
#include "knaf/io/policy_io.hpp"
#include "knaf/kernel.hpp"
#include "knaf/komp.hpp"
#include "knaf/learner.hpp"
#include "knaf/naf_policy.hpp"
#include "knaf/sim/lidar_sim.hpp"
#include "knaf/sim/world_map.hpp"
#include "knaf/sparse_model.hpp"
