#pragma once

// Umbrella header.

#include "gaitopt/common.hpp"
#include "gaitopt/config.hpp"
#include "gaitopt/csv.hpp"
#include "gaitopt/gait.hpp"
#include "gaitopt/harness.hpp"
#include "gaitopt/learner.hpp"
#include "gaitopt/mlp.hpp"
#include "gaitopt/models.hpp"
#include "gaitopt/oracle_checks.hpp"
#include "gaitopt/parallel.hpp"
#include "gaitopt/planner.hpp"
#include "gaitopt/rewards.hpp"
#include "gaitopt/rng.hpp"
#include "gaitopt/surrogate_env.hpp"
