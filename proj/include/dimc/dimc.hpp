#pragma once

#include "dimc/decpomdp.hpp"
#include "dimc/errors.hpp"
#include "dimc/estimate.hpp"
#include "dimc/history.hpp"
#include "dimc/linear.hpp"
#include "dimc/mdp_solve.hpp"
#include "dimc/model.hpp"
#include "dimc/model_io.hpp"
#include "dimc/non_urgent.hpp"
#include "dimc/normalize.hpp"
#include "dimc/profile_io.hpp"
#include "dimc/rational.hpp"
#include "dimc/rng.hpp"
#include "dimc/semantics.hpp"
#include "dimc/slot.hpp"
#include "dimc/strategy.hpp"
#include "dimc/sync_mdp.hpp"
#include "dimc/sync_policy.hpp"
