#pragma once

// Umbrella header for the consensus-answer library: probabilistic and/xor
// trees, generating-function probability computations, and mean/median
// consensus answers for set, Top-k, group-by count and clustering queries.

#include "consensus/aggregate.hpp"
#include "consensus/assignment.hpp"
#include "consensus/cluster.hpp"
#include "consensus/errors.hpp"
#include "consensus/genfunc.hpp"
#include "consensus/io.hpp"
#include "consensus/min_cost_flow.hpp"
#include "consensus/model.hpp"
#include "consensus/oracle.hpp"
#include "consensus/set_consensus.hpp"
#include "consensus/topk.hpp"
