#pragma once

#include "rsdrl/error.hpp"
#include "rsdrl/risk_measures.hpp"
#include "rsdrl/rng.hpp"
#include "rsdrl/tabular_mdp.hpp"
#include "rsdrl/augmented.hpp"
#include "rsdrl/augmented_dp.hpp"
#include "rsdrl/linear_mdp.hpp"
#include "rsdrl/gram.hpp"
#include "rsdrl/linear_cvar.hpp"
#include "rsdrl/lsvi_ucb.hpp"
#include "rsdrl/tabular_optimistic.hpp"
#include "rsdrl/mdp_io.hpp"
#include "rsdrl/sqrt_fit.hpp"
#include "rsdrl/experiment.hpp"
