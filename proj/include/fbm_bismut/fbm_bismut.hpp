#pragma once

// Umbrella header.

#include "fbm_bismut/errors.hpp"
#include "fbm_bismut/grid.hpp"
#include "fbm_bismut/special_functions.hpp"
#include "fbm_bismut/quadrature.hpp"
#include "fbm_bismut/rng.hpp"
#include "fbm_bismut/fractional_calculus.hpp"
#include "fbm_bismut/fbm_operators.hpp"
#include "fbm_bismut/model.hpp"
#include "fbm_bismut/sde_engine.hpp"
#include "fbm_bismut/monte_carlo.hpp"
#include "fbm_bismut/bismut_weights.hpp"
#include "fbm_bismut/verification_oracles.hpp"
#include "fbm_bismut/operator_checks.hpp"
#include "fbm_bismut/harnack_suite.hpp"
