#pragma once

// Simulation library for neutral McKean-Vlasov stochastic delay equations
// driven by fractional Brownian motion: exact fBm sampling, the interacting
// N-particle Euler-Maruyama and Caratheodory schemes, empirical-measure
// utilities, and the convergence / propagation-of-chaos study harness.

#include "mvsdde/core.hpp"
#include "mvsdde/rng.hpp"
#include "mvsdde/grid.hpp"
#include "mvsdde/parallel.hpp"
#include "mvsdde/fbm.hpp"
#include "mvsdde/fbm_checks.hpp"
#include "mvsdde/measure.hpp"
#include "mvsdde/model.hpp"
#include "mvsdde/solver.hpp"
#include "mvsdde/experiments.hpp"
