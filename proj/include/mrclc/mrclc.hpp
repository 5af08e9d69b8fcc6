#pragma once

// Umbrella header: model-reference composite learning control for
// companion-form affine nonlinear systems, with classical MRAC and
// concurrent-learning baselines.

#include "config.hpp"
#include "control.hpp"
#include "dynamics.hpp"
#include "linalg.hpp"
#include "output.hpp"
#include "scenarios.hpp"
#include "simulation.hpp"
