#pragma once

#include "errors.hpp"
#include "model.hpp"
#include "stable_math.hpp"
#include "ode_core.hpp"
#include "linear2.hpp"
#include "inner_solver.hpp"
#include "broyden.hpp"
#include "outer_solver.hpp"
#include "verification.hpp"
#include "simulate.hpp"
#include "experiments.hpp"
#include "io.hpp"
