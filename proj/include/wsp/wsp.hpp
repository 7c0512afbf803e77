#pragma once

// Umbrella header for the workflow-satisfiability toolkit.

#include "wsp/conditional.hpp"
#include "wsp/core.hpp"
#include "wsp/dsl.hpp"
#include "wsp/errors.hpp"
#include "wsp/expr.hpp"
#include "wsp/options.hpp"
#include "wsp/owsp.hpp"
#include "wsp/reduce.hpp"
#include "wsp/solve.hpp"
#include "wsp/violate.hpp"
