#pragma once

#include "lpnorm/backend.hpp"
#include "lpnorm/errors.hpp"
#include "lpnorm/graph.hpp"
#include "lpnorm/homotopy.hpp"
#include "lpnorm/inverse_maintenance.hpp"
#include "lpnorm/io.hpp"
#include "lpnorm/irls.hpp"
#include "lpnorm/linalg.hpp"
#include "lpnorm/mwu.hpp"
#include "lpnorm/problem.hpp"
#include "lpnorm/refinement.hpp"
#include "lpnorm/residual_solver.hpp"
#include "lpnorm/rng.hpp"
