#pragma once

// Umbrella header for the networked Cournot equilibrium engine.

#include "cournet/analysis.hpp"
#include "cournet/errors.hpp"
#include "cournet/game_io.hpp"
#include "cournet/ingest.hpp"
#include "cournet/model.hpp"
#include "cournet/solver.hpp"
#include "cournet/welfare.hpp"
