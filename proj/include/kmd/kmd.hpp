#pragma once

#include "kmd/asymptotics.hpp"
#include "kmd/error.hpp"
#include "kmd/estimator.hpp"
#include "kmd/graph.hpp"
#include "kmd/harness.hpp"
#include "kmd/io.hpp"
#include "kmd/kernel.hpp"
#include "kmd/point_set.hpp"
#include "kmd/population.hpp"
#include "kmd/quadrature.hpp"
#include "kmd/rng.hpp"
