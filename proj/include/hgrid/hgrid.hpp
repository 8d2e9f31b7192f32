#pragma once

#include "hgrid/summation.hpp"
#include "hgrid/grid.hpp"
#include "hgrid/expr.hpp"
#include "hgrid/test_function.hpp"
#include "hgrid/distrib.hpp"
#include "hgrid/noise.hpp"
#include "hgrid/sde.hpp"
#include "hgrid/fokker_planck.hpp"
#include "hgrid/lemmas.hpp"
