#pragma once

#include "common.hpp"
#include "geometry.hpp"
#include "discretize.hpp"
#include "spectral.hpp"
#include "bie.hpp"
#include "scmap.hpp"
#include "circle_fit.hpp"
#include "koebe.hpp"
#include "domain_io.hpp"
#include "mapdata.hpp"
#include "grids.hpp"
#include "cli.hpp"
