#pragma once

// Umbrella header.

#include "orbicount/config.hpp"
#include "orbicount/error.hpp"
#include "orbicount/hypgeom.hpp"
#include "orbicount/orbifold.hpp"
#include "orbicount/words.hpp"
#include "orbicount/mcg.hpp"
#include "orbicount/counting.hpp"
#include "orbicount/simplerep.hpp"
#include "orbicount/verify.hpp"
#include "orbicount/cli.hpp"
