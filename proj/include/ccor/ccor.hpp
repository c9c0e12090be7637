#pragma once

// Umbrella header.

#include "ccor/types.hpp"
#include "ccor/linalg.hpp"
#include "ccor/gl.hpp"
#include "ccor/hamling.hpp"
#include "ccor/covariance.hpp"
#include "ccor/trend.hpp"
#include "ccor/sim.hpp"
#include "ccor/io.hpp"
