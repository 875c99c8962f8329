#pragma once

// Umbrella header.

#include "heavytail/calibrate.hpp"
#include "heavytail/distributions.hpp"
#include "heavytail/empirical.hpp"
#include "heavytail/freqsev.hpp"
#include "heavytail/hybrid.hpp"
#include "heavytail/io.hpp"
#include "heavytail/levmar.hpp"
#include "heavytail/numerics.hpp"
#include "heavytail/resample.hpp"
#include "heavytail/risk.hpp"
#include "heavytail/simlab.hpp"
