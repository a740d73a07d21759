#pragma once

// Umbrella header.

#include "mest/data.hpp"
#include "mest/distributions.hpp"
#include "mest/experiments.hpp"
#include "mest/losses.hpp"
#include "mest/metrics.hpp"
#include "mest/penalties.hpp"
#include "mest/rng.hpp"
#include "mest/simgen.hpp"
#include "mest/solver.hpp"
#include "mest/stats.hpp"
#include "mest/tuning.hpp"
