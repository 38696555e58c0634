#pragma once

#include "latden/crossval.hpp"
#include "latden/diffusion.hpp"
#include "latden/error.hpp"
#include "latden/estimator.hpp"
#include "latden/geometry.hpp"
#include "latden/kernel_baseline.hpp"
#include "latden/lattice.hpp"
#include "latden/sim.hpp"
