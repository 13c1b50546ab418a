#pragma once

#include "epiwave/dispersion.hpp"
#include "epiwave/dynamics.hpp"
#include "epiwave/error.hpp"
#include "epiwave/expression.hpp"
#include "epiwave/grid.hpp"
#include "epiwave/hypotheses.hpp"
#include "epiwave/kernel.hpp"
#include "epiwave/nonlinearity.hpp"
#include "epiwave/parallel.hpp"
#include "epiwave/sir.hpp"
#include "epiwave/spatial_kernel.hpp"
#include "epiwave/spectral.hpp"
#include "epiwave/steady_state.hpp"
#include "epiwave/waves.hpp"
