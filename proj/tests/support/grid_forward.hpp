#pragma once

#include <span>

#include "wdmair/air.hpp"

namespace wdmair::oracle {

/// AIR of the Wiener phase-noise model by the exact forward algorithm on a
/// uniform grid of `bins` phase values, with theta_0 uniform. Same units and
/// output density as air_particle.
double grid_forward_air(std::span<const Complex> x, std::span<const Complex> y, const PnParams& p,
                        double input_var, std::size_t bins);

}  // namespace wdmair::oracle
