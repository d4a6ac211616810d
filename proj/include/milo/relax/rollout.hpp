#pragma once

#include "milo/relax/builder.hpp"
#include "milo/relax/miqp.hpp"
#include "milo/srb/types.hpp"

#include <vector>

namespace milo::relax {

// Maps a simulated trajectory onto the full variable vector of a built MIQP:
// states, accelerations by finite difference, true trig values and true
// products for every envelope auxiliary, and the selector binaries of the
// regions containing the true values. The result satisfies every equality
// row of the model exactly (up to roundoff) when the trajectory came from
// simulate_step with the same parameters.
Vec trajectory_vector(const MixedIntegerQP& m, const srb::ProblemInstance& inst,
                      const std::vector<srb::SrbState>& states,
                      const std::vector<srb::FootState>& feet);

// Binary values read out of a full variable vector.
IntegerAssignment assignment_from_vector(const MixedIntegerQP& m, const Vec& x);

// Inverse direction: read states, toe positions, forces, and contact flags
// back out of a solved variable vector.
void vector_to_trajectory(const MixedIntegerQP& m, int horizon, const Vec& x,
                          std::vector<srb::SrbState>& states, std::vector<srb::FootState>& feet);

}  // namespace milo::relax
