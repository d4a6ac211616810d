#pragma once

#include "milo/relax/envelope.hpp"
#include "milo/relax/miqp.hpp"
#include "milo/relax/segmentation.hpp"
#include "milo/srb/types.hpp"

namespace milo::relax {

// Compiles an instance into a mixed-integer QP. Knot 0 is pinned to the
// initial state, so every product touching only knot-0 quantities folds to a
// linear row and knot 0 contributes no binaries.
//
// Binary layout (canonical order = PaperOrder branching priority):
//   contacts c[n][i]            n in [1, N)
//   regions  z[n][i][s]         n in [1, N)
//   angle selectors (one-hot)   n in [1, N), 3 axes
//   toe selectors (one-hot)     n in [1, N), 4 toes x 3 axes
//   rate selectors (coded)      n in [1, N), phi_dot and theta_dot only
//                               (psi_dot enters the rate map linearly)
//   omega selectors (coded)     n in [1, N-1), 3 axes (diagonal inertia)
//   force selectors (coded)     n in [1, N-1), 4 toes x 3 axes
//
// Closed-form count for the full 3D model with diagonal inertia and S
// terrain regions (oh(R) = R one-hot binaries when R > 1 else 0, cd(R) =
// log2(R) bits when R > 1 else 0):
//
//   B(N, S) = 4(N-1)(1 + S)
//           + (N-1) * (3 oh(R_angle) + 12 oh(R_toe) + 2 cd(R_rate))
//           + (N-2) * (3 cd(R_omega) + 12 cd(R_force))
//
// Paper defaults at N = 5, S = 1 give 484.
//
// Throws InfeasibleBounds when x0's angles, rates, or angular velocity
// violate the segmentation ranges.
MixedIntegerQP build_miqp(const srb::ProblemInstance& inst, const SegmentationSpec& seg);

long expected_binary_count(int horizon, int num_regions, const SegmentationSpec& seg);

}  // namespace milo::relax
