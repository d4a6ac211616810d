#pragma once

#include "milo/relax/miqp.hpp"

namespace milo::relax {

// build_miqp output with the binaries substituted out. Rows whose activity
// interval over the remaining bounds already implies them (deactivated big-M
// rows) are dropped; every other row keeps its tightened bounds.
struct FixedQp {
  SpMat P;
  Vec q;
  double obj_const = 0.0;
  SpMat A;
  Vec l, u;
  Vec lb, ub;
  std::vector<int> col_map;  // reduced column -> original column
  int orig_vars = 0;
  // a constant row became unsatisfiable during substitution (the assignment
  // conflicts with fixed variables or non-selector binary rows)
  bool trivially_infeasible = false;

  int num_vars() const { return static_cast<int>(q.size()); }

  // reassemble a full-length vector from a reduced solution
  Vec lift(const Vec& x_reduced, const MixedIntegerQP& orig, const IntegerAssignment& a) const;
};

// Throws InconsistentAssignment when the assignment is incomplete or violates
// the selector/contact groups.
FixedQp fix_integers(const MixedIntegerQP& m, const IntegerAssignment& a);

}  // namespace milo::relax
