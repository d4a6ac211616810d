#pragma once

#include "milo/relax/miqp.hpp"

#include <json.hpp>

#include <string>

namespace milo::relax {

// Sparse triplet container for debugging and cross-implementation checks.
// Layout: {schema_version, n, m, obj_const, P/A: {rows, cols, triplets:
// [[i,j,v],...]}, q, l, u, lb, ub, binary_idx, names}.
nlohmann::json miqp_to_json(const MixedIntegerQP& m);

void save_miqp_json(const MixedIntegerQP& m, const std::string& path);

}  // namespace milo::relax
