#pragma once

#include "milo/qp/ipm.hpp"
#include "milo/qp/solver.hpp"
#include "milo/relax/fix.hpp"
#include "milo/relax/miqp.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace milo::bnb {

enum class BranchRule { MostFractional, PaperOrder };
enum class MiqpStatus { Optimal, GapReached, TimeLimit, Infeasible };

const char* to_string(MiqpStatus s);

struct BnbOptions {
  double time_limit = 0.0;   // seconds; 0 disables the wall clock entirely
  double gap_target = 0.0;   // terminate once gap <= target (when > 0)
  BranchRule branch_rule = BranchRule::PaperOrder;
  std::optional<relax::IntegerAssignment> warm;  // full or partial (-1 = free)
  long node_limit = 0;       // 0 = off
  // node relaxations run on the interior-point path by default: the
  // envelope-relaxed contact QPs are too degenerate for operator splitting
  bool ipm_nodes = true;
  qp::IpmSettings ipm;
  qp::QpSettings qp;         // used when ipm_nodes is false
  std::string log_path;      // JSONL search log when non-empty

  void validate() const;
};

struct MiqpResult {
  std::optional<relax::IntegerAssignment> incumbent;
  std::optional<Eigen::VectorXd> primal;  // full variable vector of the incumbent
  double z_p = std::numeric_limits<double>::infinity();   // incumbent cost
  double z_d = -std::numeric_limits<double>::infinity();  // proven lower bound
  double gap = std::numeric_limits<double>::infinity();
  long nodes = 0;
  long first_incumbent_node = -1;
  MiqpStatus status = MiqpStatus::Infeasible;
};

// |z_p - z_d| / |z_p|; 0 when both vanish, +inf when only z_p does.
double gap_ratio(double z_p, double z_d);

// Best-first search on the dual bound with depth-first plunging. Each node
// solves the continuous relaxation with branched binaries pinned through
// their bound rows; one factorization serves the whole tree. A warm
// assignment is probed first: its listed binaries are fixed, the remaining
// ones are completed by region rounding from the seeded relaxation, and the
// resulting point seeds the incumbent. The tree search itself always starts
// from the true root so the reported bound is global.
MiqpResult solve_miqp(const relax::MixedIntegerQP& m, const BnbOptions& opts);

// Exhaustive oracle: solves fix-by-bounds for every group-consistent
// assignment. Throws TooManyBinaries above 16 binaries.
MiqpResult enumerate_miqp(const relax::MixedIntegerQP& m, const qp::QpSettings& settings = {});

enum class GaitStyle { Trot, AllStance };

// Contact pattern per knot under the FL, FR, RL, RR leg order. Trot
// alternates the diagonal pairs {FL,RR} and {FR,RL} starting from {FL,RR}.
struct GaitSeed {
  std::vector<std::array<int, 4>> contacts;
};
GaitSeed gait_seed(int horizon, GaitStyle style);

// Partial assignment over the contact binaries of a built model (knot 0 is
// pinned by the instance and is skipped). Region and selector binaries stay
// free. Throws InvalidWarmStart when the seed is shorter than the horizon.
relax::IntegerAssignment seed_assignment(const relax::MixedIntegerQP& m, const GaitSeed& seed);

}  // namespace milo::bnb
