#pragma once

#include "milo/bnb/bnb.hpp"
#include "milo/relax/builder.hpp"
#include "milo/relax/miqp.hpp"
#include "milo/srb/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace milo::learn {

// Feature layout (order is contractual; the dataset header pins it):
//   [0]      vx   current forward velocity
//   [1]      ax   forward acceleration, (vx - vx_prev) / dt
//   [2..13]  toe positions at the current knot, FL FR RL RR x xyz
//   [14..25] toe positions one knot back, same order
struct FeatureVector {
  static constexpr int kSize = 26;
  std::array<double, kSize> v{};
};

struct Snapshot {
  srb::SrbState state;
  srb::FootState feet;
};

// history.back() is the current knot; throws InsufficientHistory below 2.
FeatureVector extract_features(const std::vector<Snapshot>& history, double dt);

struct DataPoint {
  FeatureVector features;
  relax::IntegerAssignment assignment;  // keyed to the online-horizon model
  double cost = 0.0;                    // achieved trajectory objective
  int traj_id = 0;
  int window_offset = 0;
};

struct Dataset {
  std::vector<DataPoint> points;
  std::array<double, FeatureVector::kSize> scale{};  // 1/(max-min); 0 for constant features
  std::vector<std::string> binary_names;             // online model binary order
  int online_horizon = 5;

  // min-max scaling over the stored points
  void compute_scaling();
  double distance2(const FeatureVector& a, const FeatureVector& b) const;
};

// Candidates by ascending scaled Euclidean distance, ties by insertion
// index, deduplicated by assignment equality; at most k. Throws EmptyDataset.
std::vector<relax::IntegerAssignment> knn_query(const Dataset& ds, const FeatureVector& f, int k);

struct GenerateConfig {
  int trajectories = 110;
  int horizon = 9;
  int online_horizon = 5;
  std::uint64_t seed = 0;
  double vx_lo = -1.5, vx_hi = 1.5;
  double ax_lo = -15.0, ax_hi = 15.0;
  // window start knots within the solved trajectory; two knots of history
  // are reserved, stride 2 reproduces two windows per trajectory
  std::vector<int> window_offsets{2, 4};
  srb::ProblemInstance base;  // template: params, references, regions, planar flag
  relax::SegmentationSpec seg;
  bnb::BnbOptions solve;      // per-trajectory budget (gap target, limits)
};

struct TrajectoryLog {
  int traj_id = 0;
  double vx = 0.0, ax = 0.0;
  bool feasible = false;
  double cost = 0.0, gap = 0.0;
  long nodes = 0;
  std::string note;
};

struct GenerateStats {
  int requested = 0;
  int feasible = 0;
  double mean_gap = 0.0;
  double mean_cost = 0.0;
  std::vector<TrajectoryLog> log;
};

// Per sample: a trot-phased instance at randomized (vx, ax), branch-and-bound
// to the configured budget, then 5-knot windows become data points.
// Infeasible or budget-exhausted samples are skipped with a logged reason.
Dataset generate_dataset(const GenerateConfig& cfg, GenerateStats* stats = nullptr);

// Instance with a trot-phase stance and its first-interval forward
// acceleration pinned to ax (the paper's randomized initial conditions).
srb::ProblemInstance dataset_instance(const GenerateConfig& cfg, double vx);
relax::MixedIntegerQP build_pinned(const srb::ProblemInstance& inst,
                                   const relax::SegmentationSpec& seg, double ax);

// JSONL: header line with schema version, scaling, and binary names, then
// one point per line. load(save(ds)) round-trips byte-identically.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace milo::learn
