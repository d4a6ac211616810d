#include "milo/learn/learn.hpp"

#include "milo/errors.hpp"
#include "milo/kernels/kernels.hpp"
#include "milo/relax/rollout.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace milo::learn {

using nlohmann::json;

FeatureVector extract_features(const std::vector<Snapshot>& history, double dt) {
  if (history.size() < 2) throw InsufficientHistory("feature extraction needs 2 knots");
  const Snapshot& now = history.back();
  const Snapshot& prev = history[history.size() - 2];

  FeatureVector f;
  f.v[0] = now.state.v[0];
  f.v[1] = (now.state.v[0] - prev.state.v[0]) / dt;
  int idx = 2;
  for (const Snapshot* snap : {&now, &prev})
    for (int i = 0; i < srb::kNumToes; ++i)
      for (int k = 0; k < 3; ++k) f.v[idx++] = snap->feet.p_w[i][k];
  return f;
}

void Dataset::compute_scaling() {
  std::array<double, FeatureVector::kSize> lo{}, hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& p : points)
    for (int j = 0; j < FeatureVector::kSize; ++j) {
      lo[j] = std::min(lo[j], p.features.v[j]);
      hi[j] = std::max(hi[j], p.features.v[j]);
    }
  for (int j = 0; j < FeatureVector::kSize; ++j) {
    double w = hi[j] - lo[j];
    scale[j] = (points.empty() || w < 1e-12) ? 0.0 : 1.0 / w;
  }
}

double Dataset::distance2(const FeatureVector& a, const FeatureVector& b) const {
  return kernels::weighted_sq_dist(FeatureVector::kSize, a.v.data(), b.v.data(), scale.data());
}

std::vector<relax::IntegerAssignment> knn_query(const Dataset& ds, const FeatureVector& f,
                                                int k) {
  if (ds.points.empty()) throw EmptyDataset("knn_query on an empty dataset");
  if (k < 1) throw std::invalid_argument("knn_query needs k >= 1");

  std::vector<std::pair<double, std::size_t>> order(ds.points.size());
  for (std::size_t i = 0; i < ds.points.size(); ++i)
    order[i] = {ds.distance2(f, ds.points[i].features), i};
  std::sort(order.begin(), order.end());

  std::vector<relax::IntegerAssignment> out;
  for (const auto& [d2, i] : order) {
    const auto& a = ds.points[i].assignment;
    bool dup = false;
    for (const auto& seen : out) dup = dup || seen == a;
    if (dup) continue;
    out.push_back(a);
    if (static_cast<int>(out.size()) == k) break;
  }
  return out;
}

srb::ProblemInstance dataset_instance(const GenerateConfig& cfg, double vx) {
  srb::ProblemInstance inst = cfg.base;
  inst.horizon_n = cfg.horizon;
  inst.x0.v[0] = vx;
  // trot phase 0: FL+RR planted, FR+RL at lift height
  auto seed = bnb::gait_seed(cfg.horizon, bnb::GaitStyle::Trot);
  for (int i = 0; i < srb::kNumToes; ++i) {
    inst.feet0.c[i] = seed.contacts[0][i];
    inst.feet0.p_w[i] = inst.x0.p + inst.params.nominal_arm(i);
    inst.feet0.p_w[i][2] = seed.contacts[0][i] ? 0.0 : inst.params.lift_height;
    inst.feet0.f[i] = srb::Vec3::Zero();
  }
  return inst;
}

relax::MixedIntegerQP build_pinned(const srb::ProblemInstance& inst,
                                   const relax::SegmentationSpec& seg, double ax) {
  relax::MixedIntegerQP m = relax::build_miqp(inst, seg);
  // pin the first-interval forward acceleration (the sampled initial ax)
  int col = m.names.at("a[0].x");
  relax::SpMat A(m.num_rows() + 1, m.num_vars());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(m.cons.A.nonZeros() + 1);
  for (int j = 0; j < m.cons.A.outerSize(); ++j)
    for (relax::SpMat::InnerIterator it(m.cons.A, j); it; ++it)
      trips.emplace_back(it.row(), j, it.value());
  trips.emplace_back(m.num_rows(), col, 1.0);
  A.setFromTriplets(trips.begin(), trips.end());
  relax::Vec l(m.num_rows() + 1), u(m.num_rows() + 1);
  l.head(m.num_rows()) = m.cons.l;
  u.head(m.num_rows()) = m.cons.u;
  l[m.num_rows()] = ax;
  u[m.num_rows()] = ax;
  m.cons.A = std::move(A);
  m.cons.l = std::move(l);
  m.cons.u = std::move(u);
  return m;
}

namespace {

std::string shift_knot(const std::string& name, int delta) {
  auto open = name.find('[');
  auto close = name.find(']', open);
  int knot = std::stoi(name.substr(open + 1, close - open - 1));
  return name.substr(0, open + 1) + std::to_string(knot + delta) + name.substr(close);
}

std::string bits_string(const relax::IntegerAssignment& a) {
  std::string s(a.value.size(), '?');
  for (std::size_t i = 0; i < a.value.size(); ++i)
    s[i] = a.value[i] < 0 ? '?' : static_cast<char>('0' + a.value[i]);
  return s;
}

relax::IntegerAssignment assignment_from_bits(const std::string& bits) {
  relax::IntegerAssignment a;
  a.value.resize(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i)
    a.value[i] = bits[i] == '?' ? -1 : static_cast<std::int8_t>(bits[i] - '0');
  return a;
}

}  // namespace

Dataset generate_dataset(const GenerateConfig& cfg, GenerateStats* stats) {
  if (cfg.trajectories < 1 || cfg.horizon < cfg.online_horizon + 2)
    throw std::invalid_argument("generate_dataset: bad config");
  for (int off : cfg.window_offsets)
    if (off < 1 || off + cfg.online_horizon > cfg.horizon)
      throw std::invalid_argument("window offset out of range");

  // online template pins the binary name order and the validation groups
  srb::ProblemInstance online_inst = dataset_instance(cfg, 0.0);
  online_inst.horizon_n = cfg.online_horizon;
  relax::MixedIntegerQP online = relax::build_miqp(online_inst, cfg.seg);

  Dataset ds;
  ds.online_horizon = cfg.online_horizon;
  for (int col : online.binary_idx) ds.binary_names.push_back(online.names.name(col));

  GenerateStats local;
  GenerateStats& st = stats ? *stats : local;
  st.requested = cfg.trajectories;

  double gap_sum = 0.0, cost_sum = 0.0;

  for (int t = 0; t < cfg.trajectories; ++t) {
    std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 0x51ed2701 + t);
    std::uniform_real_distribution<double> dvx(cfg.vx_lo, cfg.vx_hi);
    std::uniform_real_distribution<double> dax(cfg.ax_lo, cfg.ax_hi);
    TrajectoryLog tl;
    tl.traj_id = t;
    tl.vx = dvx(rng);
    tl.ax = dax(rng);

    srb::ProblemInstance inst = dataset_instance(cfg, tl.vx);
    relax::MixedIntegerQP m;
    try {
      m = build_pinned(inst, cfg.seg, tl.ax);
    } catch (const std::exception& e) {
      tl.note = std::string("build failed: ") + e.what();
      st.log.push_back(tl);
      continue;
    }

    bnb::BnbOptions opts = cfg.solve;
    opts.warm = bnb::seed_assignment(m, bnb::gait_seed(cfg.horizon, bnb::GaitStyle::Trot));
    auto res = bnb::solve_miqp(m, opts);
    tl.nodes = res.nodes;
    if (!res.incumbent) {
      tl.note = std::string("no incumbent: ") + bnb::to_string(res.status);
      st.log.push_back(tl);
      continue;
    }
    tl.feasible = true;
    tl.cost = res.z_p;
    tl.gap = res.gap;
    ++st.feasible;
    gap_sum += res.gap;
    cost_sum += res.z_p;

    for (int off : cfg.window_offsets) {
      std::vector<srb::SrbState> states;
      std::vector<srb::FootState> feet;
      relax::vector_to_trajectory(m, cfg.horizon, *res.primal, states, feet);

      std::vector<Snapshot> hist{{states[off - 1], feet[off - 1]}, {states[off], feet[off]}};
      DataPoint p;
      p.features = extract_features(hist, inst.params.dt);
      p.cost = res.z_p;
      p.traj_id = t;
      p.window_offset = off;

      p.assignment = relax::IntegerAssignment::empty(online);
      bool complete = true;
      for (std::size_t k = 0; k < online.binary_idx.size(); ++k) {
        std::string offline_name = shift_knot(ds.binary_names[k], off);
        auto col = m.names.find(offline_name);
        if (!col) { complete = false; break; }
        int pos = m.binary_pos(*col);
        if (pos < 0) { complete = false; break; }
        p.assignment.value[k] = res.incumbent->value[pos];
      }
      if (!complete) {
        tl.note += " window " + std::to_string(off) + " incomplete;";
        continue;
      }
      try {
        p.assignment.validate(online);
      } catch (const InconsistentAssignment& e) {
        tl.note += " window " + std::to_string(off) + " inconsistent;";
        continue;
      }
      ds.points.push_back(std::move(p));
    }
    st.log.push_back(tl);
  }

  st.mean_gap = st.feasible ? gap_sum / st.feasible : 0.0;
  st.mean_cost = st.feasible ? cost_sum / st.feasible : 0.0;
  ds.compute_scaling();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  json header;
  header["schema_version"] = 1;
  header["kind"] = "milo-dataset";
  header["online_horizon"] = ds.online_horizon;
  header["scale"] = ds.scale;
  header["binary_names"] = ds.binary_names;
  header["count"] = ds.points.size();
  out << header.dump() << "\n";
  for (const auto& p : ds.points) {
    json line;
    line["f"] = p.features.v;
    line["bits"] = bits_string(p.assignment);
    line["cost"] = p.cost;
    line["traj"] = p.traj_id;
    line["off"] = p.window_offset;
    out << line.dump() << "\n";
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::size_t line_no = 0;

  Dataset ds;
  if (!std::getline(in, line)) throw CorruptLine(1, "missing header");
  ++line_no;
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw CorruptLine(line_no, e.what());
  }
  if (!header.contains("schema_version") || header["schema_version"] != 1)
    throw SchemaMismatch("unsupported dataset schema version");
  ds.online_horizon = header.at("online_horizon").get<int>();
  auto scale = header.at("scale").get<std::vector<double>>();
  if (scale.size() != FeatureVector::kSize) throw SchemaMismatch("bad scale length");
  std::copy(scale.begin(), scale.end(), ds.scale.begin());
  ds.binary_names = header.at("binary_names").get<std::vector<std::string>>();
  std::size_t expected = header.at("count").get<std::size_t>();

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      DataPoint p;
      auto f = j.at("f").get<std::vector<double>>();
      if (f.size() != FeatureVector::kSize) throw std::runtime_error("bad feature length");
      std::copy(f.begin(), f.end(), p.features.v.begin());
      std::string bits = j.at("bits").get<std::string>();
      if (bits.size() != ds.binary_names.size()) throw std::runtime_error("bad bits length");
      p.assignment = assignment_from_bits(bits);
      p.cost = j.at("cost").get<double>();
      p.traj_id = j.at("traj").get<int>();
      p.window_offset = j.at("off").get<int>();
      ds.points.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw CorruptLine(line_no, e.what());
    }
  }
  if (ds.points.size() != expected)
    throw CorruptLine(line_no, "point count does not match the header");
  return ds;
}

}  // namespace milo::learn
