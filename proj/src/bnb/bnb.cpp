#include "milo/bnb/bnb.hpp"

#include "milo/errors.hpp"
#include "milo/relax/fix.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <queue>

namespace milo::bnb {

using relax::IntegerAssignment;
using relax::MixedIntegerQP;
using Vec = Eigen::VectorXd;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntTol = 1e-5;
constexpr double kBoundEps = 1e-9;
}  // namespace

const char* to_string(MiqpStatus s) {
  switch (s) {
    case MiqpStatus::Optimal: return "Optimal";
    case MiqpStatus::GapReached: return "GapReached";
    case MiqpStatus::TimeLimit: return "TimeLimit";
    case MiqpStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

void BnbOptions::validate() const {
  if (gap_target < 0.0 || gap_target >= 1.0)
    throw std::invalid_argument("gap_target must be in [0,1)");
  if (time_limit < 0.0 || node_limit < 0) throw std::invalid_argument("limits must be nonnegative");
  qp.validate();
}

double gap_ratio(double z_p, double z_d) {
  if (std::fabs(z_p) < 1e-12) return std::fabs(z_p - z_d) < 1e-12 ? 0.0 : kInf;
  return std::fabs(z_p - z_d) / std::fabs(z_p);
}

namespace {

// rows whose support is entirely binary, for bound propagation
struct BinaryRow {
  std::vector<std::pair<int, double>> terms;  // (binary position, coefficient)
  double l, u;
};

std::vector<BinaryRow> collect_binary_rows(const MixedIntegerQP& m) {
  std::vector<BinaryRow> rows;
  Eigen::SparseMatrix<double, Eigen::RowMajor> Ar = m.cons.A;
  for (int i = 0; i < m.num_rows(); ++i) {
    BinaryRow row;
    bool pure = true;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Ar, i); it && pure; ++it) {
      int pos = m.binary_pos(static_cast<int>(it.col()));
      if (pos < 0) pure = false;
      else row.terms.emplace_back(pos, it.value());
    }
    if (!pure || row.terms.empty()) continue;
    row.l = m.cons.l[i];
    row.u = m.cons.u[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

// fixpoint bound propagation; returns false when some row became infeasible
bool propagate(const std::vector<BinaryRow>& rows, std::vector<std::int8_t>& fixed) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& row : rows) {
      double base_min = 0.0, base_max = 0.0;
      for (auto [pos, coef] : row.terms) {
        if (fixed[pos] >= 0) {
          base_min += coef * fixed[pos];
          base_max += coef * fixed[pos];
        } else {
          base_min += std::min(coef, 0.0);
          base_max += std::max(coef, 0.0);
        }
      }
      if (base_min > row.u + kBoundEps || base_max < row.l - kBoundEps) return false;
      for (auto [pos, coef] : row.terms) {
        if (fixed[pos] >= 0) continue;
        // activity range of the row with this variable pinned to each value
        double others_min = base_min - std::min(coef, 0.0);
        double others_max = base_max - std::max(coef, 0.0);
        bool ok0 = !(others_min > row.u + kBoundEps || others_max < row.l - kBoundEps);
        bool ok1 = !(others_min + coef > row.u + kBoundEps || others_max + coef < row.l - kBoundEps);
        if (!ok0 && !ok1) return false;
        if (ok0 != ok1) {
          fixed[pos] = ok1 ? 1 : 0;
          changed = true;
          base_min += fixed[pos] ? std::max(coef, 0.0) : std::min(coef, 0.0);
          base_max += fixed[pos] ? std::min(coef, 0.0) : std::max(coef, 0.0);
        }
      }
    }
  }
  return true;
}

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInf;
  std::vector<std::int8_t> fixed;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.id > b.id;
  }
};

class Search {
 public:
  static qp::QpSettings with_boosted_binary_rows(const MixedIntegerQP& m,
                                                 const MixedIntegerQP::Extended& ext,
                                                 qp::QpSettings st) {
    for (int col : m.binary_idx)
      if (ext.bound_row_of_var[col] >= 0) st.rho_boost_rows.push_back(ext.bound_row_of_var[col]);
    return st;
  }

  Search(const MixedIntegerQP& m, const BnbOptions& opts)
      : m_(m), opts_(opts), ext_(m.extended()), binary_rows_(collect_binary_rows(m)) {
    if (opts_.ipm_nodes)
      ipm_.emplace(m.P, m.q, ext_.A, ext_.l, ext_.u, opts_.ipm);
    else
      admm_.emplace(m.P, m.q, ext_.A, ext_.l, ext_.u,
                    with_boosted_binary_rows(m, ext_, opts_.qp));
    if (!opts_.log_path.empty()) log_.open(opts_.log_path);
    t0_ = std::chrono::steady_clock::now();
  }

  MiqpResult run();

 private:
  struct NodeSolve {
    bool pruned = false;
    bool integral = false;
    double bound = -kInf;
    double obj = kInf;
    Vec x;
  };

  NodeSolve solve_node(const std::vector<std::int8_t>& fixed, double parent_bound,
                       bool accept_maxiter = false);
  bool solve_assignment(const IntegerAssignment& a, MiqpResult& res);
  void offer_incumbent(const Vec& x, double cost, MiqpResult& res);
  bool limits_hit() const;
  void log_node(long id, int depth, double bound, const MiqpResult& res);
  int pick_branch_var(const Vec& x, const std::vector<std::int8_t>& fixed) const;
  void dive(Node node, const NodeSolve& solved, MiqpResult& res);
  bool try_warm_probe(MiqpResult& res);
  bool heuristic_dive(std::vector<std::int8_t> fixed, MiqpResult& res);
  IntegerAssignment complete_by_rounding(const Vec& x,
                                         const std::vector<std::int8_t>& fixed) const;

  const MixedIntegerQP& m_;
  const BnbOptions& opts_;
  MixedIntegerQP::Extended ext_;
  std::optional<qp::IpmSolver> ipm_;
  std::optional<qp::QpSolver> admm_;
  std::vector<BinaryRow> binary_rows_;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
  std::optional<qp::WarmStart> last_warm_;  // rolling warm start (dive locality)
  long next_id_ = 0;
  std::ofstream log_;
  std::chrono::steady_clock::time_point t0_;
};

Search::NodeSolve Search::solve_node(const std::vector<std::int8_t>& fixed, double parent_bound,
                                     bool accept_maxiter) {
  NodeSolve out;
  Vec l = ext_.l, u = ext_.u;
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    if (fixed[k] < 0) continue;
    int row = ext_.bound_row_of_var[m_.binary_idx[k]];
    l[row] = fixed[k];
    u[row] = fixed[k];
  }
  qp::QpSolution sol;
  try {
    if (ipm_) {
      ipm_->update_bounds(l, u);
      sol = ipm_->solve();
    } else {
      admm_->update_bounds(l, u);
      sol = admm_->solve(last_warm_);
    }
  } catch (const NumericalBreakdown& e) {
    std::cerr << "bnb: node relaxation failed (" << e.what() << "); pruning\n";
    out.pruned = true;
    return out;
  }

  if (sol.status == qp::QpStatus::PrimalInfeasible) {
    if (std::getenv("MILO_BNB_DEBUG"))
      std::cerr << "[bnb] node PrimalInfeasible after " << sol.iters
                << " iters (prim " << sol.prim_res << ", dual " << sol.dual_res << ")\n";
    out.pruned = true;
    return out;
  }
  if (sol.status != qp::QpStatus::Solved && !(accept_maxiter && sol.status == qp::QpStatus::MaxIter)) {
    std::cerr << "bnb: node relaxation returned " << qp::to_string(sol.status)
              << "; pruning\n";
    out.pruned = true;
    return out;
  }

  out.obj = sol.objective + m_.obj_const;
  out.bound = std::max(parent_bound, out.obj);
  out.x = sol.x;
  if (admm_) last_warm_ = qp::WarmStart{sol.x, sol.y};
  out.integral = true;
  for (int col : m_.binary_idx) {
    double v = sol.x[col];
    if (std::fabs(v - std::lround(v)) > kIntTol) {
      out.integral = false;
      break;
    }
  }
  return out;
}

void Search::offer_incumbent(const Vec& x, double cost, MiqpResult& res) {
  if (cost >= res.z_p - 1e-12) return;
  res.z_p = cost;
  res.primal = x;
  IntegerAssignment a = IntegerAssignment::empty(m_);
  for (std::size_t k = 0; k < m_.binary_idx.size(); ++k)
    a.value[k] = static_cast<std::int8_t>(std::lround(x[m_.binary_idx[k]]));
  res.incumbent = std::move(a);
  if (res.first_incumbent_node < 0) res.first_incumbent_node = res.nodes - 1;
}

bool Search::limits_hit() const {
  if (opts_.node_limit > 0 && next_id_ >= opts_.node_limit) return true;
  if (opts_.time_limit > 0.0) {
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    if (elapsed >= opts_.time_limit) return true;
  }
  return false;
}

void Search::log_node(long id, int depth, double bound, const MiqpResult& res) {
  if (!log_.is_open()) return;
  log_ << "{\"node\":" << id << ",\"depth\":" << depth << ",\"bound\":" << bound
       << ",\"incumbent\":" << (res.incumbent ? res.z_p : kInf)
       << ",\"global_bound\":" << res.z_d << "}\n";
}

int Search::pick_branch_var(const Vec& x, const std::vector<std::int8_t>& fixed) const {
  int best = -1;
  double best_frac = kIntTol;
  for (std::size_t k = 0; k < m_.binary_idx.size(); ++k) {
    if (fixed[k] >= 0) continue;
    double v = x[m_.binary_idx[k]];
    double frac = std::fabs(v - std::lround(v));
    if (opts_.branch_rule == BranchRule::PaperOrder) {
      // contacts and regions are branched even at integral relaxation values:
      // the loose part of the relaxation hides entirely behind the free
      // contact pattern, so enumerating it is what moves the dual bound
      bool gait_var = m_.binary_category[k] <= static_cast<int>(BinCategory::Region);
      if (gait_var || frac > kIntTol) return static_cast<int>(k);
    } else if (frac > best_frac) {
      best_frac = frac;
      best = static_cast<int>(k);
    }
  }
  return best;
}

IntegerAssignment Search::complete_by_rounding(const Vec& x,
                                               const std::vector<std::int8_t>& fixed) const {
  IntegerAssignment a = IntegerAssignment::empty(m_);
  for (std::size_t k = 0; k < fixed.size(); ++k) a.value[k] = fixed[k];

  // contacts and regions: keep sum consistency per link
  for (const auto& link : m_.links) {
    int cpos = m_.binary_pos(link.c);
    if (cpos < 0) continue;
    int cval = a.value[cpos] >= 0 ? a.value[cpos]
                                  : static_cast<int>(std::lround(x[link.c]));
    a.value[cpos] = static_cast<std::int8_t>(cval);
    int chosen = -1;
    if (cval == 1) {
      double best = -1.0;
      for (std::size_t s = 0; s < link.z.size(); ++s) {
        int zpos = m_.binary_pos(link.z[s]);
        if (zpos >= 0 && a.value[zpos] == 1) { chosen = static_cast<int>(s); break; }
        if (x[link.z[s]] > best) { best = x[link.z[s]]; chosen = static_cast<int>(s); }
      }
    }
    for (std::size_t s = 0; s < link.z.size(); ++s) {
      int zpos = m_.binary_pos(link.z[s]);
      if (zpos >= 0) a.value[zpos] = static_cast<std::int8_t>(static_cast<int>(s) == chosen);
    }
  }
  // selector groups: the region containing the relaxed variable value
  for (const auto& g : m_.selectors) {
    if (g.bins.empty()) continue;
    bool any_unset = false;
    for (int bcol : g.bins) any_unset = any_unset || a.value[m_.binary_pos(bcol)] < 0;
    if (!any_unset) continue;
    int r = g.region_of(x[g.var]);
    for (auto [col, v] : g.values_for_region(r))
      a.value[m_.binary_pos(col)] = static_cast<std::int8_t>(v);
  }
  // anything left (binaries outside groups): plain rounding
  for (std::size_t k = 0; k < a.value.size(); ++k)
    if (a.value[k] < 0)
      a.value[k] = static_cast<std::int8_t>(std::lround(x[m_.binary_idx[k]]));
  return a;
}

// Solves a complete assignment through fix_integers: deactivated big-M rows
// are substituted out, which the operator-splitting solver handles far more
// gracefully than the bound-pinned relaxation.
bool Search::solve_assignment(const IntegerAssignment& a, MiqpResult& res) {
  relax::FixedQp fixed;
  try {
    fixed = relax::fix_integers(m_, a);
  } catch (const InconsistentAssignment& e) {
    if (std::getenv("MILO_BNB_DEBUG")) std::cerr << "[bnb] probe inconsistent: " << e.what() << "\n";
    return false;
  }
  if (fixed.trivially_infeasible) {
    if (std::getenv("MILO_BNB_DEBUG")) std::cerr << "[bnb] probe trivially infeasible\n";
    return false;
  }

  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < fixed.A.outerSize(); ++j)
    for (relax::SpMat::InnerIterator it(fixed.A, j); it; ++it)
      trips.emplace_back(it.row(), j, it.value());
  int rows = static_cast<int>(fixed.A.rows());
  std::vector<double> lv(fixed.l.data(), fixed.l.data() + fixed.l.size());
  std::vector<double> uv(fixed.u.data(), fixed.u.data() + fixed.u.size());
  for (int j = 0; j < fixed.num_vars(); ++j)
    if (std::isfinite(fixed.lb[j]) || std::isfinite(fixed.ub[j])) {
      trips.emplace_back(rows, j, 1.0);
      lv.push_back(fixed.lb[j]);
      uv.push_back(fixed.ub[j]);
      ++rows;
    }
  relax::SpMat A(rows, fixed.num_vars());
  A.setFromTriplets(trips.begin(), trips.end());

  qp::QpSolution sol;
  try {
    if (opts_.ipm_nodes) {
      sol = qp::solve_qp_ipm(fixed.P, fixed.q, A, Eigen::Map<const Vec>(lv.data(), lv.size()),
                             Eigen::Map<const Vec>(uv.data(), uv.size()), opts_.ipm);
    } else {
      qp::QpSettings st = opts_.qp;
      st.rho_boost_rows.clear();
      sol = qp::solve_qp(fixed.P, fixed.q, A, Eigen::Map<const Vec>(lv.data(), lv.size()),
                         Eigen::Map<const Vec>(uv.data(), uv.size()), st);
    }
  } catch (const NumericalBreakdown& e) {
    if (std::getenv("MILO_BNB_DEBUG")) std::cerr << "[bnb] probe breakdown: " << e.what() << "\n";
    return false;
  }
  if (sol.status != qp::QpStatus::Solved) {
    if (std::getenv("MILO_BNB_DEBUG"))
      std::cerr << "[bnb] probe qp " << qp::to_string(sol.status) << " after " << sol.iters
                << " iters (prim " << sol.prim_res << ", dual " << sol.dual_res << ")\n";
    return false;
  }
  Vec full = fixed.lift(sol.x, m_, a);
  offer_incumbent(full, sol.objective + fixed.obj_const, res);
  return true;
}

// Progressive per-knot rounding used to repair a failed warm-start
// completion: pin knot k's selector groups to the regions containing the
// current relaxed values, re-solve, and move to the next knot. Receding
// structure keeps downstream knots free to absorb the rounding. Heuristic
// only; no sibling nodes enter the global queue.
bool Search::heuristic_dive(std::vector<std::int8_t> fixed, MiqpResult& res) {
  if (!propagate(binary_rows_, fixed)) return false;
  NodeSolve ns = solve_node(fixed, -kInf);
  ++res.nodes;
  ++next_id_;
  if (ns.pruned) return false;

  for (int knot = 1; knot < std::max(m_.horizon, 2); ++knot) {
    bool pinned_any = false;
    for (const auto& g : m_.selectors) {
      if (g.knot != knot || g.bins.empty()) continue;
      bool free_group = false;
      for (int bcol : g.bins) free_group = free_group || fixed[m_.binary_pos(bcol)] < 0;
      if (!free_group) continue;
      double val = ns.x[g.var];
      int r = g.region_of(val);
      for (auto [col, v] : g.values_for_region(r))
        fixed[m_.binary_pos(col)] = static_cast<std::int8_t>(v);
      pinned_any = true;
    }
    // contacts/regions of this knot, if still free
    for (const auto& link : m_.links) {
      if (link.knot != knot) continue;
      int cpos = m_.binary_pos(link.c);
      if (cpos >= 0 && fixed[cpos] < 0) {
        fixed[cpos] = static_cast<std::int8_t>(ns.x[link.c] >= 0.5 ? 1 : 0);
        pinned_any = true;
      }
    }
    if (!pinned_any) continue;
    if (!propagate(binary_rows_, fixed)) {
      if (std::getenv("MILO_BNB_DEBUG"))
        std::cerr << "[dive] knot " << knot << " propagation failed\n";
      return false;
    }
    ns = solve_node(fixed, -kInf);
    ++res.nodes;
    ++next_id_;
    if (ns.pruned) {
      if (std::getenv("MILO_BNB_DEBUG")) std::cerr << "[dive] knot " << knot << " pruned\n";
      return false;
    }
    if (std::getenv("MILO_BNB_DEBUG"))
      std::cerr << "[dive] knot " << knot << " obj=" << ns.obj
                << (ns.integral ? " integral" : "") << "\n";
    if (limits_hit()) return false;
  }

  IntegerAssignment full = complete_by_rounding(ns.x, fixed);
  std::vector<std::int8_t> all(full.value.begin(), full.value.end());
  if (!propagate(binary_rows_, all)) {
    if (std::getenv("MILO_BNB_DEBUG")) std::cerr << "[dive] final propagate failed\n";
    return false;
  }
  for (std::size_t k = 0; k < all.size(); ++k) full.value[k] = all[k];
  ++res.nodes;
  ++next_id_;
  bool ok = solve_assignment(full, res);
  if (std::getenv("MILO_BNB_DEBUG"))
    std::cerr << "[dive] final solve_assignment -> " << (ok ? "incumbent" : "failed")
              << " z_p=" << res.z_p << "\n";
  return ok;
}

bool Search::try_warm_probe(MiqpResult& res) {
  const auto& warm = *opts_.warm;
  if (warm.value.size() != m_.binary_idx.size())
    throw InvalidWarmStart("warm assignment does not match the model's binaries");

  std::vector<std::int8_t> fixed(warm.value.begin(), warm.value.end());
  if (!propagate(binary_rows_, fixed)) {
    std::cerr << "bnb: warm assignment conflicts with the binary rows; ignoring seed\n";
    return false;
  }

  bool complete = std::none_of(fixed.begin(), fixed.end(), [](std::int8_t v) { return v < 0; });
  IntegerAssignment full = IntegerAssignment::empty(m_);
  if (complete) {
    for (std::size_t k = 0; k < fixed.size(); ++k) full.value[k] = fixed[k];
  } else {
    // a crude iterate of the seeded relaxation is enough to round the free
    // binaries; convergence is not required here
    NodeSolve seeded = solve_node(fixed, -kInf, /*accept_maxiter=*/true);
    ++res.nodes;
    ++next_id_;
    if (seeded.pruned) {
      std::cerr << "bnb: seeded relaxation infeasible; ignoring seed\n";
      return false;
    }
    full = complete_by_rounding(seeded.x, fixed);
    std::vector<std::int8_t> all(full.value.begin(), full.value.end());
    if (propagate(binary_rows_, all)) {
      IntegerAssignment rounded = full;
      for (std::size_t k = 0; k < all.size(); ++k) rounded.value[k] = all[k];
      ++res.nodes;
      ++next_id_;
      if (solve_assignment(rounded, res)) return true;
    }
    // one-shot rounding failed; repair by diving from the seeded node
    return heuristic_dive(fixed, res);
  }
  ++res.nodes;
  ++next_id_;
  return solve_assignment(full, res);
}

void Search::dive(Node node, const NodeSolve& solved_in, MiqpResult& res) {
  NodeSolve solved = solved_in;
  while (true) {
    if (res.incumbent && node.bound >= res.z_p - kBoundEps) return;  // dominated
    if (solved.integral) {
      offer_incumbent(solved.x, solved.obj, res);
      return;
    }
    int k = pick_branch_var(solved.x, node.fixed);
    if (k < 0) {
      // numerically integral after all
      offer_incumbent(solved.x, solved.obj, res);
      return;
    }
    int col = m_.binary_idx[k];
    double relaxed = solved.x[col];
    int preferred = std::lround(relaxed) >= 1 ? 1 : 0;
    bool integral_branch = std::fabs(relaxed - preferred) <= kIntTol;

    // sibling goes to the queue, preferred child continues the dive
    for (int side = 1; side >= 0; --side) {
      int val = side == 1 ? 1 - preferred : preferred;
      std::vector<std::int8_t> child_fixed = node.fixed;
      child_fixed[k] = static_cast<std::int8_t>(val);
      if (!propagate(binary_rows_, child_fixed)) {
        if (side == 0) return;  // preferred child infeasible by propagation
        continue;
      }
      if (side == 1) {
        NodeSolve sib = solve_node(child_fixed, node.bound);
        ++res.nodes;
        long id = ++next_id_;
        if (sib.pruned) continue;
        log_node(id, node.depth + 1, sib.bound, res);
        if (sib.integral) {
          offer_incumbent(sib.x, sib.obj, res);
          continue;
        }
        if (!res.incumbent || sib.bound < res.z_p - kBoundEps)
          open_.push(Node{id, node.depth + 1, sib.bound, std::move(child_fixed)});
      } else if (integral_branch) {
        // pinning a variable at its integral relaxation value leaves the
        // relaxation unchanged; reuse it without a solve
        node.depth += 1;
        node.fixed = std::move(child_fixed);
      } else {
        NodeSolve child = solve_node(child_fixed, node.bound);
        ++res.nodes;
        long id = ++next_id_;
        if (child.pruned) return;
        log_node(id, node.depth + 1, child.bound, res);
        node.id = id;
        node.depth += 1;
        node.bound = child.bound;
        node.fixed = std::move(child_fixed);
        solved = child;
      }
    }
    if (limits_hit()) return;
  }
}

MiqpResult Search::run() {
  MiqpResult res;
  res.status = MiqpStatus::Infeasible;

  std::vector<std::int8_t> root_fixed(m_.binary_idx.size(), -1);
  if (!propagate(binary_rows_, root_fixed)) {
    res.gap = kInf;
    return res;
  }

  if (opts_.warm) try_warm_probe(res);

  NodeSolve root = solve_node(root_fixed, -kInf);
  long root_id = next_id_++;
  ++res.nodes;
  if (root.pruned) {
    res.status = MiqpStatus::Infeasible;
    res.incumbent.reset();
    res.primal.reset();
    return res;
  }

  res.z_d = root.bound;
  log_node(root_id, 0, root.bound, res);

  if (root.integral && !res.incumbent) offer_incumbent(root.x, root.obj, res);

  // second leg of the warm-start machinery: complete the *root* relaxation
  // by per-knot rounding as well; gentle instances often have a near-convex
  // optimum the trot probe misses entirely
  if (opts_.warm && !root.integral && !limits_hit()) heuristic_dive(root_fixed, res);

  if (!(root.integral && res.z_p <= root.bound + kBoundEps))
    dive(Node{root_id, 0, root.bound, root_fixed}, root, res);

  auto finish = [&](MiqpStatus s) {
    res.status = s;
    res.gap = res.incumbent ? gap_ratio(res.z_p, res.z_d) : kInf;
    return res;
  };

  while (true) {
    if (!open_.empty()) res.z_d = std::max(res.z_d, std::min(open_.top().bound, res.z_p));
    else if (res.incumbent) res.z_d = res.z_p;

    res.gap = gap_ratio(res.z_p, res.z_d);
    if (res.incumbent && res.z_d >= res.z_p - 1e-9) return finish(MiqpStatus::Optimal);
    if (res.incumbent && opts_.gap_target > 0.0 && res.gap <= opts_.gap_target)
      return finish(MiqpStatus::GapReached);
    if (open_.empty()) {
      if (res.incumbent) return finish(MiqpStatus::Optimal);
      return finish(MiqpStatus::Infeasible);
    }
    if (limits_hit()) return finish(MiqpStatus::TimeLimit);

    Node node = open_.top();
    open_.pop();
    if (res.incumbent && node.bound >= res.z_p - kBoundEps) continue;

    NodeSolve solved = solve_node(node.fixed, node.bound);
    ++res.nodes;
    ++next_id_;
    if (solved.pruned) continue;
    node.bound = solved.bound;
    log_node(node.id, node.depth, node.bound, res);
    dive(std::move(node), solved, res);
  }
}

}  // namespace

MiqpResult solve_miqp(const MixedIntegerQP& m, const BnbOptions& opts) {
  opts.validate();
  if (m.num_binaries() == 0) {
    // pure QP; solve once
    BnbOptions o = opts;
    o.warm.reset();
    Search s(m, o);
    return s.run();
  }
  Search s(m, opts);
  return s.run();
}

MiqpResult enumerate_miqp(const MixedIntegerQP& m, const qp::QpSettings& settings) {
  const int k = m.num_binaries();
  if (k > 16) throw TooManyBinaries("enumerate_miqp supports at most 16 binaries");
  (void)settings;

  auto ext = m.extended();
  qp::IpmSolver solver(m.P, m.q, ext.A, ext.l, ext.u);

  MiqpResult res;
  res.status = MiqpStatus::Infeasible;
  for (long code = 0; code < (1L << k); ++code) {
    IntegerAssignment a = IntegerAssignment::empty(m);
    for (int j = 0; j < k; ++j) a.value[j] = static_cast<std::int8_t>((code >> j) & 1);
    try {
      a.validate(m);
    } catch (const InconsistentAssignment&) {
      continue;
    }
    Vec l = ext.l, u = ext.u;
    bool bound_conflict = false;
    for (int j = 0; j < k; ++j) {
      int row = ext.bound_row_of_var[m.binary_idx[j]];
      if (a.value[j] < l[row] - 0.5 || a.value[j] > u[row] + 0.5) { bound_conflict = true; break; }
      l[row] = a.value[j];
      u[row] = a.value[j];
    }
    if (bound_conflict) continue;
    solver.update_bounds(l, u);
    auto sol = solver.solve();
    ++res.nodes;
    if (sol.status != qp::QpStatus::Solved) continue;
    double cost = sol.objective + m.obj_const;
    if (cost < res.z_p) {
      res.z_p = cost;
      res.primal = sol.x;
      res.incumbent = a;
    }
  }
  if (res.incumbent) {
    res.status = MiqpStatus::Optimal;
    res.z_d = res.z_p;
    res.gap = 0.0;
    res.first_incumbent_node = 0;
  }
  return res;
}

GaitSeed gait_seed(int horizon, GaitStyle style) {
  if (horizon < 2) throw std::invalid_argument("gait seed needs horizon >= 2");
  GaitSeed seed;
  seed.contacts.resize(horizon);
  for (int n = 0; n < horizon; ++n) {
    if (style == GaitStyle::AllStance) seed.contacts[n] = {1, 1, 1, 1};
    else if (n % 2 == 0) seed.contacts[n] = {1, 0, 0, 1};  // FL + RR
    else seed.contacts[n] = {0, 1, 1, 0};                  // FR + RL
  }
  return seed;
}

relax::IntegerAssignment seed_assignment(const MixedIntegerQP& m, const GaitSeed& seed) {
  if (static_cast<int>(seed.contacts.size()) < m.horizon)
    throw InvalidWarmStart("gait seed shorter than the model horizon");
  IntegerAssignment a = IntegerAssignment::empty(m);
  for (int n = 1; n < m.horizon; ++n)
    for (int i = 0; i < 4; ++i) {
      auto col = m.names.find("c[" + std::to_string(n) + "][" + std::to_string(i) + "]");
      if (!col) throw InvalidWarmStart("model has no contact binary c[" + std::to_string(n) +
                                       "][" + std::to_string(i) + "]");
      int pos = m.binary_pos(*col);
      if (pos < 0) throw InvalidWarmStart("contact variable is not binary");
      a.value[pos] = static_cast<std::int8_t>(seed.contacts[n][i]);
    }
  return a;
}

}  // namespace milo::bnb
