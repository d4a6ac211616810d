#include "milo/relax/model_builder.hpp"

#include <algorithm>
#include <stdexcept>

namespace milo::relax {

int ModelBuilder::add_var(const std::string& name, double lb, double ub) {
  int id = names_.add(name);
  lb_.push_back(lb);
  ub_.push_back(ub);
  q_.push_back(0.0);
  return id;
}

int ModelBuilder::add_fixed(const std::string& name, double value) {
  return add_var(name, value, value);
}

int ModelBuilder::add_binary(const std::string& name, const BinKey& key) {
  int id = add_var(name, 0.0, 1.0);
  binaries_.emplace_back(id, key);
  return id;
}

void ModelBuilder::fix(int var, double value) {
  lb_[var] = value;
  ub_[var] = value;
}

void ModelBuilder::intersect_bounds(int var, double lb, double ub) {
  lb_[var] = std::max(lb_[var], lb);
  ub_[var] = std::min(ub_[var], ub);
  if (lb_[var] > ub_[var] + 1e-12)
    throw std::invalid_argument("empty bounds for " + names_.name(var));
}

void ModelBuilder::add_row(Terms terms, double lo, double hi) {
  int row = num_rows();
  // merge duplicate columns so squares and folded products stay well-formed
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  int last = -1;
  for (const auto& [col, coef] : terms) {
    if (coef == 0.0) continue;
    if (col == last) {
      a_trips_.back() = {row, col, a_trips_.back().value() + coef};
    } else {
      a_trips_.emplace_back(row, col, coef);
      last = col;
    }
  }
  row_l_.push_back(lo);
  row_u_.push_back(hi);
}

void ModelBuilder::add_cost_sq(const Terms& terms_in, double ref, double w) {
  if (w == 0.0) return;
  // w * (a'x - ref)^2 = 0.5 x' (2w a a') x - 2 w ref a'x + w ref^2
  Terms terms = terms_in;
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Terms merged;
  for (const auto& [col, coef] : terms) {
    if (!merged.empty() && merged.back().first == col) merged.back().second += coef;
    else merged.emplace_back(col, coef);
  }
  for (std::size_t i = 0; i < merged.size(); ++i) {
    auto [ci, ai] = merged[i];
    for (std::size_t j = i; j < merged.size(); ++j) {
      auto [cj, aj] = merged[j];
      p_entries_[{ci, cj}] += 2.0 * w * ai * aj;
    }
    q_[ci] += -2.0 * w * ref * ai;
  }
  obj_const_ += w * ref * ref;
}

MixedIntegerQP ModelBuilder::finish(int horizon) {
  MixedIntegerQP m;
  const int n = num_vars();
  m.names = names_;
  m.lb = Eigen::Map<const Vec>(lb_.data(), n);
  m.ub = Eigen::Map<const Vec>(ub_.data(), n);
  m.q = Eigen::Map<const Vec>(q_.data(), n);
  m.obj_const = obj_const_;
  m.horizon = horizon;

  // P full symmetric from the accumulated upper triangle
  std::vector<Eigen::Triplet<double>> pt;
  pt.reserve(p_entries_.size() * 2);
  for (const auto& [rc, v] : p_entries_) {
    auto [r, c] = rc;
    if (v == 0.0) continue;
    pt.emplace_back(r, c, v);
    if (r != c) pt.emplace_back(c, r, v);
  }
  m.P.resize(n, n);
  m.P.setFromTriplets(pt.begin(), pt.end());

  m.cons.A.resize(num_rows(), n);
  m.cons.A.setFromTriplets(a_trips_.begin(), a_trips_.end());
  m.cons.A.makeCompressed();
  m.cons.l = Eigen::Map<const Vec>(row_l_.data(), row_l_.size());
  m.cons.u = Eigen::Map<const Vec>(row_u_.data(), row_u_.size());

  std::stable_sort(binaries_.begin(), binaries_.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& [col, key] : binaries_) {
    m.binary_idx.push_back(col);
    m.binary_category.push_back(key.category);
  }
  m.selectors = selectors_;
  m.links = links_;
  m.finalize_binary_pos();
  return m;
}

}  // namespace milo::relax
