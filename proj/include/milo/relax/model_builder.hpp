#pragma once

#include "milo/relax/miqp.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace milo::relax {

// Sort key giving the canonical binary order: contacts, regions, then
// selectors, each by (knot, toe/axis, region).
struct BinKey {
  int category = static_cast<int>(BinCategory::Other);
  int knot = 0;
  int a = 0;
  int b = 0;
  int c = 0;
  auto tuple() const { return std::tie(category, knot, a, b, c); }
  bool operator<(const BinKey& o) const { return tuple() < o.tuple(); }
};

class ModelBuilder {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  int add_var(const std::string& name, double lb = -kInf, double ub = kInf);
  int add_fixed(const std::string& name, double value);
  int add_binary(const std::string& name, const BinKey& key);

  void fix(int var, double value);
  bool is_fixed(int var) const { return ub_[var] - lb_[var] < 1e-14; }
  double fixed_value(int var) const { return lb_[var]; }
  void intersect_bounds(int var, double lb, double ub);
  double lb(int var) const { return lb_[var]; }
  double ub(int var) const { return ub_[var]; }
  int num_vars() const { return names_.size(); }
  const VarTable& names() const { return names_; }

  using Terms = std::vector<std::pair<int, double>>;
  void add_row(Terms terms, double lo, double hi);

  // cost += w * (sum(terms) - ref)^2
  void add_cost_sq(const Terms& terms, double ref, double w);

  void register_selector(SelectorGroup g) { selectors_.push_back(std::move(g)); }
  const std::vector<SelectorGroup>& selectors() const { return selectors_; }
  void register_link(ContactLink link) { links_.push_back(std::move(link)); }

  int num_rows() const { return static_cast<int>(row_l_.size()); }

  MixedIntegerQP finish(int horizon = 0);

 private:
  VarTable names_;
  std::vector<double> lb_, ub_;
  std::vector<std::pair<int, BinKey>> binaries_;
  std::vector<Eigen::Triplet<double>> a_trips_;
  std::vector<double> row_l_, row_u_;
  std::map<std::pair<int, int>, double> p_entries_;  // upper triangle
  std::vector<double> q_;
  double obj_const_ = 0.0;
  std::vector<SelectorGroup> selectors_;
  std::vector<ContactLink> links_;
};

}  // namespace milo::relax
