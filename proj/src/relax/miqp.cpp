#include "milo/relax/miqp.hpp"

#include "milo/errors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace milo::relax {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int VarTable::add(const std::string& name) {
  auto [it, fresh] = index_.emplace(name, static_cast<int>(names_.size()));
  if (!fresh) throw std::logic_error("duplicate variable name: " + name);
  names_.push_back(name);
  return it->second;
}

int VarTable::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown variable: " + name);
  return it->second;
}

std::optional<int> VarTable::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void SelectorGroup::slack(int r, std::vector<std::pair<int, double>>& terms,
                          double& constant) const {
  terms.clear();
  constant = 0.0;
  if (bins.empty()) return;  // single region, always active
  if (kind == Kind::OneHot) {
    terms.emplace_back(bins[r], -1.0);
    constant = 1.0;
    return;
  }
  // coded: Hamming distance to the bit pattern of r
  for (std::size_t j = 0; j < bins.size(); ++j) {
    int qj = (r >> j) & 1;
    constant += qj;
    terms.emplace_back(bins[j], qj ? -1.0 : 1.0);
  }
}

std::vector<std::pair<int, int>> SelectorGroup::values_for_region(int r) const {
  std::vector<std::pair<int, int>> out;
  if (bins.empty()) return out;
  if (kind == Kind::OneHot) {
    for (int k = 0; k < regions; ++k) out.emplace_back(bins[k], k == r ? 1 : 0);
  } else {
    for (std::size_t j = 0; j < bins.size(); ++j) out.emplace_back(bins[j], (r >> j) & 1);
  }
  return out;
}

int MixedIntegerQP::binary_pos(int col) const {
  if (col < 0 || col >= static_cast<int>(binary_pos_.size())) return -1;
  return binary_pos_[col];
}

void MixedIntegerQP::finalize_binary_pos() {
  binary_pos_.assign(num_vars(), -1);
  for (std::size_t k = 0; k < binary_idx.size(); ++k) binary_pos_[binary_idx[k]] = static_cast<int>(k);
}

MixedIntegerQP::Extended MixedIntegerQP::extended() const {
  Extended ext;
  const int n = num_vars();
  const int m = num_rows();
  std::vector<int> bounded;
  ext.bound_row_of_var.assign(n, -1);
  for (int j = 0; j < n; ++j)
    if (std::isfinite(lb[j]) || std::isfinite(ub[j])) {
      ext.bound_row_of_var[j] = m + static_cast<int>(bounded.size());
      bounded.push_back(j);
    }
  const int mb = static_cast<int>(bounded.size());
  ext.A.resize(m + mb, n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(cons.A.nonZeros() + mb);
  for (int j = 0; j < cons.A.outerSize(); ++j)
    for (SpMat::InnerIterator it(cons.A, j); it; ++it) trips.emplace_back(it.row(), j, it.value());
  for (int k = 0; k < mb; ++k) trips.emplace_back(m + k, bounded[k], 1.0);
  ext.A.setFromTriplets(trips.begin(), trips.end());
  ext.l.resize(m + mb);
  ext.u.resize(m + mb);
  ext.l.head(m) = cons.l;
  ext.u.head(m) = cons.u;
  for (int k = 0; k < mb; ++k) {
    ext.l[m + k] = lb[bounded[k]];
    ext.u[m + k] = ub[bounded[k]];
  }
  return ext;
}

double MixedIntegerQP::objective_at(const Vec& x) const {
  return 0.5 * x.dot(P * x) + q.dot(x) + obj_const;
}

double MixedIntegerQP::max_violation(const Vec& x, bool equality_only) const {
  if (x.size() != num_vars()) throw DimensionMismatch("max_violation: wrong x size");
  double worst = 0.0;
  Vec ax = cons.A * x;
  for (int i = 0; i < num_rows(); ++i) {
    bool eq = std::isfinite(cons.l[i]) && std::isfinite(cons.u[i]) &&
              cons.u[i] - cons.l[i] < 1e-12;
    if (equality_only && !eq) continue;
    worst = std::max({worst, cons.l[i] - ax[i], ax[i] - cons.u[i]});
  }
  if (!equality_only)
    for (int j = 0; j < num_vars(); ++j)
      worst = std::max({worst, lb[j] - x[j], x[j] - ub[j]});
  return std::max(worst, 0.0);
}

double MixedIntegerQP::min_eigenvalue_probe() const {
  const int n = num_vars();
  if (n == 0) return 0.0;
  // Gershgorin upper bound, then power iteration on c*I - P.
  double c = 0.0;
  for (int j = 0; j < n; ++j) {
    double diag = 0.0, off = 0.0;
    for (SpMat::InnerIterator it(P, j); it; ++it) {
      if (it.row() == j) diag = it.value();
      else off += std::fabs(it.value());
    }
    c = std::max(c, diag + off);
  }
  c += 1.0;
  Vec v = Vec::Ones(n);
  for (int j = 0; j < n; ++j) v[j] += 1e-3 * std::sin(j + 1.0);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vec w = c * v - P * v;
    double nrm = w.norm();
    if (nrm < 1e-300) return c;  // P = c I exactly on this slice
    w /= nrm;
    lam = nrm;
    v = w;
  }
  return c - lam;
}

bool IntegerAssignment::complete() const {
  for (auto v : value)
    if (v < 0) return false;
  return true;
}

int IntegerAssignment::count_set() const {
  int k = 0;
  for (auto v : value)
    if (v >= 0) ++k;
  return k;
}

void IntegerAssignment::validate(const MixedIntegerQP& m) const {
  if (value.size() != m.binary_idx.size())
    throw InconsistentAssignment("assignment size does not match binary count");
  if (!complete()) throw InconsistentAssignment("assignment is not complete");

  auto val_of_col = [&](int col) -> int {
    int pos = m.binary_pos(col);
    if (pos < 0) throw InconsistentAssignment("group references a non-binary column");
    return value[pos];
  };

  for (const auto& g : m.selectors) {
    if (g.kind == SelectorGroup::Kind::OneHot) {
      int sum = 0;
      for (int b : g.bins) sum += val_of_col(b);
      if (sum != 1)
        throw InconsistentAssignment("one-hot selector group does not sum to 1 (var " +
                                     m.names.name(g.var) + ")");
    }
    // coded groups: every bit pattern selects exactly one region
  }
  for (const auto& link : m.links) {
    int zsum = 0;
    for (int zc : link.z) zsum += val_of_col(zc);
    int cval;
    int pos = m.binary_pos(link.c);
    if (pos >= 0) cval = value[pos];
    else cval = static_cast<int>(std::lround(m.lb[link.c]));  // fixed knot-0 contact
    if (zsum != cval)
      throw InconsistentAssignment("sum_s z != c at knot " + std::to_string(link.knot) +
                                   " toe " + std::to_string(link.toe));
  }
}

}  // namespace milo::relax
