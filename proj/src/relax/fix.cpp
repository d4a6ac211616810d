#include "milo/relax/fix.hpp"

#include "milo/errors.hpp"

#include <cmath>
#include <limits>

namespace milo::relax {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTol = 1e-9;
}

Vec FixedQp::lift(const Vec& x_reduced, const MixedIntegerQP& orig,
                  const IntegerAssignment& a) const {
  if (x_reduced.size() != num_vars()) throw DimensionMismatch("lift: wrong reduced size");
  Vec full = Vec::Zero(orig_vars);
  for (int j = 0; j < num_vars(); ++j) full[col_map[j]] = x_reduced[j];
  for (std::size_t k = 0; k < orig.binary_idx.size(); ++k)
    full[orig.binary_idx[k]] = a.value[k];
  return full;
}

FixedQp fix_integers(const MixedIntegerQP& m, const IntegerAssignment& a) {
  a.validate(m);

  const int n = m.num_vars();
  std::vector<double> bin_value(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> is_bin(n, false);
  for (std::size_t k = 0; k < m.binary_idx.size(); ++k) {
    int col = m.binary_idx[k];
    is_bin[col] = true;
    bin_value[col] = a.value[k];
    // a bound-fixed binary must agree with the assignment
    if (m.ub[col] - m.lb[col] < 1e-12 && std::fabs(m.lb[col] - a.value[k]) > 1e-9)
      throw InconsistentAssignment("assignment conflicts with a fixed binary: " +
                                   m.names.name(col));
  }

  FixedQp out;
  out.orig_vars = n;
  std::vector<int> new_col(n, -1);
  for (int j = 0; j < n; ++j)
    if (!is_bin[j]) {
      new_col[j] = static_cast<int>(out.col_map.size());
      out.col_map.push_back(j);
    }
  const int nk = static_cast<int>(out.col_map.size());

  // objective: q' = q_keep + P[keep,bin] v ; const += 0.5 v'P_bb v + q_bin'v
  out.q = Vec::Zero(nk);
  out.obj_const = m.obj_const;
  for (int j = 0; j < nk; ++j) out.q[j] = m.q[out.col_map[j]];
  std::vector<Eigen::Triplet<double>> pt;
  for (int j = 0; j < m.P.outerSize(); ++j)
    for (SpMat::InnerIterator it(m.P, j); it; ++it) {
      int r = static_cast<int>(it.row()), cc = j;
      if (!is_bin[r] && !is_bin[cc]) {
        pt.emplace_back(new_col[r], new_col[cc], it.value());
      } else if (!is_bin[r] && is_bin[cc]) {
        out.q[new_col[r]] += it.value() * bin_value[cc];
      } else if (is_bin[r] && !is_bin[cc]) {
        // symmetric partner handles it; P is stored full so skip half
      } else {
        out.obj_const += 0.5 * it.value() * bin_value[r] * bin_value[cc];
      }
    }
  for (int col : m.binary_idx) out.obj_const += m.q[col] * bin_value[col];
  out.P.resize(nk, nk);
  out.P.setFromTriplets(pt.begin(), pt.end());

  out.lb = Vec(nk);
  out.ub = Vec(nk);
  for (int j = 0; j < nk; ++j) {
    out.lb[j] = m.lb[out.col_map[j]];
    out.ub[j] = m.ub[out.col_map[j]];
  }

  // rows: substitute, then drop the ones implied by the remaining bounds
  Eigen::SparseMatrix<double, Eigen::RowMajor> Ar = m.cons.A;
  std::vector<Eigen::Triplet<double>> at;
  std::vector<double> lv, uv;
  for (int i = 0; i < m.num_rows(); ++i) {
    double shift = 0.0;
    double act_lo = 0.0, act_hi = 0.0;
    int kept = 0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Ar, i); it; ++it) {
      int col = static_cast<int>(it.col());
      if (is_bin[col]) {
        shift += it.value() * bin_value[col];
        continue;
      }
      ++kept;
      double lo = m.lb[col], hi = m.ub[col];
      if (it.value() >= 0) {
        act_lo += it.value() * lo;
        act_hi += it.value() * hi;
      } else {
        act_lo += it.value() * hi;
        act_hi += it.value() * lo;
      }
    }
    double lnew = std::isfinite(m.cons.l[i]) ? m.cons.l[i] - shift : -kInf;
    double unew = std::isfinite(m.cons.u[i]) ? m.cons.u[i] - shift : kInf;

    if (kept == 0) {
      if (lnew > kTol || unew < -kTol) out.trivially_infeasible = true;
      continue;
    }
    // implied by bounds -> drop (deactivated big-M rows land here)
    if (act_lo >= lnew - kTol && act_hi <= unew + kTol) continue;

    int row = static_cast<int>(lv.size());
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Ar, i); it; ++it) {
      int col = static_cast<int>(it.col());
      if (!is_bin[col]) at.emplace_back(row, new_col[col], it.value());
    }
    lv.push_back(lnew);
    uv.push_back(unew);
  }
  out.A.resize(static_cast<int>(lv.size()), nk);
  out.A.setFromTriplets(at.begin(), at.end());
  out.l = Eigen::Map<const Vec>(lv.data(), lv.size());
  out.u = Eigen::Map<const Vec>(uv.data(), uv.size());
  return out;
}

}  // namespace milo::relax
