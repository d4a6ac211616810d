#include "milo/qp/solver.hpp"

#include "milo/errors.hpp"
#include "milo/kernels/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace milo::qp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoEqBoost = 100.0;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;

double safe_div(double a, double b) { return a / std::max(b, 1e-12); }
}  // namespace

void QpSettings::validate() const {
  if (!(rho > 0) || !(sigma > 0)) throw std::invalid_argument("rho and sigma must be positive");
  if (!(alpha > 0) || !(alpha < 2)) throw std::invalid_argument("alpha must be in (0,2)");
  if (!(eps_abs > 0) || !(eps_rel >= 0)) throw std::invalid_argument("tolerances must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Solved: return "Solved";
    case QpStatus::MaxIter: return "MaxIter";
    case QpStatus::PrimalInfeasible: return "PrimalInfeasible";
    case QpStatus::DualInfeasible: return "DualInfeasible";
  }
  return "?";
}

void QpSolver::Csr::from(const SpMat& M) {
  rows = static_cast<std::size_t>(M.rows());
  Eigen::SparseMatrix<double, Eigen::RowMajor> R = M;
  R.makeCompressed();
  row_ptr.assign(R.outerIndexPtr(), R.outerIndexPtr() + R.rows() + 1);
  col_idx.assign(R.innerIndexPtr(), R.innerIndexPtr() + R.nonZeros());
  vals.assign(R.valuePtr(), R.valuePtr() + R.nonZeros());
}

void QpSolver::Csr::multiply(const double* x, double* out) const {
  kernels::csr_spmv(rows, row_ptr.data(), col_idx.data(), vals.data(), x, out);
}

QpSolver::QpSolver(SpMat P, Vec q, SpMat A, Vec l, Vec u, QpSettings settings)
    : settings_(settings),
      n_(static_cast<int>(P.rows())),
      m_(static_cast<int>(A.rows())),
      P_(std::move(P)),
      A_(std::move(A)),
      q_(std::move(q)),
      l_(std::move(l)),
      u_(std::move(u)) {
  settings_.validate();
  if (P_.cols() != n_ || q_.size() != n_ || A_.cols() != n_ || l_.size() != m_ || u_.size() != m_)
    throw DimensionMismatch("qp: inconsistent problem dimensions");
  for (int i = 0; i < m_; ++i)
    if (l_[i] > u_[i] + 1e-12) throw std::invalid_argument("qp: l > u on row " + std::to_string(i));
  P_.makeCompressed();
  A_.makeCompressed();

  d_scale_ = Vec::Ones(n_);
  e_scale_ = Vec::Ones(m_);
  if (settings_.scaling) equilibrate();

  P_csr_.from(P_);
  A_csr_.from(A_);
  At_csr_.from(SpMat(A_.transpose()));

  rho_bar_ = settings_.rho;
  compute_rho_vec();
  factorize();
}

void QpSolver::equilibrate() {
  // Modified Ruiz equilibration on [P A'; A 0], then cost scaling.
  for (int it = 0; it < settings_.scaling_iters; ++it) {
    Vec dcol = Vec::Zero(n_);
    Vec erow = Vec::Zero(m_);
    for (int j = 0; j < n_; ++j)
      for (SpMat::InnerIterator p(P_, j); p; ++p)
        dcol[j] = std::max(dcol[j], std::fabs(p.value()));
    for (int j = 0; j < n_; ++j)
      for (SpMat::InnerIterator a(A_, j); a; ++a) {
        dcol[j] = std::max(dcol[j], std::fabs(a.value()));
        erow[a.row()] = std::max(erow[a.row()], std::fabs(a.value()));
      }
    for (int j = 0; j < n_; ++j) dcol[j] = dcol[j] > 1e-12 ? 1.0 / std::sqrt(dcol[j]) : 1.0;
    for (int i = 0; i < m_; ++i) erow[i] = erow[i] > 1e-12 ? 1.0 / std::sqrt(erow[i]) : 1.0;

    P_ = dcol.asDiagonal() * P_ * dcol.asDiagonal();
    A_ = erow.asDiagonal() * A_ * dcol.asDiagonal();
    q_ = dcol.cwiseProduct(q_);
    for (int i = 0; i < m_; ++i) {
      if (std::isfinite(l_[i])) l_[i] *= erow[i];
      if (std::isfinite(u_[i])) u_[i] *= erow[i];
    }
    d_scale_ = d_scale_.cwiseProduct(dcol);
    e_scale_ = e_scale_.cwiseProduct(erow);
  }
  // cost scaling
  double pnorm = 0.0;
  for (int j = 0; j < n_; ++j) {
    double cn = 0.0;
    for (SpMat::InnerIterator p(P_, j); p; ++p) cn = std::max(cn, std::fabs(p.value()));
    pnorm += cn;
  }
  pnorm = n_ > 0 ? pnorm / n_ : 0.0;
  double qn = q_.size() ? q_.cwiseAbs().maxCoeff() : 0.0;
  double denom = std::max(pnorm, qn);
  if (denom > 1e-12) {
    c_scale_ = 1.0 / denom;
    P_ *= c_scale_;
    q_ *= c_scale_;
  }
}

void QpSolver::compute_rho_vec() {
  rho_vec_ = Vec::Constant(m_, rho_bar_);
  for (int i = 0; i < m_; ++i)
    if (std::isfinite(l_[i]) && std::isfinite(u_[i]) && u_[i] - l_[i] < 1e-12)
      rho_vec_[i] = rho_bar_ * kRhoEqBoost;
  for (int i : settings_.rho_boost_rows)
    if (i >= 0 && i < m_) rho_vec_[i] = rho_bar_ * kRhoEqBoost;
  rho_inv_vec_ = rho_vec_.cwiseInverse();
}

void QpSolver::factorize() {
  SpMat K(n_ + m_, n_ + m_);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(P_.nonZeros() + A_.nonZeros() + n_ + m_);
  for (int j = 0; j < n_; ++j)
    for (SpMat::InnerIterator p(P_, j); p; ++p) trips.emplace_back(p.row(), j, p.value());
  for (int j = 0; j < n_; ++j) trips.emplace_back(j, j, settings_.sigma);
  for (int j = 0; j < n_; ++j)
    for (SpMat::InnerIterator a(A_, j); a; ++a) {
      trips.emplace_back(n_ + a.row(), j, a.value());
      trips.emplace_back(j, n_ + a.row(), a.value());
    }
  for (int i = 0; i < m_; ++i) trips.emplace_back(n_ + i, n_ + i, -rho_inv_vec_[i]);
  K.setFromTriplets(trips.begin(), trips.end());
  ldlt_.compute(K);
  if (ldlt_.info() != Eigen::Success)
    throw NumericalBreakdown("qp: KKT factorization failed");
  factorized_ = true;
}

void QpSolver::update_bounds(const Vec& l, const Vec& u) {
  if (l.size() != m_ || u.size() != m_) throw DimensionMismatch("update_bounds: wrong size");
  l_ = l.cwiseProduct(e_scale_);
  u_ = u.cwiseProduct(e_scale_);
  // keep rho_vec as factorized; equality boost tracks the original rows only
}

void QpSolver::update_q(const Vec& q) {
  if (q.size() != n_) throw DimensionMismatch("update_q: wrong size");
  q_ = c_scale_ * q.cwiseProduct(d_scale_);
}

QpSolution QpSolver::solve(const std::optional<WarmStart>& warm) {
  const auto t0 = std::chrono::steady_clock::now();

  Vec x = Vec::Zero(n_), z = Vec::Zero(m_), y = Vec::Zero(m_);
  if (warm) {
    if (warm->x.size() != n_ || warm->y.size() != m_)
      throw DimensionMismatch("warm start size mismatch");
    x = warm->x.cwiseQuotient(d_scale_);
    y = c_scale_ * warm->y.cwiseQuotient(e_scale_);
    if (m_ > 0) {
      A_csr_.multiply(x.data(), z.data());
      kernels::clamp(m_, z.data(), l_.data(), u_.data(), z.data());
    }
  }

  std::ofstream dump;
  if (!settings_.dump_csv.empty()) {
    dump.open(settings_.dump_csv);
    dump << "iter,prim_res,dual_res\n";
  }

  QpSolution sol;
  sol.status = QpStatus::MaxIter;

  Vec rhs(n_ + m_), kkt_sol(n_ + m_);
  Vec x_prev = x, y_prev = y;
  Vec ax(m_), px(n_), aty(n_);
  Vec ztilde(m_), zcand(m_);

  int iter = 0;
  for (iter = 1; iter <= settings_.max_iter; ++iter) {
    x_prev = x;
    y_prev = y;

    // (P + sigma I) x~ + A' nu = sigma x - q ;  A x~ - rho^-1 nu = z - rho^-1 y
    rhs.head(n_) = settings_.sigma * x - q_;
    rhs.tail(m_) = z - rho_inv_vec_.cwiseProduct(y);
    kkt_sol = ldlt_.solve(rhs);
    const auto xtilde = kkt_sol.head(n_);
    const auto nu = kkt_sol.tail(m_);

    ztilde = z + rho_inv_vec_.cwiseProduct(nu - y);

    // relaxed updates
    kernels::axpby(n_, settings_.alpha, xtilde.data(), 1.0 - settings_.alpha, x_prev.data(),
                   x.data());
    kernels::axpby(m_, settings_.alpha, ztilde.data(), 1.0 - settings_.alpha, z.data(),
                   zcand.data());
    Vec z_pre = zcand + rho_inv_vec_.cwiseProduct(y);
    kernels::clamp(m_, z_pre.data(), l_.data(), u_.data(), z.data());
    y += rho_vec_.cwiseProduct(zcand - z);

    if (!x.allFinite() || !y.allFinite())
      throw NumericalBreakdown("qp: iterate diverged to non-finite values");

    if (iter % settings_.check_interval != 0 && iter != settings_.max_iter && iter > 1) continue;

    // unscaled residuals
    if (m_ > 0) A_csr_.multiply(x.data(), ax.data());
    P_csr_.multiply(x.data(), px.data());
    if (m_ > 0) At_csr_.multiply(y.data(), aty.data());
    else aty.setZero();

    Vec ax_u = ax.cwiseQuotient(e_scale_);
    Vec z_u = z.cwiseQuotient(e_scale_);
    Vec dual_u = (px + q_ + aty).cwiseQuotient(d_scale_) / c_scale_;

    double prim = m_ > 0 ? kernels::inf_norm_diff(m_, ax_u.data(), z_u.data()) : 0.0;
    double dual = kernels::inf_norm(n_, dual_u.data());

    double prim_scale = 0.0;
    if (m_ > 0)
      prim_scale = std::max(kernels::inf_norm(m_, ax_u.data()), kernels::inf_norm(m_, z_u.data()));
    Vec px_u = px.cwiseQuotient(d_scale_) / c_scale_;
    Vec aty_u = aty.cwiseQuotient(d_scale_) / c_scale_;
    Vec q_u = q_.cwiseQuotient(d_scale_) / c_scale_;
    double dual_scale = std::max({kernels::inf_norm(n_, px_u.data()),
                                  kernels::inf_norm(n_, aty_u.data()),
                                  kernels::inf_norm(n_, q_u.data())});

    double eps_prim = settings_.eps_abs + settings_.eps_rel * prim_scale;
    double eps_dual = settings_.eps_abs + settings_.eps_rel * dual_scale;

    if (dump.is_open()) dump << iter << ',' << prim << ',' << dual << '\n';

    if (prim <= eps_prim && dual <= eps_dual) {
      sol.status = QpStatus::Solved;
      sol.prim_res = prim;
      sol.dual_res = dual;
      break;
    }

    // infeasibility certificates (unscaled)
    Vec dy = (y - y_prev).cwiseProduct(e_scale_) / c_scale_;
    double dy_norm = kernels::inf_norm(m_, dy.data());
    if (dy_norm > 1e-12) {
      Vec at_dy(n_);
      Vec dy_scaled = (y - y_prev);
      At_csr_.multiply(dy_scaled.data(), at_dy.data());
      Vec at_dy_u = at_dy.cwiseQuotient(d_scale_) / c_scale_;
      double support = 0.0;
      bool bounded = true;
      const double dir_tol = settings_.eps_pinf * dy_norm;
      for (int i = 0; i < m_ && bounded; ++i) {
        double dyp = std::max(dy[i], 0.0), dyn = std::min(dy[i], 0.0);
        if (std::isfinite(u_[i])) support += (u_[i] / e_scale_[i]) * dyp;
        else if (dyp > dir_tol) bounded = false;
        if (std::isfinite(l_[i])) support += (l_[i] / e_scale_[i]) * dyn;
        else if (-dyn > dir_tol) bounded = false;
      }
      if (bounded && kernels::inf_norm(n_, at_dy_u.data()) <= settings_.eps_pinf * dy_norm &&
          support <= -settings_.eps_pinf * dy_norm) {
        sol.status = QpStatus::PrimalInfeasible;
        sol.prim_res = prim;
        sol.dual_res = dual;
        break;
      }
    }

    Vec dx = (x - x_prev).cwiseProduct(d_scale_);
    double dx_norm = kernels::inf_norm(n_, dx.data());
    if (dx_norm > 1e-12) {
      Vec dx_scaled = x - x_prev;
      Vec p_dx(n_), a_dx(m_);
      P_csr_.multiply(dx_scaled.data(), p_dx.data());
      if (m_ > 0) A_csr_.multiply(dx_scaled.data(), a_dx.data());
      Vec p_dx_u = p_dx.cwiseQuotient(d_scale_) / c_scale_;
      double qdx = q_.dot(dx_scaled) / c_scale_;
      bool direction_ok = true;
      for (int i = 0; i < m_ && direction_ok; ++i) {
        double v = a_dx[i] / e_scale_[i];
        if (std::isfinite(u_[i]) && v > settings_.eps_dinf * dx_norm) direction_ok = false;
        if (std::isfinite(l_[i]) && v < -settings_.eps_dinf * dx_norm) direction_ok = false;
      }
      if (direction_ok && kernels::inf_norm(n_, p_dx_u.data()) <= settings_.eps_dinf * dx_norm &&
          qdx <= -settings_.eps_dinf * dx_norm) {
        sol.status = QpStatus::DualInfeasible;
        sol.prim_res = prim;
        sol.dual_res = dual;
        break;
      }
    }

    sol.prim_res = prim;
    sol.dual_res = dual;

    // deterministic adaptive rho
    if (settings_.adaptive_rho && iter % (settings_.check_interval * 8) == 0 &&
        iter < settings_.max_iter) {
      double ratio = std::sqrt(safe_div(safe_div(prim, std::max(prim_scale, 1e-12)),
                                        safe_div(dual, std::max(dual_scale, 1e-12))));
      double rho_new = std::clamp(rho_bar_ * ratio, kRhoMin, kRhoMax);
      if (rho_new > rho_bar_ * 5.0 || rho_new < rho_bar_ / 5.0) {
        if (std::getenv("MILO_QP_DEBUG"))
          fprintf(stderr, "[rho] iter=%d rho %g -> %g (prim=%g dual=%g)\n", iter, rho_bar_,
                  rho_new, prim, dual);
        rho_bar_ = rho_new;
        compute_rho_vec();
        factorize();
      }
    }
  }
  sol.iters = std::min(iter, settings_.max_iter);

  // unscale
  sol.x = x.cwiseProduct(d_scale_);
  sol.y = y.cwiseProduct(e_scale_) / c_scale_;
  sol.z = z.cwiseQuotient(e_scale_);

  if (settings_.polish && (sol.status == QpStatus::Solved || sol.status == QpStatus::MaxIter)) {
    polish(sol);
    // a stalled run whose polished point meets tolerance is a solution:
    // the iterate had the right active set before it converged
    if (sol.status == QpStatus::MaxIter && sol.prim_res <= settings_.eps_abs &&
        sol.dual_res <= settings_.eps_abs)
      sol.status = QpStatus::Solved;
  }

  // objective on the original data, from the (possibly polished) solution
  {
    Vec xs = sol.x.cwiseQuotient(d_scale_);
    Vec px_s(n_);
    P_csr_.multiply(xs.data(), px_s.data());
    sol.objective = (0.5 * xs.dot(px_s) + q_.dot(xs)) / c_scale_;
  }

  sol.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

QpStatus QpSolver::polish(QpSolution& sol) const {
  // Active set from multiplier signs; solve the equality-constrained KKT system
  // with light regularization and keep the result when it improves residuals.
  std::vector<int> active;
  std::vector<double> target;
  for (int i = 0; i < m_; ++i) {
    bool eq = std::isfinite(l_[i]) && std::isfinite(u_[i]) && u_[i] - l_[i] < 1e-12;
    double ys = sol.y[i];
    if (eq) {
      active.push_back(i);
      target.push_back(l_[i] / e_scale_[i]);
    } else if (ys < -1e-10 && std::isfinite(l_[i])) {
      active.push_back(i);
      target.push_back(l_[i] / e_scale_[i]);
    } else if (ys > 1e-10 && std::isfinite(u_[i])) {
      active.push_back(i);
      target.push_back(u_[i] / e_scale_[i]);
    }
  }
  const int ma = static_cast<int>(active.size());

  // Unscaled data for the polish system.
  Vec dinv = d_scale_.cwiseInverse();
  SpMat P_orig = dinv.asDiagonal() * P_ * dinv.asDiagonal();
  P_orig *= 1.0 / c_scale_;
  Vec q_orig = q_.cwiseProduct(dinv) / c_scale_;

  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < n_; ++j)
    for (SpMat::InnerIterator p(P_orig, j); p; ++p) trips.emplace_back(p.row(), j, p.value());
  const double reg = 1e-9;
  for (int j = 0; j < n_; ++j) trips.emplace_back(j, j, reg);

  std::vector<int> row_to_k(m_, -1);
  for (int k = 0; k < ma; ++k) row_to_k[active[k]] = k;
  SpMat A_orig = (e_scale_.cwiseInverse()).asDiagonal() * A_ * dinv.asDiagonal();
  for (int j = 0; j < n_; ++j)
    for (SpMat::InnerIterator a(A_orig, j); a; ++a) {
      int k = row_to_k[a.row()];
      if (k >= 0) {
        trips.emplace_back(n_ + k, j, a.value());
        trips.emplace_back(j, n_ + k, a.value());
      }
    }
  for (int k = 0; k < ma; ++k) trips.emplace_back(n_ + k, n_ + k, -reg);

  SpMat K(n_ + ma, n_ + ma);
  K.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<SpMat> ldlt(K);
  if (ldlt.info() != Eigen::Success) return sol.status;

  Vec rhs(n_ + ma);
  rhs.head(n_) = -q_orig;
  for (int k = 0; k < ma; ++k) rhs[n_ + k] = target[k];
  Vec xl = ldlt.solve(rhs);
  // one step of iterative refinement
  Vec resid = rhs - K * xl;
  xl += ldlt.solve(resid);

  Vec x_new = xl.head(n_);
  Vec y_new = Vec::Zero(m_);
  for (int k = 0; k < ma; ++k) y_new[active[k]] = xl[n_ + k];

  // accept only on residual improvement
  Vec lu = l_.cwiseQuotient(e_scale_), uu = u_.cwiseQuotient(e_scale_);
  auto res = kkt_residuals(P_orig, q_orig, A_orig, lu, uu, x_new, y_new);
  auto res_old = kkt_residuals(P_orig, q_orig, A_orig, lu, uu, sol.x, sol.y);
  if (std::max(res.prim, res.dual) <= std::max(res_old.prim, res_old.dual)) {
    sol.x = x_new;
    sol.y = y_new;
    sol.z = A_orig * x_new;
    sol.prim_res = res.prim;
    sol.dual_res = res.dual;
  }
  return sol.status;
}

QpSolution solve_qp(const SpMat& P, const Vec& q, const SpMat& A, const Vec& l, const Vec& u,
                    const QpSettings& settings, const std::optional<WarmStart>& warm) {
  QpSolver solver(P, q, A, l, u, settings);
  return solver.solve(warm);
}

KktResiduals kkt_residuals(const SpMat& P, const Vec& q, const SpMat& A, const Vec& l,
                           const Vec& u, const Vec& x, const Vec& y) {
  if (P.rows() != x.size() || q.size() != x.size() || A.cols() != x.size() ||
      A.rows() != y.size() || l.size() != y.size() || u.size() != y.size())
    throw DimensionMismatch("kkt_residuals: inconsistent dimensions");
  KktResiduals r;
  Vec ax = A * x;
  for (int i = 0; i < ax.size(); ++i) {
    double viol = std::max({l[i] - ax[i], ax[i] - u[i], 0.0});
    r.prim = std::max(r.prim, viol);
    double comp = 0.0;
    if (y[i] > 0) comp = std::isfinite(u[i]) ? y[i] * std::fabs(u[i] - ax[i]) : y[i];
    else if (y[i] < 0) comp = std::isfinite(l[i]) ? -y[i] * std::fabs(ax[i] - l[i]) : -y[i];
    r.comp = std::max(r.comp, comp);
  }
  Vec stat = P * x + q + A.transpose() * y;  // P stored full symmetric
  r.dual = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

}  // namespace milo::qp
