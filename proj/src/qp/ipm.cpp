#include "milo/qp/ipm.hpp"

#include "milo/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace milo::qp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

IpmSolver::IpmSolver(SpMat P, Vec q, SpMat A, Vec l, Vec u, IpmSettings settings)
    : settings_(settings),
      n_(static_cast<int>(P.rows())),
      m_(static_cast<int>(A.rows())),
      P_(std::move(P)),
      A_(std::move(A)),
      q_(std::move(q)),
      l_(std::move(l)),
      u_(std::move(u)) {
  if (P_.cols() != n_ || q_.size() != n_ || A_.cols() != n_ || l_.size() != m_ || u_.size() != m_)
    throw DimensionMismatch("ipm: inconsistent problem dimensions");
  P_.makeCompressed();
  A_.makeCompressed();
  At_ = A_.transpose();
  build_kkt_pattern();
}

void IpmSolver::update_bounds(const Vec& l, const Vec& u) {
  if (l.size() != m_ || u.size() != m_) throw DimensionMismatch("ipm update_bounds");
  l_ = l;
  u_ = u;
}

void IpmSolver::update_q(const Vec& q) {
  if (q.size() != n_) throw DimensionMismatch("ipm update_q");
  q_ = q;
}

void IpmSolver::build_kkt_pattern() {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(P_.nonZeros() + 2 * A_.nonZeros() + n_ + m_);
  for (int j = 0; j < n_; ++j)
    for (SpMat::InnerIterator it(P_, j); it; ++it) trips.emplace_back(it.row(), j, it.value());
  for (int j = 0; j < n_; ++j) trips.emplace_back(j, j, settings_.reg_primal);
  for (int j = 0; j < n_; ++j)
    for (SpMat::InnerIterator it(A_, j); it; ++it) {
      trips.emplace_back(n_ + it.row(), j, it.value());
      trips.emplace_back(j, n_ + it.row(), it.value());
    }
  for (int i = 0; i < m_; ++i) trips.emplace_back(n_ + i, n_ + i, -1.0);
  kkt_.resize(n_ + m_, n_ + m_);
  kkt_.setFromTriplets(trips.begin(), trips.end());
  kkt_.makeCompressed();

  // writable slots of both diagonals
  d_slots_.assign(m_, nullptr);
  for (int col = n_; col < n_ + m_; ++col)
    for (SpMat::InnerIterator it(kkt_, col); it; ++it)
      if (it.row() == col) d_slots_[col - n_] = &it.valueRef();
  x_slots_.assign(n_, nullptr);
  x_diag_base_.resize(n_);
  for (int col = 0; col < n_; ++col)
    for (SpMat::InnerIterator it(kkt_, col); it; ++it)
      if (it.row() == col) {
        x_slots_[col] = &it.valueRef();
        x_diag_base_[col] = it.value();
      }

  ldlt_.analyzePattern(kkt_);
  analyzed_ = true;
}

QpSolution IpmSolver::solve() {
  const auto t0 = std::chrono::steady_clock::now();
  QpSolution sol;
  sol.status = QpStatus::MaxIter;

  std::vector<bool> has_l(m_), has_u(m_), is_eq(m_);
  for (int i = 0; i < m_; ++i) {
    has_l[i] = std::isfinite(l_[i]);
    has_u[i] = std::isfinite(u_[i]);
    is_eq[i] = has_l[i] && has_u[i] && u_[i] - l_[i] < 1e-12;
  }

  // iterates
  Vec x = Vec::Zero(n_);
  Vec y = Vec::Zero(m_);
  Vec s(m_);
  Vec ax = A_ * x;
  for (int i = 0; i < m_; ++i) {
    if (is_eq[i]) { s[i] = l_[i]; continue; }
    double lo = has_l[i] ? l_[i] : -1e30;
    double hi = has_u[i] ? u_[i] : 1e30;
    double margin = 1.0;
    if (has_l[i] && has_u[i]) margin = std::min(1.0, 0.4 * (hi - lo));
    s[i] = std::clamp(ax[i], lo + (has_l[i] ? margin : 0.0), hi - (has_u[i] ? margin : 0.0));
  }
  Vec zl = Vec::Zero(m_), zu = Vec::Zero(m_);
  for (int i = 0; i < m_; ++i) {
    if (is_eq[i]) continue;
    if (has_l[i]) zl[i] = 1.0;
    if (has_u[i]) zu[i] = 1.0;
    y[i] = zu[i] - zl[i];
  }

  int ncomp = 0;
  for (int i = 0; i < m_; ++i)
    if (!is_eq[i]) ncomp += (has_l[i] ? 1 : 0) + (has_u[i] ? 1 : 0);
  if (ncomp == 0) ncomp = 1;

  Vec rhs(n_ + m_), delta(n_ + m_);
  Vec dx_aff(n_), dy_aff(m_), ds_aff(m_), dzl_aff(m_), dzu_aff(m_);
  Vec dzl(m_), dzu(m_), ds(m_);

  double best_prim = kInf;
  int stall = 0;

  for (int iter = 1; iter <= settings_.max_iter; ++iter) {
    ax = A_ * x;
    Vec r_dual = P_ * x + q_ + At_ * y;
    Vec r_prim = ax - s;

    double mu = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (is_eq[i]) continue;
      if (has_l[i]) mu += (s[i] - l_[i]) * zl[i];
      if (has_u[i]) mu += (u_[i] - s[i]) * zu[i];
    }
    mu /= ncomp;

    double prim_inf = r_prim.size() ? r_prim.cwiseAbs().maxCoeff() : 0.0;
    double dual_inf = r_dual.size() ? r_dual.cwiseAbs().maxCoeff() : 0.0;
    sol.prim_res = prim_inf;
    sol.dual_res = dual_inf;
    sol.iters = iter - 1;

    double obj_scale = 1.0 + std::fabs(0.5 * x.dot(P_ * x) + q_.dot(x));
    double dual_scale = 1.0 + std::max(q_.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff());
    if (prim_inf <= settings_.eps && dual_inf <= 10.0 * settings_.eps * dual_scale &&
        mu <= settings_.eps * obj_scale) {
      sol.status = QpStatus::Solved;
      break;
    }

    // divergence heuristics
    double zmax = std::max(zl.size() ? zl.maxCoeff() : 0.0, zu.size() ? zu.maxCoeff() : 0.0);
    if (prim_inf < best_prim * 0.95) { best_prim = prim_inf; stall = 0; }
    else ++stall;
    if (zmax > settings_.dual_blowup && prim_inf > 1e3 * settings_.eps) {
      sol.status = QpStatus::PrimalInfeasible;
      break;
    }
    if (stall > 25 && prim_inf > 1e4 * settings_.eps && mu < settings_.eps) {
      sol.status = QpStatus::PrimalInfeasible;
      break;
    }

    // D diagonal and the constant part C of the dual-slack elimination
    Vec W(m_), C(m_);
    for (int i = 0; i < m_; ++i) {
      if (is_eq[i]) {
        *d_slots_[i] = -settings_.reg_dual;
        W[i] = 0.0;
        C[i] = 0.0;
        continue;
      }
      double w = 0.0;
      if (has_l[i]) w += zl[i] / std::max(s[i] - l_[i], 1e-14);
      if (has_u[i]) w += zu[i] / std::max(u_[i] - s[i], 1e-14);
      w = std::max(w, 1e-12);
      W[i] = w;
      *d_slots_[i] = -1.0 / w;
      C[i] = 0.0;  // filled per pass below
    }

    // escalating regularization on pivot failure
    double extra_reg = 0.0;
    for (int attempt = 0;; ++attempt) {
      ldlt_.factorize(kkt_);
      if (ldlt_.info() == Eigen::Success) break;
      if (attempt >= 4) throw NumericalBreakdown("ipm: KKT factorization failed");
      extra_reg = extra_reg == 0.0 ? 1e-7 : extra_reg * 100.0;
      for (int j = 0; j < n_; ++j) *x_slots_[j] = x_diag_base_[j] + extra_reg;
      for (int i = 0; i < m_; ++i) *d_slots_[i] -= extra_reg;
    }
    if (extra_reg != 0.0)
      for (int j = 0; j < n_; ++j) *x_slots_[j] = x_diag_base_[j];

    auto solve_step = [&](double sigma_mu, const Vec* corr_l, const Vec* corr_u, Vec& dx_out,
                          Vec& dy_out, Vec& ds_out, Vec& dzl_out, Vec& dzu_out) {
      for (int i = 0; i < m_; ++i) {
        if (is_eq[i]) { C[i] = 0.0; continue; }
        double c = -y[i];
        if (has_u[i]) {
          double h = std::max(u_[i] - s[i], 1e-14);
          double cu = corr_u ? (*corr_u)[i] : 0.0;
          c += zu[i] + (sigma_mu - h * zu[i] - cu) / h;
        }
        if (has_l[i]) {
          double g = std::max(s[i] - l_[i], 1e-14);
          double cl = corr_l ? (*corr_l)[i] : 0.0;
          c -= zl[i] + (sigma_mu - g * zl[i] - cl) / g;
        }
        C[i] = c;
      }
      rhs.head(n_) = -r_dual;
      for (int i = 0; i < m_; ++i)
        rhs[n_ + i] = is_eq[i] ? -r_prim[i] : -r_prim[i] - C[i] / W[i];
      delta = ldlt_.solve(rhs);
      dx_out = delta.head(n_);
      dy_out = delta.tail(m_);
      for (int i = 0; i < m_; ++i) {
        if (is_eq[i]) { ds_out[i] = 0.0; dzl_out[i] = 0.0; dzu_out[i] = 0.0; continue; }
        ds_out[i] = (dy_out[i] - C[i]) / W[i];
        if (has_l[i]) {
          double g = std::max(s[i] - l_[i], 1e-14);
          double cl = corr_l ? (*corr_l)[i] : 0.0;
          dzl_out[i] = (sigma_mu - g * zl[i] - cl - zl[i] * ds_out[i]) / g;
        } else dzl_out[i] = 0.0;
        if (has_u[i]) {
          double h = std::max(u_[i] - s[i], 1e-14);
          double cu = corr_u ? (*corr_u)[i] : 0.0;
          dzu_out[i] = (sigma_mu - h * zu[i] - cu + zu[i] * ds_out[i]) / h;
        } else dzu_out[i] = 0.0;
      }
    };

    auto step_lengths = [&](const Vec& dsv, const Vec& dzlv, const Vec& dzuv) {
      double ap = 1.0, ad = 1.0;
      for (int i = 0; i < m_; ++i) {
        if (is_eq[i]) continue;
        if (has_l[i]) {
          double g = s[i] - l_[i];
          if (dsv[i] < 0) ap = std::min(ap, -g / dsv[i]);
          if (dzlv[i] < 0) ad = std::min(ad, -zl[i] / dzlv[i]);
        }
        if (has_u[i]) {
          double h = u_[i] - s[i];
          if (dsv[i] > 0) ap = std::min(ap, h / dsv[i]);
          if (dzuv[i] < 0) ad = std::min(ad, -zu[i] / dzuv[i]);
        }
      }
      return std::pair{ap, ad};
    };

    // affine predictor
    solve_step(0.0, nullptr, nullptr, dx_aff, dy_aff, ds_aff, dzl_aff, dzu_aff);
    auto [ap_aff, ad_aff] = step_lengths(ds_aff, dzl_aff, dzu_aff);

    double mu_aff = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (is_eq[i]) continue;
      if (has_l[i])
        mu_aff += (s[i] - l_[i] + ap_aff * ds_aff[i]) * (zl[i] + ad_aff * dzl_aff[i]);
      if (has_u[i])
        mu_aff += (u_[i] - s[i] - ap_aff * ds_aff[i]) * (zu[i] + ad_aff * dzu_aff[i]);
    }
    mu_aff /= ncomp;
    double sigma = mu > 1e-300 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.1;

    // corrector
    Vec corr_l(m_), corr_u(m_);
    for (int i = 0; i < m_; ++i) {
      corr_l[i] = has_l[i] && !is_eq[i] ? ds_aff[i] * dzl_aff[i] : 0.0;
      corr_u[i] = has_u[i] && !is_eq[i] ? -ds_aff[i] * dzu_aff[i] : 0.0;
    }
    Vec dx(n_), dy(m_);
    solve_step(sigma * mu, &corr_l, &corr_u, dx, dy, ds, dzl, dzu);
    auto [ap, ad] = step_lengths(ds, dzl, dzu);
    ap = std::min(1.0, settings_.step_damp * ap);
    ad = std::min(1.0, settings_.step_damp * ad);

    x += ap * dx;
    s += ap * ds;
    y += ad * dy;
    zl += ad * dzl;
    zu += ad * dzu;
    for (int i = 0; i < m_; ++i) {
      if (is_eq[i]) { s[i] = l_[i]; continue; }
      if (has_l[i]) zl[i] = std::max(zl[i], 1e-14);
      if (has_u[i]) zu[i] = std::max(zu[i], 1e-14);
    }
  }

  // loose acceptance at the iteration cap: primal converged, dual within
  // tolerance-grade accuracy
  if (sol.status == QpStatus::MaxIter) {
    double obj_scale = 1.0 + std::fabs(0.5 * x.dot(P_ * x) + q_.dot(x));
    if (sol.prim_res <= 100.0 * settings_.eps && sol.dual_res <= 1e-4 * obj_scale)
      sol.status = QpStatus::Solved;
  }

  sol.x = x;
  sol.y = y;
  sol.z = A_ * x;
  sol.objective = 0.5 * x.dot(P_ * x) + q_.dot(x);
  sol.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

QpSolution solve_qp_ipm(const SpMat& P, const Vec& q, const SpMat& A, const Vec& l, const Vec& u,
                        const IpmSettings& settings) {
  IpmSolver solver(P, q, A, l, u, settings);
  return solver.solve();
}

}  // namespace milo::qp

