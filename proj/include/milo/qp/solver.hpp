#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace milo::qp {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct QpSettings {
  double rho = 0.1;          // penalty parameter
  double sigma = 1e-6;       // proximal regularization
  double alpha = 1.6;        // relaxation, in (0,2)
  double eps_abs = 1e-4;
  double eps_rel = 1e-4;
  int max_iter = 4000;
  bool polish = true;
  bool scaling = true;       // Ruiz equilibration
  int scaling_iters = 10;
  double eps_pinf = 1e-5;
  double eps_dinf = 1e-5;
  int check_interval = 25;   // residual / certificate cadence
  bool adaptive_rho = true;  // deterministic, iteration-count based
  // rows that take the equality-grade rho from the start (used for rows that
  // later become equalities through bound updates, e.g. branched binaries)
  std::vector<int> rho_boost_rows;
  std::string dump_csv;      // per-iteration residual dump when non-empty

  void validate() const;  // throws std::invalid_argument
};

enum class QpStatus { Solved, MaxIter, PrimalInfeasible, DualInfeasible };

const char* to_string(QpStatus s);

struct QpSolution {
  Vec x;              // primal
  Vec y;              // row duals (y >= 0 at upper-active, <= 0 at lower-active)
  Vec z;              // row activities A*x after projection
  QpStatus status = QpStatus::MaxIter;
  double prim_res = 0.0;
  double dual_res = 0.0;
  int iters = 0;
  double solve_time = 0.0;  // seconds
  double objective = 0.0;   // 0.5 x'Px + q'x
};

struct WarmStart {
  Vec x;
  Vec y;
};

// Operator-splitting solver for
//   min 0.5 x'Px + q'x   s.t.  l <= Ax <= u.
// The KKT factorization depends only on (P, A, rho, sigma); bounds and the
// linear cost can be updated between solves without refactorizing, which is
// what the branch-and-bound node loop relies on.
class QpSolver {
 public:
  QpSolver(SpMat P, Vec q, SpMat A, Vec l, Vec u, QpSettings settings = {});

  void update_bounds(const Vec& l, const Vec& u);
  void update_q(const Vec& q);

  QpSolution solve(const std::optional<WarmStart>& warm = std::nullopt);

  int num_vars() const { return n_; }
  int num_rows() const { return m_; }

 private:
  struct Csr {
    std::vector<std::int32_t> row_ptr, col_idx;
    std::vector<double> vals;
    std::size_t rows = 0;
    void from(const SpMat& M);
    void multiply(const double* x, double* out) const;
  };

  void equilibrate();
  void factorize();
  void compute_rho_vec();
  QpStatus polish(QpSolution& sol) const;

  QpSettings settings_;
  int n_ = 0, m_ = 0;

  // scaled problem data
  SpMat P_, A_;
  Vec q_, l_, u_;
  // scaling: x = D x_scaled, y = c^-1 E y_scaled
  Vec d_scale_, e_scale_;
  double c_scale_ = 1.0;

  Csr P_csr_, A_csr_, At_csr_;
  Vec rho_vec_, rho_inv_vec_;
  double rho_bar_ = 0.1;  // current global rho (before per-row eq boost)

  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool factorized_ = false;
};

// One-shot convenience wrapper.
QpSolution solve_qp(const SpMat& P, const Vec& q, const SpMat& A, const Vec& l, const Vec& u,
                    const QpSettings& settings = {},
                    const std::optional<WarmStart>& warm = std::nullopt);

// Unscaled KKT residual infinity norms: primal violation of [l,u], stationarity
// Px + q + A'y, and complementarity mismatch.
struct KktResiduals {
  double prim = 0.0;
  double dual = 0.0;
  double comp = 0.0;
};
KktResiduals kkt_residuals(const SpMat& P, const Vec& q, const SpMat& A, const Vec& l,
                           const Vec& u, const Vec& x, const Vec& y);

}  // namespace milo::qp
