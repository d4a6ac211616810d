#include "milo/qp/solver.hpp"

#include "milo/errors.hpp"
#include "oracle_qp.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace milo;
using namespace milo::qp;

namespace {

SpMat sparse_of(const Eigen::MatrixXd& M) {
  SpMat S = M.sparseView(1e-300, 1.0);
  S.makeCompressed();
  return S;
}

struct RandomQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd l, u;
};

RandomQp make_random_qp(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::MatrixXd L(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) L(i, j) = d(rng);
  RandomQp qp;
  qp.P = L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  qp.q = Eigen::VectorXd::NullaryExpr(n, [&] { return d(rng); });
  qp.A.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) qp.A(i, j) = d(rng);
  Eigen::VectorXd xref = Eigen::VectorXd::NullaryExpr(n, [&] { return d(rng); });
  Eigen::VectorXd mid = qp.A * xref;
  qp.l.resize(m);
  qp.u.resize(m);
  std::uniform_real_distribution<double> w(0.05, 1.5);
  for (int i = 0; i < m; ++i) {
    qp.l[i] = mid[i] - w(rng);
    qp.u[i] = mid[i] + w(rng);
  }
  return qp;
}

}  // namespace

TEST_CASE("scalar unconstrained minimum") {
  SpMat P(1, 1);
  P.insert(0, 0) = 2.0;
  Vec q(1);
  q << -2.0;  // (x-1)^2 up to a constant
  SpMat A(0, 1);
  Vec l(0), u(0);
  auto sol = solve_qp(P, q, A, l, u);
  CHECK(sol.status == QpStatus::Solved);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bound-constrained scalar: KKT by hand") {
  SpMat P(1, 1);
  P.insert(0, 0) = 2.0;
  Vec q = Vec::Zero(1);
  SpMat A(1, 1);
  A.insert(0, 0) = 1.0;
  Vec l(1), u(1);
  l << 2.0;
  u << std::numeric_limits<double>::infinity();
  auto sol = solve_qp(P, q, A, l, u);
  CHECK(sol.status == QpStatus::Solved);
  CHECK(sol.x[0] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(std::fabs(sol.y[0]) == doctest::Approx(4.0).epsilon(1e-3));

  auto res = kkt_residuals(P, q, A, l, u, sol.x, sol.y);
  CHECK(res.prim <= 1e-4);
  CHECK(res.dual <= 1e-4);
}

TEST_CASE("kkt_residuals at an exact KKT point and on perturbation") {
  SpMat P(1, 1);
  P.insert(0, 0) = 2.0;
  Vec q = Vec::Zero(1);
  SpMat A(1, 1);
  A.insert(0, 0) = 1.0;
  Vec l(1), u(1);
  l << 2.0;
  u << std::numeric_limits<double>::infinity();

  Vec x(1), y(1);
  x << 2.0;
  y << -4.0;  // lower-active multiplier
  auto exact = kkt_residuals(P, q, A, l, u, x, y);
  CHECK(exact.prim <= 1e-12);
  CHECK(exact.dual <= 1e-12);
  CHECK(exact.comp <= 1e-12);

  Vec xp(1);
  xp << 2.0 + 1e-3;
  auto pert = kkt_residuals(P, q, A, l, u, xp, y);
  CHECK(pert.dual == doctest::Approx(2.0 * 1e-3).epsilon(1e-9));  // scales with ||P||
}

TEST_CASE("kkt_residuals on the empty problem") {
  SpMat P(1, 1);
  Vec q = Vec::Zero(1);
  SpMat A(0, 1);
  Vec l(0), u(0);
  Vec x = Vec::Zero(1), y(0);
  auto r = kkt_residuals(P, q, A, l, u, x, y);
  CHECK(r.prim == 0.0);
  CHECK(r.dual == 0.0);
  CHECK(r.comp == 0.0);
}

TEST_CASE("random QPs agree with the active-set enumeration oracle") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> nd(2, 12);
  std::uniform_int_distribution<int> md(1, 7);
  int solved = 0;
  for (int t = 0; t < 50; ++t) {
    auto qp = make_random_qp(rng, nd(rng), md(rng));
    auto oracle = testing::oracle_solve_qp(qp.P, qp.q, qp.A, qp.l, qp.u);
    REQUIRE(oracle.found);

    QpSettings st;
    st.eps_abs = 1e-6;
    st.eps_rel = 1e-6;
    st.max_iter = 20000;
    auto sol = solve_qp(sparse_of(qp.P), qp.q, sparse_of(qp.A), qp.l, qp.u, st);
    REQUIRE(sol.status == QpStatus::Solved);
    ++solved;

    auto res = kkt_residuals(sparse_of(qp.P), qp.q, sparse_of(qp.A), qp.l, qp.u, sol.x, sol.y);
    CHECK(res.prim <= 1e-4);
    CHECK(res.dual <= 1e-4);
    CHECK(sol.objective == doctest::Approx(oracle.objective).epsilon(1e-4));
    CHECK(sol.objective <= oracle.objective + 1e-4);
  }
  CHECK(solved == 50);
}

TEST_CASE("warm start with the exact solution converges in <= 5 iterations") {
  std::mt19937_64 rng(77);
  auto qp = make_random_qp(rng, 8, 5);
  QpSettings st;
  st.eps_abs = 1e-6;
  st.eps_rel = 1e-6;
  st.max_iter = 20000;
  auto cold = solve_qp(sparse_of(qp.P), qp.q, sparse_of(qp.A), qp.l, qp.u, st);
  REQUIRE(cold.status == QpStatus::Solved);

  WarmStart warm{cold.x, cold.y};
  auto hot = solve_qp(sparse_of(qp.P), qp.q, sparse_of(qp.A), qp.l, qp.u, st, warm);
  CHECK(hot.status == QpStatus::Solved);
  CHECK(hot.iters <= 5);
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(123);
  auto qp = make_random_qp(rng, 10, 6);
  auto a = solve_qp(sparse_of(qp.P), qp.q, sparse_of(qp.A), qp.l, qp.u);
  auto b = solve_qp(sparse_of(qp.P), qp.q, sparse_of(qp.A), qp.l, qp.u);
  REQUIRE(a.x.size() == b.x.size());
  for (int i = 0; i < a.x.size(); ++i) CHECK(a.x[i] == b.x[i]);
  CHECK(a.iters == b.iters);
}

TEST_CASE("detects primal infeasibility") {
  SpMat P(1, 1);
  P.insert(0, 0) = 2.0;
  Vec q = Vec::Zero(1);
  SpMat A(2, 1);
  A.insert(0, 0) = 1.0;
  A.insert(1, 0) = 1.0;
  Vec l(2), u(2);
  l << 2.0, -std::numeric_limits<double>::infinity();
  u << std::numeric_limits<double>::infinity(), 1.0;
  auto sol = solve_qp(P, q, A, l, u);
  CHECK(sol.status == QpStatus::PrimalInfeasible);
}

TEST_CASE("detects dual infeasibility (unbounded direction)") {
  SpMat P(1, 1);  // zero quadratic
  Vec q(1);
  q << -1.0;
  SpMat A(0, 1);
  Vec l(0), u(0);
  auto sol = solve_qp(P, q, A, l, u);
  CHECK(sol.status == QpStatus::DualInfeasible);
}

TEST_CASE("bound updates reuse the factorization") {
  std::mt19937_64 rng(55);
  auto qp = make_random_qp(rng, 8, 4);
  QpSolver solver(sparse_of(qp.P), qp.q, sparse_of(qp.A), qp.l, qp.u);
  auto first = solver.solve();
  REQUIRE(first.status == QpStatus::Solved);

  Vec l2 = qp.l.array() - 0.1;
  Vec u2 = qp.u.array() + 0.1;
  solver.update_bounds(l2, u2);
  auto second = solver.solve(WarmStart{first.x, first.y});
  CHECK(second.status == QpStatus::Solved);
  // relaxed feasible set can only improve the optimum
  CHECK(second.objective <= first.objective + 1e-6);
}
