#include "milo/bnb/bnb.hpp"

#include "milo/errors.hpp"
#include "milo/relax/model_builder.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace milo;
using namespace milo::bnb;
using namespace milo::relax;

namespace {

// Synthetic MIQP with a known feasible point: continuous vars in [-5,5],
// binaries in the objective and rows.
MixedIntegerQP random_miqp(std::mt19937_64& rng, int ncont, int nbin, int nrows) {
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_real_distribution<double> xval(-2.0, 2.0);
  std::uniform_int_distribution<int> bval(0, 1);
  std::uniform_real_distribution<double> slack(0.3, 2.0);

  ModelBuilder b;
  std::vector<int> cont, bin;
  for (int j = 0; j < ncont; ++j) cont.push_back(b.add_var("x" + std::to_string(j), -5.0, 5.0));
  for (int j = 0; j < nbin; ++j)
    bin.push_back(b.add_binary("b" + std::to_string(j),
                               {static_cast<int>(BinCategory::Other), 0, j, 0, 0}));

  std::vector<double> xbar(ncont + nbin);
  for (int j = 0; j < ncont; ++j) xbar[cont[j]] = xval(rng);
  for (int j = 0; j < nbin; ++j) xbar[bin[j]] = bval(rng);

  // strictly convex in the continuous block, binaries pull the optimum around
  for (int j = 0; j < ncont; ++j) {
    ModelBuilder::Terms t{{cont[j], 1.0}};
    if (nbin > 0) t.emplace_back(bin[j % nbin], coef(rng));
    b.add_cost_sq(t, xval(rng), 0.5 + std::fabs(coef(rng)));
  }
  for (int j = 0; j < nbin; ++j) b.add_cost_sq({{bin[j], 1.0}}, xval(rng), 0.3);

  for (int r = 0; r < nrows; ++r) {
    ModelBuilder::Terms t;
    double act = 0.0;
    int nt = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < nt; ++k) {
      int var = static_cast<int>(rng() % (ncont + nbin));
      double cf = coef(rng);
      t.emplace_back(var, cf);
      act += cf * xbar[var];
    }
    double s = slack(rng);
    b.add_row(std::move(t), act - s, act + s);
  }
  return b.finish();
}

qp::QpSettings tight_qp() {
  qp::QpSettings st;
  st.eps_abs = 1e-7;
  st.eps_rel = 1e-7;
  st.max_iter = 20000;
  return st;
}

}  // namespace

TEST_CASE("gap formula") {
  CHECK(gap_ratio(100.0, 85.0) == doctest::Approx(0.15));
  CHECK(gap_ratio(0.0, 0.0) == 0.0);
  CHECK(gap_ratio(-10.0, -12.0) == doctest::Approx(0.2));
}

TEST_CASE("two-binary toy agrees with enumeration") {
  std::mt19937_64 rng(1);
  auto m = random_miqp(rng, 3, 2, 4);
  auto oracle = enumerate_miqp(m, tight_qp());
  REQUIRE(oracle.status == MiqpStatus::Optimal);

  BnbOptions opts;
  opts.qp = tight_qp();
  auto res = solve_miqp(m, opts);
  REQUIRE(res.status == MiqpStatus::Optimal);
  CHECK(res.z_p == doctest::Approx(oracle.z_p).epsilon(1e-6));
  CHECK(std::fabs(res.gap) <= 1e-9);
}

TEST_CASE("solve_miqp matches enumerate_miqp on random tiny instances") {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int t = 0; t < 25; ++t) {
    int ncont = 2 + static_cast<int>(rng() % 3);
    int nbin = 2 + static_cast<int>(rng() % 4);
    auto m = random_miqp(rng, ncont, nbin, 3 + static_cast<int>(rng() % 4));
    auto oracle = enumerate_miqp(m, tight_qp());
    if (oracle.status != MiqpStatus::Optimal) continue;

    BnbOptions opts;
    opts.qp = tight_qp();
    auto res = solve_miqp(m, opts);
    REQUIRE(res.status == MiqpStatus::Optimal);
    CHECK(res.z_p == doctest::Approx(oracle.z_p).epsilon(1e-5));
    CHECK(res.z_d <= res.z_p + 1e-9);
    // root relaxation bounds the optimum from below; any fixed assignment
    // bounds it from above
    CHECK(res.z_d <= oracle.z_p + 1e-6);
    ++checked;
  }
  CHECK(checked >= 15);
}

TEST_CASE("warm start with the known optimum seeds the incumbent at node 0") {
  std::mt19937_64 rng(21);
  auto m = random_miqp(rng, 3, 4, 5);
  auto oracle = enumerate_miqp(m, tight_qp());
  REQUIRE(oracle.status == MiqpStatus::Optimal);

  BnbOptions opts;
  opts.qp = tight_qp();
  opts.warm = oracle.incumbent;
  auto res = solve_miqp(m, opts);
  REQUIRE(res.status == MiqpStatus::Optimal);
  CHECK(res.first_incumbent_node == 0);
  CHECK(res.z_p == doctest::Approx(oracle.z_p).epsilon(1e-6));
}

TEST_CASE("a partial seed matching the optimum still returns the optimum") {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 10; ++t) {
    auto m = random_miqp(rng, 3, 4, 4);
    auto oracle = enumerate_miqp(m, tight_qp());
    if (oracle.status != MiqpStatus::Optimal) continue;

    IntegerAssignment partial = *oracle.incumbent;
    partial.value[1] = -1;  // leave some bits free
    partial.value[3] = -1;

    BnbOptions opts;
    opts.qp = tight_qp();
    opts.warm = partial;
    auto res = solve_miqp(m, opts);
    REQUIRE(res.status == MiqpStatus::Optimal);
    CHECK(res.z_p == doctest::Approx(oracle.z_p).epsilon(1e-5));
  }
}

TEST_CASE("contradictory binary rows give Infeasible") {
  ModelBuilder b;
  int x = b.add_var("x", -1.0, 1.0);
  int b0 = b.add_binary("b0", {static_cast<int>(BinCategory::Other), 0, 0, 0, 0});
  b.add_cost_sq({{x, 1.0}}, 0.5, 1.0);
  b.add_row({{b0, 1.0}}, 0.7, 1.0);
  b.add_row({{b0, 1.0}}, 0.0, 0.3);
  auto m = b.finish();

  CHECK(solve_miqp(m, {}).status == MiqpStatus::Infeasible);
  CHECK(enumerate_miqp(m).status == MiqpStatus::Infeasible);
}

TEST_CASE("a single feasible assignment is found by both paths") {
  ModelBuilder b;
  int x = b.add_var("x", -2.0, 2.0);
  int b0 = b.add_binary("b0", {static_cast<int>(BinCategory::Other), 0, 0, 0, 0});
  int b1 = b.add_binary("b1", {static_cast<int>(BinCategory::Other), 0, 1, 0, 0});
  b.add_cost_sq({{x, 1.0}, {b0, -1.0}}, 0.0, 1.0);
  b.add_row({{b0, 1.0}}, 1.0, 1.0);
  b.add_row({{b1, 1.0}}, 0.0, 0.0);
  auto m = b.finish();

  auto viaEnum = enumerate_miqp(m, tight_qp());
  REQUIRE(viaEnum.status == MiqpStatus::Optimal);
  CHECK(viaEnum.incumbent->value[0] == 1);
  CHECK(viaEnum.incumbent->value[1] == 0);

  auto viaBnb = solve_miqp(m, {});
  REQUIRE(viaBnb.status == MiqpStatus::Optimal);
  CHECK(*viaBnb.incumbent == *viaEnum.incumbent);
}

TEST_CASE("enumerate_miqp rejects more than 16 binaries") {
  ModelBuilder b;
  b.add_var("x", 0, 1);
  for (int j = 0; j < 17; ++j)
    b.add_binary("b" + std::to_string(j), {static_cast<int>(BinCategory::Other), 0, j, 0, 0});
  auto m = b.finish();
  CHECK_THROWS_AS((void)enumerate_miqp(m), TooManyBinaries);
}

TEST_CASE("solver is deterministic across runs") {
  std::mt19937_64 rng(55);
  auto m = random_miqp(rng, 4, 5, 6);
  BnbOptions opts;
  opts.qp = tight_qp();
  auto a = solve_miqp(m, opts);
  auto b2 = solve_miqp(m, opts);
  CHECK(a.nodes == b2.nodes);
  CHECK(a.z_p == b2.z_p);
  CHECK(a.z_d == b2.z_d);
  CHECK(a.first_incumbent_node == b2.first_incumbent_node);
  if (a.incumbent && b2.incumbent) CHECK(*a.incumbent == *b2.incumbent);
}

TEST_CASE("gait seeds") {
  auto trot = gait_seed(2, GaitStyle::Trot);
  CHECK(trot.contacts[0] == std::array<int, 4>{1, 0, 0, 1});
  CHECK(trot.contacts[1] == std::array<int, 4>{0, 1, 1, 0});

  auto all = gait_seed(3, GaitStyle::AllStance);
  for (const auto& c : all.contacts) CHECK(c == std::array<int, 4>{1, 1, 1, 1});

  auto longer = gait_seed(9, GaitStyle::Trot);
  for (const auto& c : longer.contacts) CHECK(c[0] + c[1] + c[2] + c[3] == 2);

  CHECK_THROWS_AS((void)gait_seed(1, GaitStyle::Trot), std::invalid_argument);
}

TEST_CASE("invalid warm assignment size is rejected") {
  std::mt19937_64 rng(60);
  auto m = random_miqp(rng, 2, 3, 2);
  IntegerAssignment bad;
  bad.value = {1};  // wrong length
  BnbOptions opts;
  opts.warm = bad;
  CHECK_THROWS_AS((void)solve_miqp(m, opts), InvalidWarmStart);
}
