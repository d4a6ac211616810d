#include "milo/relax/builder.hpp"

#include "milo/errors.hpp"
#include "milo/srb/model.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>

namespace milo::relax {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const char* kAxis[3] = {"x", "y", "z"};

std::string vn(const std::string& base, int n, int axis) {
  return base + "[" + std::to_string(n) + "]." + kAxis[axis];
}
std::string vn(const std::string& base, int n, int toe, int axis) {
  return base + "[" + std::to_string(n) + "][" + std::to_string(toe) + "]." + kAxis[axis];
}

int oh_bins(int regions) { return regions > 1 ? regions : 0; }
int cd_bits(int regions) {
  if (regions <= 1) return 0;
  int b = 0;
  while ((1 << b) < regions) ++b;
  return b;
}

struct Builder {
  const srb::ProblemInstance& inst;
  const SegmentationSpec& seg;
  ModelBuilder b;
  int N;
  int S;
  bool force_onehot = std::getenv("MILO_ONEHOT") != nullptr;  // experiment knob

  // variable ids
  std::vector<std::array<int, 3>> p, v, th, thd, om, acc, alp;
  std::vector<std::array<std::array<int, 3>, 4>> pw, dr, f;
  std::vector<std::array<int, 4>> c;
  std::vector<std::vector<std::array<int, 4>>> z;  // [n][s][toe]
  std::vector<TrigVars> trig;                      // [n][axis] flattened below
  std::vector<std::array<TrigVars, 3>> trig_nv;

  std::map<int, SelectorGroup> selector_cache;

  Builder(const srb::ProblemInstance& i, const SegmentationSpec& s)
      : inst(i), seg(s), N(i.horizon_n), S(static_cast<int>(i.regions.size())) {}

  SelectorGroup& selector(int var, VarClass cls, BinKey base) {
    auto it = selector_cache.find(var);
    if (it != selector_cache.end()) return it->second;
    const ClassSpec& cs = seg.at(cls);
    SelectorGroup::Kind kind = (!force_onehot && (cls == VarClass::EulerRate ||
                                cls == VarClass::AngularVelocity || cls == VarClass::Force))
                                   ? SelectorGroup::Kind::Coded
                                   : SelectorGroup::Kind::OneHot;
    SelectorGroup g = make_selector(b, var, cs.range, cs.regions, kind,
                                    "sel." + b.names().name(var), base);
    return selector_cache.emplace(var, std::move(g)).first->second;
  }

  using ViewFn = std::function<FactorView()>;

  // product z = x*y; defers view construction (and therefore selector
  // creation) until both factors are known to be free
  void product(int x, const ViewFn& vx, int y, const ViewFn& vy, int zv) {
    if (b.is_fixed(x) || b.is_fixed(y)) {
      FactorView fx = view_full(x, {b.lb(x), b.ub(x)});
      FactorView fy = view_full(y, {b.lb(y), b.ub(y)});
      if (b.is_fixed(x) && b.fixed_value(x) == 0.0) { b.fix(zv, 0.0); return; }
      if (b.is_fixed(y) && b.fixed_value(y) == 0.0) { b.fix(zv, 0.0); return; }
      emit_product(b, fx, fy, zv);
      return;
    }
    emit_product(b, vx(), vy(), zv);
  }

  void build_variables();
  void fix_knot0();
  void apply_planar_pins();
  void build_trig_and_products();
  void build_dynamics_rows();
  void build_contact_rows();
  void build_workspace_rows();
  void build_objective();

  // trig/product/rot/erate/gyro/moment/workspace aux ids
  std::vector<std::array<int, 10>> prod2;                  // [n][which]
  std::vector<std::array<int, 4>> prod3;                   // [n][T1..T4]
  std::vector<std::map<std::pair<int, int>, int>> rotv;    // [n][(row,col)] composite entries
  std::vector<std::array<int, 5>> erate;                   // [n][E1..E5]
  std::vector<std::map<std::pair<int, int>, int>> gyro;    // [n][(a,b)] a<=b
  std::vector<std::array<std::map<std::pair<int, int>, int>, 4>> mom;  // [n][toe][(a,b)]
  std::vector<std::array<std::array<std::array<int, 3>, 3>, 4>> wsv;   // [n][toe][j][k]

  // rotation entry as (column, sign); populated during trig construction
  struct EntryRef {
    int var = -1;
    double sign = 1.0;
  };
  std::vector<std::array<std::array<EntryRef, 3>, 3>> rentry;  // [n][row j][col k]

  Eigen::Vector3d omega0;
};

void Builder::build_variables() {
  p.resize(N); v.resize(N); th.resize(N); thd.resize(N); om.resize(N);
  acc.resize(std::max(N - 1, 0)); alp.resize(std::max(N - 1, 0));
  pw.resize(N); dr.resize(N); f.resize(std::max(N - 1, 0));
  c.resize(N); z.resize(N);

  const Interval ang = seg.angle.range;
  const Interval rate = seg.euler_rate.range;
  const Interval omr = seg.angular_velocity.range;
  const Interval toer = seg.toe_position.range;
  const Interval fr = seg.force.range;

  for (int n = 0; n < N; ++n)
    for (int k = 0; k < 3; ++k) {
      p[n][k] = b.add_var(vn("p", n, k));
      v[n][k] = b.add_var(vn("v", n, k));
      th[n][k] = b.add_var(vn("th", n, k), ang.lo, ang.hi);
      thd[n][k] = b.add_var(vn("thd", n, k), rate.lo, rate.hi);
      om[n][k] = b.add_var(vn("om", n, k), omr.lo, omr.hi);
    }
  for (int n = 0; n + 1 < N; ++n)
    for (int k = 0; k < 3; ++k) {
      acc[n][k] = b.add_var(vn("a", n, k));
      alp[n][k] = b.add_var(vn("alp", n, k));
    }
  for (int n = 0; n < N; ++n)
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 3; ++k) {
        pw[n][i][k] = b.add_var(vn("pw", n, i, k));
        dr[n][i][k] = b.add_var(vn("dr", n, i, k), n == 0 ? -kInf : toer.lo,
                                n == 0 ? kInf : toer.hi);
      }
  for (int n = 0; n + 1 < N; ++n)
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 3; ++k) {
        double fb = std::min(inst.params.f_max, fr.hi);
        f[n][i][k] = b.add_var(vn("f", n, i, k), -fb, fb);
      }

  for (int n = 0; n < N; ++n) {
    for (int i = 0; i < 4; ++i) {
      std::string name = "c[" + std::to_string(n) + "][" + std::to_string(i) + "]";
      if (n == 0) c[n][i] = b.add_fixed(name, inst.feet0.c[i]);
      else c[n][i] = b.add_binary(name, {static_cast<int>(BinCategory::Contact), n, i, 0, 0});
    }
    z[n].resize(S);
    for (int s = 0; s < S; ++s)
      for (int i = 0; i < 4; ++i) {
        std::string name = "z[" + std::to_string(n) + "][" + std::to_string(i) + "][" +
                           std::to_string(s) + "]";
        if (n == 0) {
          // first containing region claims the stance toe
          int val = 0;
          if (inst.feet0.c[i]) {
            bool claimed = false;
            for (int t = 0; t < s && !claimed; ++t)
              claimed = inst.regions[t].contains(inst.feet0.p_w[i], 1e-7);
            if (!claimed && inst.regions[s].contains(inst.feet0.p_w[i], 1e-7)) val = 1;
          }
          z[n][s][i] = b.add_fixed(name, val);
        } else {
          z[n][s][i] =
              b.add_binary(name, {static_cast<int>(BinCategory::Region), n, i, s, 0});
        }
      }
  }
}

void Builder::fix_knot0() {
  const auto& x0 = inst.x0;
  const auto& feet0 = inst.feet0;

  // segmentation-range feasibility of the initial state
  for (int k = 0; k < 3; ++k) {
    if (!seg.angle.range.contains(x0.theta[k], 1e-9))
      throw InfeasibleBounds("x0 angle outside segmentation range");
    if (!seg.euler_rate.range.contains(x0.theta_dot[k], 1e-9))
      throw InfeasibleBounds("x0 euler rate outside segmentation range");
  }
  omega0 = srb::euler_rate_map(x0.theta) * x0.theta_dot;
  for (int k = 0; k < 3; ++k)
    if (!seg.angular_velocity.range.contains(omega0[k], 1e-9))
      throw InfeasibleBounds("x0 angular velocity outside segmentation range");

  for (int k = 0; k < 3; ++k) {
    b.fix(p[0][k], x0.p[k]);
    b.fix(v[0][k], x0.v[k]);
    b.fix(th[0][k], x0.theta[k]);
    b.fix(thd[0][k], x0.theta_dot[k]);
    b.fix(om[0][k], omega0[k]);
  }
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector3d arm = inst.params.nominal_arm(i);
    for (int k = 0; k < 3; ++k) {
      b.fix(pw[0][i][k], feet0.p_w[i][k]);
      b.fix(dr[0][i][k], feet0.p_w[i][k] - x0.p[k] - arm[k]);
    }
  }

  // stance feet must start on some region
  for (int i = 0; i < 4; ++i) {
    if (!inst.feet0.c[i]) continue;
    bool on = false;
    for (const auto& r : inst.regions) on = on || r.contains(inst.feet0.p_w[i], 1e-7);
    if (!on) throw std::invalid_argument("initial stance toe is on no terrain region");
  }
}

void Builder::apply_planar_pins() {
  if (!inst.planar) return;
  auto near_zero = [](double x) { return std::fabs(x) < 1e-9; };
  if (!near_zero(inst.x0.theta[0]) || !near_zero(inst.x0.theta[2]) ||
      !near_zero(inst.x0.theta_dot[0]) || !near_zero(inst.x0.theta_dot[2]) ||
      !near_zero(inst.x0.v[1]))
    throw std::invalid_argument("planar instance requires a planar-consistent x0");

  for (int n = 1; n < N; ++n) {
    b.fix(p[n][1], inst.x0.p[1]);
    b.fix(v[n][1], 0.0);
    b.fix(th[n][0], 0.0);
    b.fix(th[n][2], 0.0);
    b.fix(thd[n][0], 0.0);
    b.fix(thd[n][2], 0.0);
    b.fix(om[n][0], 0.0);
    b.fix(om[n][2], 0.0);
  }
  for (int n = 0; n + 1 < N; ++n) {
    b.fix(acc[n][1], 0.0);
    b.fix(alp[n][0], 0.0);
    b.fix(alp[n][2], 0.0);
    for (int i = 0; i < 4; ++i) b.fix(f[n][i][1], 0.0);
  }
  for (int n = 1; n < N; ++n)
    for (int i = 0; i < 4; ++i) b.fix(pw[n][i][1], inst.feet0.p_w[i][1]);

  // diagonal toe pairs share their contact state
  for (int n = 1; n < N; ++n) {
    b.add_row({{c[n][0], 1.0}, {c[n][3], -1.0}}, 0.0, 0.0);
    b.add_row({{c[n][1], 1.0}, {c[n][2], -1.0}}, 0.0, 0.0);
  }
}

void Builder::build_trig_and_products() {
  trig_nv.resize(N);
  prod2.resize(N);
  prod3.resize(N);
  rotv.resize(N);
  erate.resize(N);
  rentry.resize(N);

  const Interval unit{-1.0, 1.0};

  for (int n = 1; n < N; ++n) {
    const std::string kn = std::to_string(n);

    // trig values banded through the angle selectors
    for (int k = 0; k < 3; ++k) {
      const SelectorGroup* sel = nullptr;
      if (!b.is_fixed(th[n][k]))
        sel = &selector(th[n][k], VarClass::Angle,
                        {static_cast<int>(BinCategory::SelAngle), n, k, 0, 0});
      trig_nv[n][k] = emit_trig(b, th[n][k], sel, "trig[" + kn + "]." + kAxis[k]);
    }
    const TrigVars& tph = trig_nv[n][0];
    const TrigVars& tth = trig_nv[n][1];
    const TrigVars& tps = trig_nv[n][2];

    auto sel_of = [&](int axis) -> const SelectorGroup& { return selector_cache.at(th[n][axis]); };
    auto tv = [&](int var, TrigFn fn, int axis) {
      return ViewFn([this, var, fn, axis, n]() {
        return view_trig(var, fn, selector_cache.at(th[n][axis]));
      });
    };

    // bilinear trig products
    struct P2Spec {
      const char* name;
      int xv; TrigFn fx; int xaxis;
      int yv; TrigFn fy; int yaxis;
    };
    const P2Spec specs[10] = {
        {"sphi.sth", tph.s, TrigFn::Sin, 0, tth.s, TrigFn::Sin, 1},   // A1
        {"sth.cphi", tth.s, TrigFn::Sin, 1, tph.c, TrigFn::Cos, 0},   // A2
        {"cth.cpsi", tth.c, TrigFn::Cos, 1, tps.c, TrigFn::Cos, 2},   // P1
        {"spsi.cphi", tps.s, TrigFn::Sin, 2, tph.c, TrigFn::Cos, 0},  // P2
        {"sphi.spsi", tph.s, TrigFn::Sin, 0, tps.s, TrigFn::Sin, 2},  // P3
        {"cth.spsi", tth.c, TrigFn::Cos, 1, tps.s, TrigFn::Sin, 2},   // P4
        {"cphi.cpsi", tph.c, TrigFn::Cos, 0, tps.c, TrigFn::Cos, 2},  // P5
        {"sphi.cpsi", tph.s, TrigFn::Sin, 0, tps.c, TrigFn::Cos, 2},  // P6
        {"sphi.cth", tph.s, TrigFn::Sin, 0, tth.c, TrigFn::Cos, 1},   // P7
        {"cphi.cth", tph.c, TrigFn::Cos, 0, tth.c, TrigFn::Cos, 1},   // P8
    };
    for (int w = 0; w < 10; ++w) {
      prod2[n][w] = b.add_var("prod[" + kn + "]." + specs[w].name, -1.0, 1.0);
      product(specs[w].xv, tv(specs[w].xv, specs[w].fx, specs[w].xaxis), specs[w].yv,
              tv(specs[w].yv, specs[w].fy, specs[w].yaxis), prod2[n][w]);
    }
    const int A1 = prod2[n][0], A2 = prod2[n][1], P1 = prod2[n][2], P2v = prod2[n][3],
              P3 = prod2[n][4], P4 = prod2[n][5], P5 = prod2[n][6], P6 = prod2[n][7],
              P7 = prod2[n][8], P8 = prod2[n][9];

    // trilinear chains: the pair factor is conditioned on both angle regions
    auto pair_view = [&](int var, TrigFn fa, int axa, TrigFn fb, int axb) {
      return ViewFn([this, var, fa, axa, fb, axb, n]() {
        return view_trig_pair(var, fa, selector_cache.at(th[n][axa]), fb,
                              selector_cache.at(th[n][axb]));
      });
    };
    const char* t3names[4] = {"sphi.sth.cpsi", "sth.cphi.cpsi", "sphi.sth.spsi",
                              "sth.cphi.spsi"};
    const int t3first[4] = {A1, A2, A1, A2};
    const TrigFn t3fn[4] = {TrigFn::Cos, TrigFn::Cos, TrigFn::Sin, TrigFn::Sin};
    const int t3var[4] = {tps.c, tps.c, tps.s, tps.s};
    for (int w = 0; w < 4; ++w) {
      prod3[n][w] = b.add_var("prod3[" + kn + "]." + t3names[w], -1.0, 1.0);
      ViewFn first = (t3first[w] == A1) ? pair_view(A1, TrigFn::Sin, 0, TrigFn::Sin, 1)
                                        : pair_view(A2, TrigFn::Sin, 1, TrigFn::Cos, 0);
      product(t3first[w], first, t3var[w], tv(t3var[w], t3fn[w], 2), prod3[n][w]);
    }
    const int T1 = prod3[n][0], T2 = prod3[n][1], T3 = prod3[n][2], T4 = prod3[n][3];

    // rotation entries as (column, sign); composites get a defining row,
    // fully pinned expressions fold to constants
    auto make_rot = [&](int row, int col, std::initializer_list<std::pair<int, double>> expr) {
      const std::string name = "rot[" + kn + "]." + std::to_string(row) + std::to_string(col);
      bool all_fixed = true;
      double cval = 0.0;
      for (auto [cvar, coef] : expr) {
        if (!b.is_fixed(cvar)) { all_fixed = false; break; }
        cval += coef * b.fixed_value(cvar);
      }
      int var;
      if (all_fixed) {
        var = b.add_fixed(name, cval);
      } else {
        var = b.add_var(name, -1.0, 1.0);
        ModelBuilder::Terms t{{var, 1.0}};
        for (auto [cvar, coef] : expr) t.emplace_back(cvar, -coef);
        b.add_row(std::move(t), 0.0, 0.0);
      }
      rotv[n][{row, col}] = var;
      return var;
    };
    rentry[n][0][0] = {P1, 1.0};
    rentry[n][1][0] = {P4, 1.0};
    rentry[n][2][0] = {tth.s, -1.0};
    rentry[n][0][1] = {make_rot(0, 1, {{T1, 1.0}, {P2v, -1.0}}), 1.0};
    rentry[n][1][1] = {make_rot(1, 1, {{P5, 1.0}, {T3, 1.0}}), 1.0};
    rentry[n][2][1] = {P7, 1.0};
    rentry[n][0][2] = {make_rot(0, 2, {{P3, 1.0}, {T2, 1.0}}), 1.0};
    rentry[n][1][2] = {make_rot(1, 2, {{T4, 1.0}, {P6, -1.0}}), 1.0};
    rentry[n][2][2] = {P8, 1.0};

    // rate-map products and the omega link
    auto rate_view = [&](int axis) {
      return ViewFn([this, axis, n]() {
        return view_segmented(selector(thd[n][axis], VarClass::EulerRate,
                                       {static_cast<int>(BinCategory::SelRate), n, axis, 0, 0}));
      });
    };
    const char* enames[5] = {"cthcpsi.phid", "spsi.thd", "cthspsi.phid", "cpsi.thd",
                             "sth.phid"};
    const int etrig[5] = {P1, tps.s, P4, tps.c, tth.s};
    const int erate_axis[5] = {0, 1, 0, 1, 0};
    for (int w = 0; w < 5; ++w) {
      erate[n][w] = b.add_var("erate[" + kn + "]." + enames[w]);
      ViewFn trig_view;
      if (w == 0) trig_view = pair_view(P1, TrigFn::Cos, 1, TrigFn::Cos, 2);
      else if (w == 2) trig_view = pair_view(P4, TrigFn::Cos, 1, TrigFn::Sin, 2);
      else if (w == 1) trig_view = tv(tps.s, TrigFn::Sin, 2);
      else if (w == 3) trig_view = tv(tps.c, TrigFn::Cos, 2);
      else trig_view = tv(tth.s, TrigFn::Sin, 1);
      product(etrig[w], trig_view, thd[n][erate_axis[w]], rate_view(erate_axis[w]), erate[n][w]);
    }
    // om = E(theta) * thd
    b.add_row({{om[n][0], 1.0}, {erate[n][0], -1.0}, {erate[n][1], 1.0}}, 0.0, 0.0);
    b.add_row({{om[n][1], 1.0}, {erate[n][2], -1.0}, {erate[n][3], -1.0}}, 0.0, 0.0);
    b.add_row({{om[n][2], 1.0}, {erate[n][4], 1.0}, {thd[n][2], -1.0}}, 0.0, 0.0);
  }

  // gyroscopic products on intervals 1..N-2
  gyro.resize(std::max(N - 1, 0));
  mom.resize(std::max(N - 1, 0));
  wsv.resize(N);

  const auto& I = inst.params.inertia;
  for (int n = 1; n + 1 < N; ++n) {
    const std::string kn = std::to_string(n);
    auto om_view = [&](int axis) {
      return ViewFn([this, axis, n]() {
        return view_segmented(selector(om[n][axis], VarClass::AngularVelocity,
                                       {static_cast<int>(BinCategory::SelOmega), n, axis, 0, 0}));
      });
    };
    // which unordered pairs carry nonzero coefficients anywhere
    for (int a = 0; a < 3; ++a)
      for (int bb = a; bb < 3; ++bb) {
        bool needed = false;
        for (int row = 0; row < 3; ++row) {
          int r1 = (row + 1) % 3, r2 = (row + 2) % 3;
          // (omega x I omega)_row = sum_b I(r2,b) w_{r1} w_b - I(r1,b) w_{r2} w_b
          for (int bcol = 0; bcol < 3; ++bcol) {
            std::pair<int, int> k1{std::min(r1, bcol), std::max(r1, bcol)};
            if (k1.first == a && k1.second == bb && I(r2, bcol) != 0.0) needed = true;
            std::pair<int, int> k2{std::min(r2, bcol), std::max(r2, bcol)};
            if (k2.first == a && k2.second == bb && I(r1, bcol) != 0.0) needed = true;
          }
        }
        if (!needed) continue;
        int var = b.add_var("gyro[" + kn + "]." + kAxis[a] + kAxis[bb]);
        gyro[n][{a, bb}] = var;
        product(om[n][a], om_view(a), om[n][bb], om_view(bb), var);
      }

    // moment-arm deviation products per toe
    for (int i = 0; i < 4; ++i) {
      auto dr_view = [&](int axis) {
        return ViewFn([this, axis, i, n]() {
          return view_segmented(selector(dr[n][i][axis], VarClass::ToePosition,
                                         {static_cast<int>(BinCategory::SelToe), n, i, axis, 0}));
        });
      };
      auto f_view = [&](int axis) {
        return ViewFn([this, axis, i, n]() {
          return view_segmented(selector(f[n][i][axis], VarClass::Force,
                                         {static_cast<int>(BinCategory::SelForce), n, i, axis, 0}));
        });
      };
      const std::pair<int, int> pairs[6] = {{1, 2}, {2, 1}, {2, 0}, {0, 2}, {0, 1}, {1, 0}};
      for (auto [ra, fb] : pairs) {
        int var = b.add_var("mom[" + kn + "][" + std::to_string(i) + "]." + kAxis[ra] + kAxis[fb]);
        mom[n][i][{ra, fb}] = var;
        product(dr[n][i][ra], dr_view(ra), f[n][i][fb], f_view(fb), var);
      }
    }
  }

  // workspace products R_jk * dr_j on knots 1..N-1
  for (int n = 1; n < N; ++n) {
    const std::string kn = std::to_string(n);
    for (int i = 0; i < 4; ++i) {
      auto dr_view = [&](int axis) {
        return ViewFn([this, axis, i, n]() {
          return view_segmented(selector(dr[n][i][axis], VarClass::ToePosition,
                                         {static_cast<int>(BinCategory::SelToe), n, i, axis, 0}));
        });
      };
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const EntryRef& e = rentry[n][j][k];
          int var = b.add_var("ws[" + kn + "][" + std::to_string(i) + "]." + std::to_string(j) +
                              std::to_string(k));
          wsv[n][i][j][k] = var;
          int rv = e.var;
          ViewFn rot_view = [this, rv]() { return view_full(rv, {b.lb(rv), b.ub(rv)}); };
          product(rv, rot_view, dr[n][i][j], dr_view(j), var);
        }
    }
  }
}

void Builder::build_dynamics_rows() {
  const auto& par = inst.params;
  const double dt = par.dt;
  const auto& I = par.inertia;

  // forward Euler integration
  for (int n = 0; n + 1 < N; ++n)
    for (int k = 0; k < 3; ++k) {
      b.add_row({{p[n + 1][k], 1.0}, {p[n][k], -1.0}, {v[n][k], -dt}}, 0.0, 0.0);
      b.add_row({{v[n + 1][k], 1.0}, {v[n][k], -1.0}, {acc[n][k], -dt}}, 0.0, 0.0);
      b.add_row({{th[n + 1][k], 1.0}, {th[n][k], -1.0}, {thd[n][k], -dt}}, 0.0, 0.0);
      b.add_row({{om[n + 1][k], 1.0}, {om[n][k], -1.0}, {alp[n][k], -dt}}, 0.0, 0.0);
    }

  // Newton rows: m a - sum f = -m g
  for (int n = 0; n + 1 < N; ++n)
    for (int k = 0; k < 3; ++k) {
      ModelBuilder::Terms t{{acc[n][k], par.mass}};
      for (int i = 0; i < 4; ++i) t.emplace_back(f[n][i][k], -1.0);
      b.add_row(std::move(t), -par.mass * par.g[k], -par.mass * par.g[k]);
    }

  // Euler rows: I alp + gyro - sum tau = 0
  for (int n = 0; n + 1 < N; ++n) {
    Eigen::Vector3d gyro0 = Eigen::Vector3d::Zero();
    if (n == 0) gyro0 = omega0.cross(I * omega0);
    for (int row = 0; row < 3; ++row) {
      ModelBuilder::Terms t;
      double rhs = -(n == 0 ? gyro0[row] : 0.0);
      for (int k = 0; k < 3; ++k)
        if (I(row, k) != 0.0) t.emplace_back(alp[n][k], I(row, k));

      if (n > 0) {
        // omega x (I omega) through the W auxiliaries
        int r1 = (row + 1) % 3, r2 = (row + 2) % 3;
        for (int bcol = 0; bcol < 3; ++bcol) {
          if (I(r2, bcol) != 0.0) {
            auto key = std::minmax(r1, bcol);
            t.emplace_back(gyro[n].at({key.first, key.second}), I(r2, bcol));
          }
          if (I(r1, bcol) != 0.0) {
            auto key = std::minmax(r2, bcol);
            t.emplace_back(gyro[n].at({key.first, key.second}), -I(r1, bcol));
          }
        }
      }

      for (int i = 0; i < 4; ++i) {
        int r1 = (row + 1) % 3, r2 = (row + 2) % 3;
        if (n == 0) {
          // knot-0 arm is a constant: tau = r x f exactly
          Eigen::Vector3d arm = inst.feet0.p_w[i] - inst.x0.p;
          t.emplace_back(f[0][i][r2], -arm[r1]);
          t.emplace_back(f[0][i][r1], arm[r2]);
        } else {
          Eigen::Vector3d arm = par.nominal_arm(i);
          // nominal part r_bar x f
          t.emplace_back(f[n][i][r2], -arm[r1]);
          t.emplace_back(f[n][i][r1], arm[r2]);
          // deviation part through the moment auxiliaries
          t.emplace_back(mom[n][i].at({r1, r2}), -1.0);
          t.emplace_back(mom[n][i].at({r2, r1}), 1.0);
        }
      }
      b.add_row(std::move(t), rhs, rhs);
    }
  }

  // toe kinematics: dr - pw + p = -r_bar
  for (int n = 0; n < N; ++n)
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector3d arm = inst.params.nominal_arm(i);
      for (int k = 0; k < 3; ++k)
        b.add_row({{dr[n][i][k], 1.0}, {pw[n][i][k], -1.0}, {p[n][k], 1.0}}, -arm[k], -arm[k]);
    }
}

void Builder::build_contact_rows() {
  const auto& par = inst.params;
  const double M = par.big_m;
  const double k_pyr = par.mu / std::sqrt(2.0);

  // no-slip, componentwise
  for (int n = 0; n + 1 < N; ++n)
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 3; ++k) {
        b.add_row({{pw[n + 1][i][k], 1.0}, {pw[n][i][k], -1.0}, {c[n][i], M}, {c[n + 1][i], M}},
                  -kInf, 2.0 * M);
        b.add_row({{pw[n + 1][i][k], 1.0}, {pw[n][i][k], -1.0}, {c[n][i], -M}, {c[n + 1][i], -M}},
                  -2.0 * M, kInf);
      }

  // lift height when swinging
  for (int n = 1; n < N; ++n)
    for (int i = 0; i < 4; ++i) {
      b.add_row({{pw[n][i][2], 1.0}, {c[n][i], -M}}, -kInf, par.lift_height);
      b.add_row({{pw[n][i][2], 1.0}, {c[n][i], M}}, par.lift_height, kInf);
    }

  // force bound |f| <= f_max c and the friction pyramid
  for (int n = 0; n + 1 < N; ++n)
    for (int i = 0; i < 4; ++i) {
      for (int k = 0; k < 3; ++k) {
        b.add_row({{f[n][i][k], 1.0}, {c[n][i], -par.f_max}}, -kInf, 0.0);
        b.add_row({{f[n][i][k], 1.0}, {c[n][i], par.f_max}}, 0.0, kInf);
      }
      b.add_row({{f[n][i][0], 1.0}, {f[n][i][2], -k_pyr}}, -kInf, 0.0);
      b.add_row({{f[n][i][0], 1.0}, {f[n][i][2], k_pyr}}, 0.0, kInf);
      b.add_row({{f[n][i][1], 1.0}, {f[n][i][2], -k_pyr}}, -kInf, 0.0);
      b.add_row({{f[n][i][1], 1.0}, {f[n][i][2], k_pyr}}, 0.0, kInf);
      b.add_row({{f[n][i][2], 1.0}}, 0.0, kInf);
    }

  // region membership, the contact/region sum, and the stance floor
  const double Mr = 10.0;
  for (int n = 1; n < N; ++n) {
    for (int i = 0; i < 4; ++i) {
      for (int s = 0; s < S; ++s)
        for (const auto& h : inst.regions[s].halfspaces) {
          ModelBuilder::Terms t;
          for (int k = 0; k < 3; ++k)
            if (h.normal[k] != 0.0) t.emplace_back(pw[n][i][k], h.normal[k]);
          double mr = Mr + std::fabs(h.offset);
          t.emplace_back(z[n][s][i], mr);
          b.add_row(std::move(t), -kInf, h.offset + mr);
        }
      ModelBuilder::Terms sum;
      for (int s = 0; s < S; ++s) sum.emplace_back(z[n][s][i], 1.0);
      sum.emplace_back(c[n][i], -1.0);
      b.add_row(std::move(sum), 0.0, 0.0);

      ContactLink link;
      link.knot = n;
      link.toe = i;
      link.c = c[n][i];
      for (int s = 0; s < S; ++s) link.z.push_back(z[n][s][i]);
      b.register_link(std::move(link));
    }
    ModelBuilder::Terms mc;
    for (int i = 0; i < 4; ++i) mc.emplace_back(c[n][i], 1.0);
    b.add_row(std::move(mc), inst.params.min_contacts, kInf);
  }
}

void Builder::build_workspace_rows() {
  for (int n = 1; n < N; ++n)
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector3d arm = inst.params.nominal_arm(i);
      for (int k = 0; k < 3; ++k) {
        ModelBuilder::Terms t;
        for (int j = 0; j < 3; ++j) {
          const EntryRef& e = rentry[n][j][k];
          t.emplace_back(e.var, e.sign * arm[j]);
          t.emplace_back(wsv[n][i][j][k], e.sign);
        }
        double B = inst.params.box_half_extents[k];
        b.add_row(std::move(t), arm[k] - B, arm[k] + B);
      }
    }
}

void Builder::build_objective() {
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < 3; ++k) {
      b.add_cost_sq({{v[n][k], 1.0}}, inst.v_ref[k], inst.w_v[k]);
      b.add_cost_sq({{th[n][k], 1.0}}, inst.theta_ref[k], inst.w_theta[k]);
    }
    b.add_cost_sq({{p[n][2], 1.0}}, inst.z_ref, inst.w_h);
  }
  for (int n = 0; n + 1 < N; ++n)
    for (int k = 0; k < 3; ++k)
      b.add_cost_sq({{p[n + 1][k], 1.0}, {p[n][k], -1.0}}, 0.0, 1.0);
  for (int n = 0; n + 1 < N; ++n)
    for (int s = 0; s < 4; ++s)
      for (int t = s + 1; t < 4; ++t)
        for (int k = 0; k < 3; ++k)
          b.add_cost_sq({{f[n][s][k], 1.0}, {f[n][t][k], -1.0}}, 0.0, 1.0);
}

}  // namespace

MixedIntegerQP build_miqp(const srb::ProblemInstance& inst, const SegmentationSpec& seg) {
  inst.validate();
  seg.validate();

  Builder bld(inst, seg);
  bld.build_variables();
  bld.fix_knot0();
  bld.apply_planar_pins();
  bld.build_trig_and_products();
  bld.build_dynamics_rows();
  bld.build_contact_rows();
  bld.build_workspace_rows();
  bld.build_objective();
  return bld.b.finish(inst.horizon_n);
}

long expected_binary_count(int horizon, int num_regions, const SegmentationSpec& seg) {
  const long N = horizon, S = num_regions;
  return 4 * (N - 1) * (1 + S) +
         (N - 1) * (3L * oh_bins(seg.angle.regions) + 12L * oh_bins(seg.toe_position.regions) +
                    2L * cd_bits(seg.euler_rate.regions)) +
         (N - 2) * (3L * cd_bits(seg.angular_velocity.regions) +
                    12L * cd_bits(seg.force.regions));
}

}  // namespace milo::relax
