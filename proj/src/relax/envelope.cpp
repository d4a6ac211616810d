#include "milo/relax/envelope.hpp"

#include "milo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace milo::relax {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBigMSlackFactor = 1.1;  // per-row big-M = range bound + 10%
// Membership rows let the variable sit slightly outside its selected region.
// Symmetric segmentations put common operating points (zeros) exactly on
// region boundaries; without the overlap, pinning such a variable's selector
// cuts off the other sign entirely. The envelope cells themselves stay exact.
constexpr double kMembershipOverlap = 0.02;

double interval_max_of_term(double coef, const Interval& iv) {
  return coef >= 0 ? coef * iv.hi : coef * iv.lo;
}
}  // namespace

std::array<McRow, 4> mccormick(const Interval& x, const Interval& y) {
  x.validate("mccormick x");
  y.validate("mccormick y");
  const double xl = x.lo, xu = x.hi, yl = y.lo, yu = y.hi;
  return {{
      {yl, xl, -1.0, xl * yl},   // z >= xl*y + yl*x - xl*yl
      {yu, xu, -1.0, xu * yu},   // z >= xu*y + yu*x - xu*yu
      {-yl, -xu, 1.0, -xu * yl}, // z <= xu*y + yl*x - xu*yl
      {-yu, -xl, 1.0, -xl * yu}, // z <= xl*y + yu*x - xl*yu
  }};
}

Interval mccormick_interval(const Interval& Ix, const Interval& Iy, double x, double y) {
  const double xl = Ix.lo, xu = Ix.hi, yl = Iy.lo, yu = Iy.hi;
  double lo = std::max(xl * y + yl * x - xl * yl, xu * y + yu * x - xu * yu);
  double hi = std::min(xu * y + yl * x - xu * yl, xl * y + yu * x - xl * yu);
  return {lo, hi};
}

double approx_error(double approx, double truth) {
  double denom = std::max(std::fabs(approx), std::fabs(truth));
  if (denom == 0.0) return 0.0;
  return std::fabs(approx - truth) / denom;
}

FactorView view_full(int var, const Interval& range) {
  FactorView v;
  v.var = var;
  v.full = range;
  v.cells.push_back({range, {}});
  return v;
}

FactorView view_segmented(const SelectorGroup& g) {
  FactorView v;
  v.var = g.var;
  v.full = g.range;
  for (int r = 0; r < g.regions; ++r) {
    FactorCell cell;
    cell.iv = g.region_interval(r);
    g.slack(r, cell.act.terms, cell.act.constant);
    v.cells.push_back(std::move(cell));
  }
  return v;
}

double trig_eval(TrigFn f, double angle) {
  return f == TrigFn::Sin ? std::sin(angle) : std::cos(angle);
}

Interval trig_range(TrigFn f, const Interval& a) {
  if (f == TrigFn::Sin) {
    // monotone on [-pi/2, pi/2]
    return {std::sin(a.lo), std::sin(a.hi)};
  }
  double clo = std::min(std::cos(a.lo), std::cos(a.hi));
  double chi = std::max(std::cos(a.lo), std::cos(a.hi));
  if (a.contains(0.0)) chi = 1.0;
  return {clo, chi};
}

FactorView view_trig(int trig_var, TrigFn f, const SelectorGroup& angle_sel) {
  FactorView v;
  v.var = trig_var;
  v.full = trig_range(f, angle_sel.range);
  for (int r = 0; r < angle_sel.regions; ++r) {
    FactorCell cell;
    cell.iv = trig_range(f, angle_sel.region_interval(r));
    angle_sel.slack(r, cell.act.terms, cell.act.constant);
    v.cells.push_back(std::move(cell));
  }
  return v;
}

FactorView view_trig_pair(int prod_var, TrigFn fa, const SelectorGroup& sa, TrigFn fb,
                          const SelectorGroup& sb) {
  FactorView v;
  v.var = prod_var;
  v.full = Interval::product(trig_range(fa, sa.range), trig_range(fb, sb.range));
  for (int ra = 0; ra < sa.regions; ++ra) {
    Interval ia = trig_range(fa, sa.region_interval(ra));
    Activation acta;
    sa.slack(ra, acta.terms, acta.constant);
    for (int rb = 0; rb < sb.regions; ++rb) {
      Interval ib = trig_range(fb, sb.region_interval(rb));
      FactorCell cell;
      cell.iv = Interval::product(ia, ib);
      cell.act = acta;
      Activation actb;
      sb.slack(rb, actb.terms, actb.constant);
      cell.act.terms.insert(cell.act.terms.end(), actb.terms.begin(), actb.terms.end());
      cell.act.constant += actb.constant;
      v.cells.push_back(std::move(cell));
    }
  }
  return v;
}

namespace {

// cx*x + cy*y + cz*z <= rhs, deactivated by big-M when any activation slack
// is nonzero
void emit_mc_row(ModelBuilder& b, const McRow& row, int x, int y, int z, const Interval& zr,
                 const FactorView& fx, const FactorView& fy, const Activation& ax,
                 const Activation& ay) {
  double worst = interval_max_of_term(row.cx, fx.full) + interval_max_of_term(row.cy, fy.full) +
                 interval_max_of_term(row.cz, zr) - row.rhs;
  double big_m = std::max(worst, 0.0) * kBigMSlackFactor + 1e-9;

  ModelBuilder::Terms terms;
  if (x == y) terms.emplace_back(x, row.cx + row.cy);
  else {
    terms.emplace_back(x, row.cx);
    terms.emplace_back(y, row.cy);
  }
  terms.emplace_back(z, row.cz);
  double rhs = row.rhs;
  for (const auto* act : {&ax, &ay}) {
    for (const auto& [col, coef] : act->terms) terms.emplace_back(col, -big_m * coef);
    rhs += big_m * act->constant;
  }
  b.add_row(std::move(terms), -kInf, rhs);
}

}  // namespace

void emit_product(ModelBuilder& b, const FactorView& fx, const FactorView& fy, int z) {
  const bool x_fixed = b.is_fixed(fx.var);
  const bool y_fixed = b.is_fixed(fy.var);

  if (x_fixed && y_fixed) {
    b.fix(z, b.fixed_value(fx.var) * b.fixed_value(fy.var));
    return;
  }
  if (x_fixed || y_fixed) {
    double cval = x_fixed ? b.fixed_value(fx.var) : b.fixed_value(fy.var);
    int free_var = x_fixed ? fy.var : fx.var;
    b.add_row({{z, 1.0}, {free_var, -cval}}, 0.0, 0.0);
    const Interval& fr = x_fixed ? fy.full : fx.full;
    Interval zr{std::min(cval * fr.lo, cval * fr.hi), std::max(cval * fr.lo, cval * fr.hi)};
    if (zr.hi - zr.lo < 1e-12) { zr.lo -= 1e-9; zr.hi += 1e-9; }
    b.intersect_bounds(z, zr.lo, zr.hi);
    return;
  }

  Interval zr = Interval::product(fx.full, fy.full);
  b.intersect_bounds(z, zr.lo, zr.hi);

  if (fx.var == fy.var) {
    // square: diagonal cells only, one activation
    if (fx.cells.size() != fy.cells.size())
      throw std::logic_error("square product with mismatched views");
    static const Activation kNone;
    for (const auto& cell : fx.cells) {
      auto rows = mccormick(cell.iv, cell.iv);
      for (const auto& row : rows) emit_mc_row(b, row, fx.var, fy.var, z, zr, fx, fy, cell.act, kNone);
    }
    return;
  }

  for (const auto& cx : fx.cells)
    for (const auto& cy : fy.cells) {
      auto rows = mccormick(cx.iv, cy.iv);
      for (const auto& row : rows)
        emit_mc_row(b, row, fx.var, fy.var, z, zr, fx, fy, cx.act, cy.act);
    }
}

SelectorGroup make_selector(ModelBuilder& b, int var, const Interval& range, int regions,
                            SelectorGroup::Kind kind, const std::string& prefix,
                            const BinKey& key_base) {
  range.validate("selector range");
  if (regions < 1) throw std::invalid_argument("selector needs at least one region");

  SelectorGroup g;
  g.kind = kind;
  g.var = var;
  g.knot = key_base.knot;
  g.range = range;
  g.regions = regions;

  b.intersect_bounds(var, range.lo, range.hi);

  if (regions == 1) {
    b.register_selector(g);
    return g;  // no binaries needed
  }

  if (kind == SelectorGroup::Kind::OneHot) {
    for (int r = 0; r < regions; ++r) {
      BinKey key = key_base;
      key.c = r;
      g.bins.push_back(b.add_binary(prefix + ":r" + std::to_string(r), key));
    }
    ModelBuilder::Terms one;
    for (int bin : g.bins) one.emplace_back(bin, 1.0);
    b.add_row(std::move(one), 1.0, 1.0);
  } else {
    int bits = 0;
    while ((1 << bits) < regions) ++bits;
    if ((1 << bits) != regions)
      throw std::invalid_argument("coded selector requires a power-of-two region count");
    for (int j = 0; j < bits; ++j) {
      BinKey key = key_base;
      key.c = j;
      g.bins.push_back(b.add_binary(prefix + ":b" + std::to_string(j), key));
    }
  }

  // membership rows: var within the selected subinterval (with the overlap)
  const double big_m = range.width() * kBigMSlackFactor;
  for (int r = 0; r < regions; ++r) {
    Interval iv = g.region_interval(r);
    const double ov = kMembershipOverlap * iv.width();
    std::vector<std::pair<int, double>> sterm;
    double sconst;
    g.slack(r, sterm, sconst);

    ModelBuilder::Terms up{{var, 1.0}};
    for (const auto& [col, coef] : sterm) up.emplace_back(col, -big_m * coef);
    b.add_row(std::move(up), -kInf, iv.hi + ov + big_m * sconst);

    ModelBuilder::Terms lo{{var, 1.0}};
    for (const auto& [col, coef] : sterm) lo.emplace_back(col, big_m * coef);
    b.add_row(std::move(lo), iv.lo - ov - big_m * sconst, kInf);
  }

  b.register_selector(g);
  return g;
}

TrigBand trig_band(TrigFn f, const Interval& region) {
  region.validate("trig band region");
  const double a = region.lo, b = region.hi;
  const double fa = trig_eval(f, a), fb = trig_eval(f, b);
  TrigBand band;
  band.slope = (fb - fa) / (b - a);
  band.intercept = fa - band.slope * a;

  // curve-minus-chord extrema: f'(t) = slope
  double dlo = 0.0, dhi = 0.0;
  auto consider = [&](double t) {
    if (t < a || t > b) return;
    double dev = trig_eval(f, t) - (band.intercept + band.slope * t);
    dlo = std::min(dlo, dev);
    dhi = std::max(dhi, dev);
  };
  if (f == TrigFn::Sin) {
    if (std::fabs(band.slope) <= 1.0) {
      double t = std::acos(band.slope);  // in [0, pi]
      consider(t);
      consider(-t);
    }
  } else {
    if (std::fabs(band.slope) <= 1.0) {
      double t = std::asin(-band.slope);  // in [-pi/2, pi/2]
      consider(t);
      consider(3.14159265358979323846 - t);
      consider(-3.14159265358979323846 - t);
    }
  }
  band.dlo = dlo;
  band.dhi = dhi;
  return band;
}

double trig_band_max_width(TrigFn f, const Interval& range, int regions) {
  double w = 0.0;
  for (int r = 0; r < regions; ++r) {
    TrigBand band = trig_band(f, range.sub(r, regions));
    w = std::max(w, band.dhi - band.dlo);
  }
  return w;
}

TrigVars emit_trig(ModelBuilder& b, int angle_var, const SelectorGroup* sel,
                   const std::string& prefix) {
  TrigVars tv;
  if (b.is_fixed(angle_var)) {
    double a = b.fixed_value(angle_var);
    tv.s = b.add_fixed(prefix + ".sin", std::sin(a));
    tv.c = b.add_fixed(prefix + ".cos", std::cos(a));
    return tv;
  }
  if (sel == nullptr) throw std::logic_error("free angle needs a selector group");

  Interval sr = trig_range(TrigFn::Sin, sel->range);
  Interval cr = trig_range(TrigFn::Cos, sel->range);
  tv.s = b.add_var(prefix + ".sin", sr.lo, sr.hi);
  tv.c = b.add_var(prefix + ".cos", cr.lo, cr.hi);

  const double theta_abs = std::max(std::fabs(sel->range.lo), std::fabs(sel->range.hi));
  for (int r = 0; r < sel->regions; ++r) {
    Interval region = sel->region_interval(r);
    std::vector<std::pair<int, double>> sterm;
    double sconst;
    sel->slack(r, sterm, sconst);
    for (auto [f, tvar] : {std::pair{TrigFn::Sin, tv.s}, std::pair{TrigFn::Cos, tv.c}}) {
      TrigBand band = trig_band(f, region);
      const double big_m =
          (1.0 + std::fabs(band.slope) * theta_abs + std::fabs(band.intercept) + 2.0) *
          kBigMSlackFactor;
      // tvar - slope*theta <= intercept + dhi (+ big-M slack)
      ModelBuilder::Terms up{{tvar, 1.0}, {angle_var, -band.slope}};
      for (const auto& [col, coef] : sterm) up.emplace_back(col, -big_m * coef);
      b.add_row(std::move(up), -kInf, band.intercept + band.dhi + big_m * sconst);
      // tvar - slope*theta >= intercept + dlo (- big-M slack)
      ModelBuilder::Terms lo{{tvar, 1.0}, {angle_var, -band.slope}};
      for (const auto& [col, coef] : sterm) lo.emplace_back(col, big_m * coef);
      b.add_row(std::move(lo), band.intercept + band.dlo - big_m * sconst, kInf);
    }
  }
  return tv;
}

ProductEnvelope segmented_envelope(const ClassSpec& xs, const ClassSpec& ys,
                                   SelectorGroup::Kind kx, SelectorGroup::Kind ky) {
  ModelBuilder b;
  ProductEnvelope env;
  env.x = b.add_var("x", xs.range.lo, xs.range.hi);
  env.y = b.add_var("y", ys.range.lo, ys.range.hi);
  env.z = b.add_var("z");
  auto gx = make_selector(b, env.x, xs.range, xs.regions, kx, "sel.x",
                          {static_cast<int>(BinCategory::Other), 0, 0, 0, 0});
  auto gy = make_selector(b, env.y, ys.range, ys.regions, ky, "sel.y",
                          {static_cast<int>(BinCategory::Other), 0, 1, 0, 0});
  emit_product(b, view_segmented(gx), view_segmented(gy), env.z);
  env.model = b.finish();
  return env;
}

TrilinearEnvelope trilinear_envelope(const ClassSpec& xs, const ClassSpec& ys,
                                     const ClassSpec& ws, const ClassSpec& mid,
                                     SelectorGroup::Kind kind) {
  ModelBuilder b;
  TrilinearEnvelope env;
  env.x = b.add_var("x", xs.range.lo, xs.range.hi);
  env.y = b.add_var("y", ys.range.lo, ys.range.hi);
  env.w = b.add_var("w", ws.range.lo, ws.range.hi);
  env.a12 = b.add_var("a12");
  env.a = b.add_var("a");

  auto gx = make_selector(b, env.x, xs.range, xs.regions, kind, "sel.x",
                          {static_cast<int>(BinCategory::Other), 0, 0, 0, 0});
  auto gy = make_selector(b, env.y, ys.range, ys.regions, kind, "sel.y",
                          {static_cast<int>(BinCategory::Other), 0, 1, 0, 0});
  emit_product(b, view_segmented(gx), view_segmented(gy), env.a12);

  // a12 range from interval arithmetic; mid contributes the region count only
  Interval a12r = Interval::product(xs.range, ys.range);
  auto g12 = make_selector(b, env.a12, a12r, mid.regions, kind, "sel.a12",
                           {static_cast<int>(BinCategory::Other), 0, 2, 0, 0});
  auto gw = make_selector(b, env.w, ws.range, ws.regions, kind, "sel.w",
                          {static_cast<int>(BinCategory::Other), 0, 3, 0, 0});
  emit_product(b, view_segmented(g12), view_segmented(gw), env.a);
  env.model = b.finish();
  return env;
}

TrigEnvelope piecewise_trig(const ClassSpec& angle) {
  ModelBuilder b;
  TrigEnvelope env;
  env.theta = b.add_var("theta", angle.range.lo, angle.range.hi);
  auto sel = make_selector(b, env.theta, angle.range, angle.regions, SelectorGroup::Kind::OneHot,
                           "sel.theta", {static_cast<int>(BinCategory::Other), 0, 0, 0, 0});
  TrigVars tv = emit_trig(b, env.theta, &sel, "theta");
  env.s = tv.s;
  env.c = tv.c;
  env.model = b.finish();
  return env;
}

void set_selector_values(const MixedIntegerQP& m, const SelectorGroup& g, double val, Vec& x) {
  int r = g.region_of(val);
  (void)m;
  for (auto [col, v] : g.values_for_region(r)) x[col] = v;
}

}  // namespace milo::relax
