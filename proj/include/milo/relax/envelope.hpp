#pragma once

#include "milo/relax/model_builder.hpp"
#include "milo/relax/segmentation.hpp"

#include <array>
#include <string>
#include <vector>

namespace milo::relax {

// One row of a McCormick envelope: cx*x + cy*y + cz*z <= rhs.
struct McRow {
  double cx, cy, cz, rhs;
};

// The four envelope rows of z = x*y over a box. Rows 0,1 are the
// underestimators (z >= ...), rows 2,3 the overestimators.
std::array<McRow, 4> mccormick(const Interval& x, const Interval& y);

// Feasible z interval of the four rows at a point (x, y) inside the box.
Interval mccormick_interval(const Interval& Ix, const Interval& Iy, double x, double y);

// |approx - truth| / max(|approx|, |truth|); 0 when both vanish.
double approx_error(double approx, double truth);

// Linear expression that is 0 when a region is selected and >= 1 otherwise.
struct Activation {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;
};

struct FactorCell {
  Interval iv;
  Activation act;  // empty means always active
};

// A factor of a product envelope: the column the rows bind, its overall
// range, and the selection cells conditioning the envelope.
struct FactorView {
  int var = -1;
  Interval full;
  std::vector<FactorCell> cells;
};

FactorView view_full(int var, const Interval& range);
FactorView view_segmented(const SelectorGroup& g);

enum class TrigFn { Sin, Cos };
double trig_eval(TrigFn f, double angle);
Interval trig_range(TrigFn f, const Interval& angle);

// trig value variable conditioned on its angle's selector regions
FactorView view_trig(int trig_var, TrigFn f, const SelectorGroup& angle_sel);
// product-of-two-trig variable conditioned on both angles' regions jointly
FactorView view_trig_pair(int prod_var, TrigFn fa, const SelectorGroup& sa, TrigFn fb,
                          const SelectorGroup& sb);

// Emits the envelope rows for z = x*y over every cell pair, big-M-activated
// by the cell selectors. Fixed factors fold to exact linear rows. x == y is
// treated as a square (diagonal cells only).
void emit_product(ModelBuilder& b, const FactorView& fx, const FactorView& fy, int z);

// Selector creation: membership rows tying the variable into the selected
// subinterval, plus the exactly-one row for one-hot groups. Coded groups
// require a power-of-two region count.
SelectorGroup make_selector(ModelBuilder& b, int var, const Interval& range, int regions,
                            SelectorGroup::Kind kind, const std::string& prefix,
                            const BinKey& key_base);

// Secant band of one trig function over one region: chord(theta) + [dlo, dhi]
// contains the curve; dlo <= 0 <= dhi and the band is exact at the endpoints.
struct TrigBand {
  double slope, intercept, dlo, dhi;
};
TrigBand trig_band(TrigFn f, const Interval& region);
double trig_band_max_width(TrigFn f, const Interval& range, int regions);

// sin/cos variables banded around the angle variable through its selectors;
// a fixed angle folds both to constants.
struct TrigVars {
  int s = -1, c = -1;
};
TrigVars emit_trig(ModelBuilder& b, int angle_var, const SelectorGroup* sel,
                   const std::string& prefix);

// --- standalone envelope models (spec operations; also the sampling oracles) ---

struct ProductEnvelope {
  MixedIntegerQP model;
  int x, y, z;
};
ProductEnvelope segmented_envelope(const ClassSpec& xs, const ClassSpec& ys,
                                   SelectorGroup::Kind kx = SelectorGroup::Kind::OneHot,
                                   SelectorGroup::Kind ky = SelectorGroup::Kind::OneHot);

struct TrilinearEnvelope {
  MixedIntegerQP model;
  int x, y, w, a12, a;
};
// a = x*y*w chained through a12 = x*y; the a12 range comes from interval
// arithmetic and it is segmented with the trig_product class by default.
TrilinearEnvelope trilinear_envelope(const ClassSpec& xs, const ClassSpec& ys,
                                     const ClassSpec& ws, const ClassSpec& mid,
                                     SelectorGroup::Kind kind = SelectorGroup::Kind::OneHot);

struct TrigEnvelope {
  MixedIntegerQP model;
  int theta, s, c;
};
TrigEnvelope piecewise_trig(const ClassSpec& angle);

// Writes the binaries selecting the regions that contain the given factor
// values into x (used when checking envelope rows against true products).
void set_selector_values(const MixedIntegerQP& m, const SelectorGroup& g, double val, Vec& x);

}  // namespace milo::relax
