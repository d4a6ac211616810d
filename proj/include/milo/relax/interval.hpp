#pragma once

#include "milo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace milo::relax {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }

  void validate(const char* what = "interval") const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi) || width() < 1e-12)
      throw DegenerateInterval(std::string(what) + ": [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
  }

  // r-th of `regions` equal subdivisions
  Interval sub(int r, int regions) const {
    double w = width() / regions;
    return {lo + r * w, r + 1 == regions ? hi : lo + (r + 1) * w};
  }

  int region_of(double x, int regions) const {
    int r = static_cast<int>(std::floor((x - lo) / width() * regions));
    return std::clamp(r, 0, regions - 1);
  }

  static Interval product(const Interval& a, const Interval& b) {
    double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
  }

  static Interval hull(const Interval& a, const Interval& b) {
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
  }
};

}  // namespace milo::relax
