#include "milo/kernels/kernels.hpp"

#include <cmath>

namespace milo::kernels::detail {

void axpby_scalar(std::size_t n, double a, const double* x, double b, const double* y,
                  double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void clamp_scalar(std::size_t n, const double* x, const double* lo, const double* hi,
                  double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    v = v < lo[i] ? lo[i] : v;
    v = v > hi[i] ? hi[i] : v;
    out[i] = v;
  }
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double inf_norm_scalar(std::size_t n, const double* x) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = std::fabs(x[i]);
    if (v > m) m = v;
  }
  return m;
}

double inf_norm_diff_scalar(std::size_t n, const double* x, const double* y) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = std::fabs(x[i] - y[i]);
    if (v > m) m = v;
  }
  return m;
}

double weighted_sq_dist_scalar(std::size_t n, const double* x, const double* y,
                               const double* w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = w[i] * (x[i] - y[i]);
    acc += d * d;
  }
  return acc;
}

void csr_spmv_scalar(std::size_t rows, const std::int32_t* row_ptr, const std::int32_t* col_idx,
                     const double* vals, const double* x, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::int32_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += vals[k] * x[col_idx[k]];
    out[r] = acc;
  }
}

}  // namespace milo::kernels::detail
