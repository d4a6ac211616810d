// AVX2 kernel variants. This translation unit is compiled with -mavx2; it is
// only entered after the runtime cpuid check in dispatch.cpp.

#include "milo/kernels/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace milo::kernels::detail {

// Elementwise kernels use mul+add (no FMA) so results are bit-identical to
// the scalar reference.

void axpby_avx2(std::size_t n, double a, const double* x, double b, const double* y,
                double* out) {
  const __m256d av = _mm256_set1_pd(a);
  const __m256d bv = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d yv = _mm256_loadu_pd(y + i);
    __m256d r = _mm256_add_pd(_mm256_mul_pd(av, xv), _mm256_mul_pd(bv, yv));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void clamp_avx2(std::size_t n, const double* x, const double* lo, const double* hi,
                double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d lv = _mm256_loadu_pd(lo + i);
    __m256d hv = _mm256_loadu_pd(hi + i);
    __m256d r = _mm256_min_pd(_mm256_max_pd(xv, lv), hv);
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) {
    double v = x[i];
    v = v < lo[i] ? lo[i] : v;
    v = v > hi[i] ? hi[i] : v;
    out[i] = v;
  }
}

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, swapped));
}

const __m256d kAbsMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));

}  // namespace

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d yv = _mm256_loadu_pd(y + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(xv, yv));
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return hsum(acc) + tail;
}

double inf_norm_avx2(std::size_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_and_pd(_mm256_loadu_pd(x + i), kAbsMask);
    acc = _mm256_max_pd(acc, xv);
  }
  double m = hmax(acc);
  for (; i < n; ++i) {
    double v = std::fabs(x[i]);
    if (v > m) m = v;
  }
  return m;
}

double inf_norm_diff_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_max_pd(acc, _mm256_and_pd(d, kAbsMask));
  }
  double m = hmax(acc);
  for (; i < n; ++i) {
    double v = std::fabs(x[i] - y[i]);
    if (v > m) m = v;
  }
  return m;
}

double weighted_sq_dist_avx2(std::size_t n, const double* x, const double* y, const double* w) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    d = _mm256_mul_pd(d, _mm256_loadu_pd(w + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double tail = 0.0;
  for (; i < n; ++i) {
    double d = w[i] * (x[i] - y[i]);
    tail += d * d;
  }
  return hsum(acc) + tail;
}

void csr_spmv_avx2(std::size_t rows, const std::int32_t* row_ptr, const std::int32_t* col_idx,
                   const double* vals, const double* x, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const std::int32_t begin = row_ptr[r];
    const std::int32_t end = row_ptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    std::int32_t k = begin;
    for (; k + 4 <= end; k += 4) {
      __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(col_idx + k));
      __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      __m256d vv = _mm256_loadu_pd(vals + k);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(vv, xv));
    }
    double tail = 0.0;
    for (; k < end; ++k) tail += vals[k] * x[col_idx[k]];
    out[r] = hsum(acc) + tail;
  }
}

}  // namespace milo::kernels::detail
