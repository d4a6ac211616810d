#include "milo/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace milo::kernels {

namespace detail {

void axpby_scalar(std::size_t, double, const double*, double, const double*, double*);
void clamp_scalar(std::size_t, const double*, const double*, const double*, double*);
double dot_scalar(std::size_t, const double*, const double*);
double inf_norm_scalar(std::size_t, const double*);
double inf_norm_diff_scalar(std::size_t, const double*, const double*);
double weighted_sq_dist_scalar(std::size_t, const double*, const double*, const double*);
void csr_spmv_scalar(std::size_t, const std::int32_t*, const std::int32_t*, const double*,
                     const double*, double*);

void axpby_avx2(std::size_t, double, const double*, double, const double*, double*);
void clamp_avx2(std::size_t, const double*, const double*, const double*, double*);
double dot_avx2(std::size_t, const double*, const double*);
double inf_norm_avx2(std::size_t, const double*);
double inf_norm_diff_avx2(std::size_t, const double*, const double*);
double weighted_sq_dist_avx2(std::size_t, const double*, const double*, const double*);
void csr_spmv_avx2(std::size_t, const std::int32_t*, const std::int32_t*, const double*,
                   const double*, double*);

}  // namespace detail

namespace {

struct VTable {
  void (*axpby)(std::size_t, double, const double*, double, const double*, double*);
  void (*clamp)(std::size_t, const double*, const double*, const double*, double*);
  double (*dot)(std::size_t, const double*, const double*);
  double (*inf_norm)(std::size_t, const double*);
  double (*inf_norm_diff)(std::size_t, const double*, const double*);
  double (*weighted_sq_dist)(std::size_t, const double*, const double*, const double*);
  void (*csr_spmv)(std::size_t, const std::int32_t*, const std::int32_t*, const double*,
                   const double*, double*);
};

constexpr VTable kScalar{detail::axpby_scalar,        detail::clamp_scalar,
                         detail::dot_scalar,          detail::inf_norm_scalar,
                         detail::inf_norm_diff_scalar, detail::weighted_sq_dist_scalar,
                         detail::csr_spmv_scalar};

#if defined(__x86_64__) || defined(_M_X64)
constexpr VTable kAvx2{detail::axpby_avx2,        detail::clamp_avx2,
                       detail::dot_avx2,          detail::inf_norm_avx2,
                       detail::inf_norm_diff_avx2, detail::weighted_sq_dist_avx2,
                       detail::csr_spmv_avx2};
#endif

bool have_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend pick_default() {
  if (const char* env = std::getenv("MILO_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0 && have_avx2()) return Backend::Avx2;
  }
  return have_avx2() ? Backend::Avx2 : Backend::Scalar;
}

struct State {
  Backend backend;
  const VTable* table;
};

State& state() {
  static State s = [] {
    Backend b = pick_default();
#if defined(__x86_64__) || defined(_M_X64)
    return State{b, b == Backend::Avx2 ? &kAvx2 : &kScalar};
#else
    return State{b, &kScalar};
#endif
  }();
  return s;
}

}  // namespace

Backend active_backend() { return state().backend; }

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return have_avx2();
  }
  return false;
}

void force_backend(Backend b) {
  if (!backend_supported(b)) throw std::runtime_error("kernel backend not supported on this CPU");
  state().backend = b;
#if defined(__x86_64__) || defined(_M_X64)
  state().table = (b == Backend::Avx2) ? &kAvx2 : &kScalar;
#else
  state().table = &kScalar;
#endif
}

void axpby(std::size_t n, double a, const double* x, double b, const double* y, double* out) {
  state().table->axpby(n, a, x, b, y, out);
}

void clamp(std::size_t n, const double* x, const double* lo, const double* hi, double* out) {
  state().table->clamp(n, x, lo, hi, out);
}

double dot(std::size_t n, const double* x, const double* y) { return state().table->dot(n, x, y); }

double inf_norm(std::size_t n, const double* x) { return state().table->inf_norm(n, x); }

double inf_norm_diff(std::size_t n, const double* x, const double* y) {
  return state().table->inf_norm_diff(n, x, y);
}

double weighted_sq_dist(std::size_t n, const double* x, const double* y, const double* w) {
  return state().table->weighted_sq_dist(n, x, y, w);
}

void csr_spmv(std::size_t rows, const std::int32_t* row_ptr, const std::int32_t* col_idx,
              const double* vals, const double* x, double* out) {
  state().table->csr_spmv(rows, row_ptr, col_idx, vals, x, out);
}

}  // namespace milo::kernels
