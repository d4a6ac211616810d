#pragma once

#include <cstddef>
#include <cstdint>

// Dense vector and CSR sparse kernels used by the QP solver inner loop and
// the KNN distance scan. Every kernel has a scalar reference implementation
// and an AVX2 variant; the backend is selected once at runtime (cpuid) and
// can be forced for equivalence testing.
//
// Elementwise kernels (axpby, clamp) are bit-identical across backends
// (the AVX2 paths avoid FMA contraction). Reductions (dot, norms, spmv)
// associate partial sums differently and agree to roundoff only.

namespace milo::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
bool backend_supported(Backend b);

// Test hook. Throws std::runtime_error if the backend is not supported on
// this machine. The MILO_KERNELS environment variable ("scalar"/"avx2")
// overrides the default selection at startup.
void force_backend(Backend b);

// out[i] = a*x[i] + b*y[i]
void axpby(std::size_t n, double a, const double* x, double b, const double* y, double* out);

// out[i] = min(max(x[i], lo[i]), hi[i])
void clamp(std::size_t n, const double* x, const double* lo, const double* hi, double* out);

double dot(std::size_t n, const double* x, const double* y);

// max_i |x[i]|; 0 for n == 0
double inf_norm(std::size_t n, const double* x);

// max_i |x[i] - y[i]|
double inf_norm_diff(std::size_t n, const double* x, const double* y);

// sum_i (w[i] * (x[i] - y[i]))^2
double weighted_sq_dist(std::size_t n, const double* x, const double* y, const double* w);

// out = A*x for a CSR matrix with int32 column indices.
void csr_spmv(std::size_t rows, const std::int32_t* row_ptr, const std::int32_t* col_idx,
              const double* vals, const double* x, double* out);

}  // namespace milo::kernels
