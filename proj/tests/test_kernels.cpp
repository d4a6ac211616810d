#include "milo/kernels/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace milo;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 10.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

struct BackendGuard {
  kernels::Backend saved;
  BackendGuard() : saved(kernels::active_backend()) {}
  ~BackendGuard() { kernels::force_backend(saved); }
};

}  // namespace

TEST_CASE("axpby and clamp are bit-identical across backends") {
  if (!kernels::backend_supported(kernels::Backend::Avx2)) return;
  BackendGuard guard;
  std::mt19937_64 rng(7);
  for (std::size_t n : {0ul, 1ul, 3ul, 4ul, 17ul, 256ul, 1023ul}) {
    auto x = random_vec(n, rng), y = random_vec(n, rng);
    auto lo = random_vec(n, rng), hi = lo;
    for (std::size_t i = 0; i < n; ++i) hi[i] = lo[i] + std::fabs(y[i]);

    std::vector<double> a_scalar(n), a_avx(n), c_scalar(n), c_avx(n);
    kernels::force_backend(kernels::Backend::Scalar);
    kernels::axpby(n, 1.7, x.data(), -0.3, y.data(), a_scalar.data());
    kernels::clamp(n, x.data(), lo.data(), hi.data(), c_scalar.data());
    kernels::force_backend(kernels::Backend::Avx2);
    kernels::axpby(n, 1.7, x.data(), -0.3, y.data(), a_avx.data());
    kernels::clamp(n, x.data(), lo.data(), hi.data(), c_avx.data());

    for (std::size_t i = 0; i < n; ++i) {
      CHECK(a_scalar[i] == a_avx[i]);
      CHECK(c_scalar[i] == c_avx[i]);
    }
  }
}

TEST_CASE("reductions agree across backends to roundoff") {
  if (!kernels::backend_supported(kernels::Backend::Avx2)) return;
  BackendGuard guard;
  std::mt19937_64 rng(11);
  for (std::size_t n : {1ul, 5ul, 64ul, 333ul, 4096ul}) {
    auto x = random_vec(n, rng), y = random_vec(n, rng), w = random_vec(n, rng, 2.0);

    kernels::force_backend(kernels::Backend::Scalar);
    double dot_s = kernels::dot(n, x.data(), y.data());
    double norm_s = kernels::inf_norm(n, x.data());
    double diff_s = kernels::inf_norm_diff(n, x.data(), y.data());
    double dist_s = kernels::weighted_sq_dist(n, x.data(), y.data(), w.data());

    kernels::force_backend(kernels::Backend::Avx2);
    double dot_a = kernels::dot(n, x.data(), y.data());
    double norm_a = kernels::inf_norm(n, x.data());
    double diff_a = kernels::inf_norm_diff(n, x.data(), y.data());
    double dist_a = kernels::weighted_sq_dist(n, x.data(), y.data(), w.data());

    CHECK(dot_s == doctest::Approx(dot_a).epsilon(1e-13));
    CHECK(norm_s == norm_a);  // max is order-independent
    CHECK(diff_s == diff_a);
    CHECK(dist_s == doctest::Approx(dist_a).epsilon(1e-13));
  }
}

TEST_CASE("csr spmv matches a dense reference on both backends") {
  BackendGuard guard;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  std::uniform_int_distribution<int> nnz_per_row(0, 9);

  const int rows = 57, cols = 41;
  std::vector<std::int32_t> row_ptr{0};
  std::vector<std::int32_t> col_idx;
  std::vector<double> vals;
  std::vector<std::vector<double>> dense(rows, std::vector<double>(cols, 0.0));
  std::uniform_int_distribution<int> col(0, cols - 1);
  for (int r = 0; r < rows; ++r) {
    int k = nnz_per_row(rng);
    for (int j = 0; j < k; ++j) {
      int c = col(rng);
      double v = val(rng);
      col_idx.push_back(c);
      vals.push_back(v);
      dense[r][c] += v;
    }
    row_ptr.push_back(static_cast<std::int32_t>(col_idx.size()));
  }
  auto x = random_vec(cols, rng);

  std::vector<double> expect(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    // duplicate columns in a row are summed in insertion order by the kernel;
    // the dense reference already merged them, so compare with tolerance
    double acc = 0.0;
    for (std::int32_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += vals[k] * x[col_idx[k]];
    expect[r] = acc;
  }

  for (auto backend : {kernels::Backend::Scalar, kernels::Backend::Avx2}) {
    if (!kernels::backend_supported(backend)) continue;
    kernels::force_backend(backend);
    std::vector<double> out(rows, -1.0);
    kernels::csr_spmv(rows, row_ptr.data(), col_idx.data(), vals.data(), x.data(), out.data());
    for (int r = 0; r < rows; ++r) CHECK(out[r] == doctest::Approx(expect[r]).epsilon(1e-13));
  }
}
