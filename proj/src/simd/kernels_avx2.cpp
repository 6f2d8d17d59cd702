// Built with -mavx2 -mfma. Only reached after a runtime CPU check.

#include <immintrin.h>

#include "eacl/simd/kernels.hpp"

namespace eacl::simd {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm_avx2(const double* a, std::size_t n) { return dot_avx2(a, a, n); }

void scale_avx2(double* a, std::size_t n, double factor) {
  const __m256d f = _mm256_set1_pd(factor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(a + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), f));
  for (; i < n; ++i) a[i] *= factor;
}

void dot_rows_avx2(const double* matrix, std::size_t rows, std::size_t dim, const double* query, double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_avx2(matrix + r * dim, query, dim);
}

constexpr KernelTable kAvx2{Isa::avx2, dot_avx2, squared_norm_avx2, scale_avx2, dot_rows_avx2};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace eacl::simd
