#include "eacl/simd/kernels.hpp"

namespace eacl::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm_scalar(const double* a, std::size_t n) { return dot_scalar(a, a, n); }

void scale_scalar(double* a, std::size_t n, double factor) {
  for (std::size_t i = 0; i < n; ++i) a[i] *= factor;
}

void dot_rows_scalar(const double* matrix, std::size_t rows, std::size_t dim, const double* query, double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_scalar(matrix + r * dim, query, dim);
}

constexpr KernelTable kScalar{Isa::scalar, dot_scalar, squared_norm_scalar, scale_scalar, dot_rows_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace eacl::simd
