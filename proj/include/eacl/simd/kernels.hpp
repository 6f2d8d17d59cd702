#pragma once

// Double-precision vector kernels behind the KG similarity scan.
//
// Each instruction set provides the same table of kernels. The scalar table
// is the reference; vector tables must agree with it to rounding (they sum in
// a different order). `active()` picks the widest table the running CPU
// supports, unless EACL_SIMD=scalar|avx2|neon forces a choice.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace eacl::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_norm)(const double* a, std::size_t n);
  void (*scale)(double* a, std::size_t n, double factor);
  /// out[r] = dot(matrix[r*dim .. r*dim+dim), query) for r in [0, rows).
  void (*dot_rows)(const double* matrix, std::size_t rows, std::size_t dim, const double* query, double* out);
};

const KernelTable& scalar_kernels();
/// Tables compiled into this binary whose instructions the CPU supports.
std::vector<const KernelTable*> available_kernels();
bool isa_supported(Isa isa);
const KernelTable& kernels_for(Isa isa);  // throws if unsupported
const KernelTable& active();

namespace detail {
// Defined only in the translation units built for each instruction set.
const KernelTable* avx2_table();
const KernelTable* neon_table();
}  // namespace detail

}  // namespace eacl::simd
