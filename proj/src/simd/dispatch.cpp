#include <cstdlib>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "eacl/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define EACL_HAVE_AVX2_TU 1
#endif
#if defined(__aarch64__)
#define EACL_HAVE_NEON_TU 1
#endif

namespace eacl::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "scalar";
}

namespace {

const KernelTable* compiled_table(Isa isa) {
  switch (isa) {
    case Isa::scalar: return &scalar_kernels();
    case Isa::avx2:
#ifdef EACL_HAVE_AVX2_TU
      return detail::avx2_table();
#else
      return nullptr;
#endif
    case Isa::neon:
#ifdef EACL_HAVE_NEON_TU
      return detail::neon_table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#ifdef EACL_HAVE_AVX2_TU
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#ifdef EACL_HAVE_NEON_TU
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& select_active() {
  if (const char* forced = std::getenv("EACL_SIMD")) {
    const std::string want(forced);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == to_string(isa)) {
        if (isa_supported(isa)) return *compiled_table(isa);
        spdlog::warn("EACL_SIMD={} not supported on this CPU; using automatic selection", want);
      }
    }
  }
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (isa_supported(isa)) return *compiled_table(isa);
  }
  return scalar_kernels();
}

}  // namespace

bool isa_supported(Isa isa) { return compiled_table(isa) != nullptr && cpu_has(isa); }

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (isa_supported(isa)) out.push_back(compiled_table(isa));
  }
  return out;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) throw std::invalid_argument("instruction set not available: " + std::string(to_string(isa)));
  return *compiled_table(isa);
}

const KernelTable& active() {
  static const KernelTable& table = select_active();
  return table;
}

}  // namespace eacl::simd
