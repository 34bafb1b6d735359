#include <atomic>
#include <cstdlib>
#include <string_view>

#include "charax/simd/kernels.hpp"

namespace charax::simd {

#if defined(CHARAX_HAVE_AVX2)
const KernelTable* avx2_kernels_impl();
#endif

const KernelTable* avx2_kernels() {
#if defined(CHARAX_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? avx2_kernels_impl() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* initial_table() {
  const char* env = std::getenv("CHARAX_KERNELS");
  if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& kernels() { return *active_slot().load(std::memory_order_relaxed); }

bool select_kernels(std::string_view name) {
  if (name == "scalar") {
    active_slot().store(&scalar_kernels());
    return true;
  }
  if (name == "avx2") {
    if (const KernelTable* t = avx2_kernels()) {
      active_slot().store(t);
      return true;
    }
  }
  return false;
}

}  // namespace charax::simd
