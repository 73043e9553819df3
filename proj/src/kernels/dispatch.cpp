#include <atomic>
#include <cstdlib>

#include "cavlab/kernels.hpp"

namespace cavlab::kernels {

#if defined(CAVLAB_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(CAVLAB_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif

const KernelTable* avx2() noexcept {
#if defined(CAVLAB_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon() noexcept {
#if defined(CAVLAB_HAVE_NEON)
  return &neon_table();  // baseline on AArch64
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* lookup(std::string_view name) noexcept {
  if (name == "scalar") return &scalar();
  if (name == "avx2") return avx2();
  if (name == "neon") return neon();
  return nullptr;
}

const KernelTable* initial_choice() noexcept {
  if (const char* env = std::getenv("CAVLAB_KERNELS")) {
    if (const KernelTable* t = lookup(env)) return t;
  }
  if (const KernelTable* t = avx2()) return t;
  if (const KernelTable* t = neon()) return t;
  return &scalar();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> current{initial_choice()};
  return current;
}

}  // namespace

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

bool select(std::string_view name) noexcept {
  const KernelTable* t = lookup(name);
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace cavlab::kernels
