#include <atomic>
#include <cstdlib>
#include <string_view>

#include "dagalpha/kernels.hpp"

namespace dagalpha::kernels {

#ifdef DAGALPHA_HAVE_AVX2
namespace avx2 {
const KernelTable& table();
}
#endif

namespace {

const KernelTable* detect() {
  const char* forced = std::getenv("DAGALPHA_ISA");
  if (forced != nullptr && std::string_view(forced) == "scalar") return &scalar_table();
  if (const auto* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> active{detect()};
  return active;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_table() {
#ifdef DAGALPHA_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2::table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool set_active(Isa isa) {
  const KernelTable* t = isa == Isa::scalar ? &scalar_table() : avx2_table();
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace dagalpha::kernels
