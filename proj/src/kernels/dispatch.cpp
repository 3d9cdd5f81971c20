#include <atomic>
#include <cstdlib>
#include <string_view>

#include "uqbot/kernels.hpp"

namespace uqbot::kernels {
namespace {

const KernelTable* detect() noexcept {
  if (const char* env = std::getenv("UQBOT_KERNELS"); env && std::string_view(env) == "scalar") {
    return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) noexcept {
  const KernelTable* t = nullptr;
  switch (isa) {
    case Isa::scalar: t = &scalar_table(); break;
    case Isa::avx2: t = avx2_table(); break;
    case Isa::neon: t = neon_table(); break;
  }
  if (!t) return false;
  current().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace uqbot::kernels
