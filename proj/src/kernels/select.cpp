#include <cstdlib>
#include <string_view>

#include "fleetsim/kernels.hpp"

namespace fleetsim::kernels {

const KernelTable& active() {
  static const KernelTable& chosen = [&]() -> const KernelTable& {
    const char* forced = std::getenv("FLEETSIM_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar();
    if (const KernelTable* wide = avx2()) return *wide;
    return scalar();
  }();
  return chosen;
}

}  // namespace fleetsim::kernels
