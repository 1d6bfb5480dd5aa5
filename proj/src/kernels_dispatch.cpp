#include "cassi/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace cassi::kern {

const Ops& ops() {
  static const Ops* selected = [] {
    const Ops* avx2 = avx2_ops();
    if (const char* env = std::getenv("CASSI_KERNELS")) {
      if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
      if (std::strcmp(env, "avx2") == 0 && avx2) return avx2;
    }
    return avx2 ? avx2 : &scalar_ops();
  }();
  return *selected;
}

}  // namespace cassi::kern
