#include <cstdlib>
#include <string>

#include "npgnn/kernels.hpp"

namespace npgnn::kernels {

const Ops& active() {
  static const Ops* selected = [] {
    const char* env = std::getenv("NPGNN_KERNELS");
    if (env) {
      std::string want(env);
      if (want == "scalar") return &scalar_ops();
      if (want == "avx2" && avx2_ops()) return avx2_ops();
    }
    if (const Ops* simd = avx2_ops()) return simd;
    return &scalar_ops();
  }();
  return *selected;
}

}  // namespace npgnn::kernels
