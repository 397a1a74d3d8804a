#include "icsim/belief_kernels.hpp"

#include <cstdlib>

namespace icsim::kernels {

bool avx2_supported() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

bool use_avx2() {
  static const bool choice = avx2_supported() && std::getenv("ICSIM_FORCE_SCALAR") == nullptr;
  return choice;
}

}  // namespace

BeliefStepFn belief_step() { return use_avx2() ? &belief_step_avx2 : &belief_step_scalar; }

std::string_view belief_step_name() { return use_avx2() ? "avx2" : "scalar"; }

}  // namespace icsim::kernels
