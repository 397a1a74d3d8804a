#pragma once

#include <cstddef>
#include <string_view>

namespace icsim::kernels {

inline constexpr std::size_t kStates = 12;

/// One predict-correct step for a 12-state belief:
///   out[j] = like[j] * sum_i in[i] * trans[i * 12 + j]
/// normalized to sum 1. Returns the normalizer; when it is zero `out` is left
/// unnormalized (all zeros) and the caller decides how to recover.
using BeliefStepFn = double (*)(const double* trans, const double* like, const double* in, double* out);

double belief_step_scalar(const double* trans, const double* like, const double* in, double* out);
/// AVX2/FMA variant. Only call when avx2_supported() is true.
double belief_step_avx2(const double* trans, const double* like, const double* in, double* out);

bool avx2_supported();

/// Kernel chosen at first use: AVX2 when the CPU supports it and the
/// ICSIM_FORCE_SCALAR environment variable is unset.
BeliefStepFn belief_step();
std::string_view belief_step_name();

}  // namespace icsim::kernels
