#include "icsim/belief_kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace icsim::kernels {

#if defined(__AVX2__) && defined(__FMA__)

double belief_step_avx2(const double* trans, const double* like, const double* in, double* out) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd();
  for (std::size_t i = 0; i < kStates; ++i) {
    const __m256d b = _mm256_broadcast_sd(in + i);
    const double* row = trans + i * kStates;
    a0 = _mm256_fmadd_pd(b, _mm256_loadu_pd(row), a0);
    a1 = _mm256_fmadd_pd(b, _mm256_loadu_pd(row + 4), a1);
    a2 = _mm256_fmadd_pd(b, _mm256_loadu_pd(row + 8), a2);
  }
  a0 = _mm256_mul_pd(a0, _mm256_loadu_pd(like));
  a1 = _mm256_mul_pd(a1, _mm256_loadu_pd(like + 4));
  a2 = _mm256_mul_pd(a2, _mm256_loadu_pd(like + 8));

  // Summed in index order, as in the scalar loop.
  alignas(32) double tmp[kStates];
  _mm256_store_pd(tmp, a0);
  _mm256_store_pd(tmp + 4, a1);
  _mm256_store_pd(tmp + 8, a2);
  double norm = 0.0;
  for (std::size_t j = 0; j < kStates; ++j) norm += tmp[j];

  if (norm > 0.0) {
    const __m256d inv = _mm256_set1_pd(1.0 / norm);
    a0 = _mm256_mul_pd(a0, inv);
    a1 = _mm256_mul_pd(a1, inv);
    a2 = _mm256_mul_pd(a2, inv);
  }
  _mm256_storeu_pd(out, a0);
  _mm256_storeu_pd(out + 4, a1);
  _mm256_storeu_pd(out + 8, a2);
  return norm;
}

#else

double belief_step_avx2(const double* trans, const double* like, const double* in, double* out) {
  return belief_step_scalar(trans, like, in, out);
}

#endif

}  // namespace icsim::kernels
