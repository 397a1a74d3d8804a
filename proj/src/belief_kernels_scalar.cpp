#include "icsim/belief_kernels.hpp"

namespace icsim::kernels {

double belief_step_scalar(const double* trans, const double* like, const double* in, double* out) {
  double pred[kStates] = {};
  for (std::size_t i = 0; i < kStates; ++i) {
    const double b = in[i];
    const double* row = trans + i * kStates;
    for (std::size_t j = 0; j < kStates; ++j) pred[j] += b * row[j];
  }
  double norm = 0.0;
  for (std::size_t j = 0; j < kStates; ++j) {
    out[j] = pred[j] * like[j];
    norm += out[j];
  }
  if (norm > 0.0) {
    const double inv = 1.0 / norm;
    for (std::size_t j = 0; j < kStates; ++j) out[j] *= inv;
  }
  return norm;
}

}  // namespace icsim::kernels
