// Compiled with -ffast-math so the simd loops below can call the glibc
// vector math library. Inputs are finite by the network invariants.
#include <cmath>

#include "mqf/kernels.hpp"

namespace mqf::kernels {

void tanh_inplace(std::span<double> values) {
  double* v = values.data();
  const std::size_t n = values.size();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
}

void relu_inplace(std::span<double> values) {
  double* v = values.data();
  const std::size_t n = values.size();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

}  // namespace mqf::kernels
