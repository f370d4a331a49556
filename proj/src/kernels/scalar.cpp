#include "fleetsim/kernels.hpp"

namespace fleetsim::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void relax_row_scalar(double* row, std::int32_t* next, const double* row_k,
                      double via_k, std::int32_t next_via_k, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double candidate = via_k + row_k[j];
    if (candidate < row[j]) {
      row[j] = candidate;
      next[j] = next_via_k;
    }
  }
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar, relax_row_scalar};
  return table;
}

}  // namespace fleetsim::kernels
