#pragma once

// Numeric inner loops used by the road-graph shortest-path precomputation and
// the Q-network. Each kernel has a scalar reference and, on x86-64, an AVX2
// variant. The variant is picked once per process at first use; setting
// FLEETSIM_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace fleetsim::kernels {

struct KernelTable {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // Min-plus relaxation of one Floyd-Warshall row through pivot k:
  //   if via_k + row_k[j] < row[j] then row[j] = via_k + row_k[j], next[j] = next_via_k
  // Strict comparison; ties keep the existing entry.
  void (*relax_row)(double* row, std::int32_t* next, const double* row_k,
                    double via_k, std::int32_t next_via_k, std::size_t n);
};

const KernelTable& scalar();

// nullptr when the build target or the running CPU lacks AVX2/FMA.
const KernelTable* avx2();

// The table selected for this process.
const KernelTable& active();

}  // namespace fleetsim::kernels
