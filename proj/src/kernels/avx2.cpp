#include "fleetsim/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define FLEETSIM_HAVE_AVX2_KERNELS 1
#else
#define FLEETSIM_HAVE_AVX2_KERNELS 0
#endif

namespace fleetsim::kernels {

#if FLEETSIM_HAVE_AVX2_KERNELS
namespace {

#define FLEETSIM_AVX2 __attribute__((target("avx2,fma")))

FLEETSIM_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc0);
  const __m128d hi = _mm256_extractf128_pd(acc0, 1);
  __m128d sum2 = _mm_add_pd(lo, hi);
  sum2 = _mm_add_sd(sum2, _mm_unpackhi_pd(sum2, sum2));
  double sum = _mm_cvtsd_f64(sum2);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

FLEETSIM_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

FLEETSIM_AVX2 void relax_row_avx2(double* row, std::int32_t* next, const double* row_k,
                                  double via_k, std::int32_t next_via_k, std::size_t n) {
  const __m256d via = _mm256_set1_pd(via_k);
  const __m128i hop = _mm_set1_epi32(next_via_k);
  // Gathers the low 32 bits of each 64-bit mask lane into the low 128 bits.
  const __m256i pack = _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d current = _mm256_loadu_pd(row + j);
    const __m256d candidate = _mm256_add_pd(via, _mm256_loadu_pd(row_k + j));
    const __m256d better = _mm256_cmp_pd(candidate, current, _CMP_LT_OQ);
    if (_mm256_movemask_pd(better) == 0) continue;
    _mm256_storeu_pd(row + j, _mm256_blendv_pd(current, candidate, better));
    const __m128i mask32 = _mm256_castsi256_si128(
        _mm256_permutevar8x32_epi32(_mm256_castpd_si256(better), pack));
    const __m128i old_next = _mm_loadu_si128(reinterpret_cast<const __m128i*>(next + j));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(next + j), _mm_blendv_epi8(old_next, hop, mask32));
  }
  for (; j < n; ++j) {
    const double candidate = via_k + row_k[j];
    if (candidate < row[j]) {
      row[j] = candidate;
      next[j] = next_via_k;
    }
  }
}

#undef FLEETSIM_AVX2

}  // namespace

const KernelTable* avx2() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const KernelTable table{"avx2", dot_avx2, axpy_avx2, relax_row_avx2};
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2() { return nullptr; }

#endif

}  // namespace fleetsim::kernels
