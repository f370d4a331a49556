#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fleetsim/kernels.hpp"
#include "fleetsim/random.hpp"

using namespace fleetsim;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * uniform01(rng);
  return v;
}

}  // namespace

TEST_CASE("active kernel table is one of the known variants") {
  const auto& k = kernels::active();
  CHECK((k.name == "scalar" || k.name == "avx2"));
  CHECK(kernels::scalar().name == "scalar");
}

TEST_CASE("scalar dot and axpy on a hand example") {
  const auto& k = kernels::scalar();
  const double a[] = {1, 2, 3};
  const double b[] = {4, -5, 6};
  CHECK(k.dot(a, b, 3) == doctest::Approx(12.0));
  CHECK(k.dot(a, b, 0) == 0.0);
  double y[] = {1, 1, 1};
  k.axpy(2.0, a, y, 3);
  CHECK(y[0] == 3.0);
  CHECK(y[2] == 7.0);
}

TEST_CASE("relax_row keeps ties and takes strict improvements") {
  const auto& k = kernels::scalar();
  const double inf = std::numeric_limits<double>::infinity();
  double row[] = {5.0, 3.0, inf, 1.0};
  std::int32_t next[] = {0, 1, -1, 3};
  const double row_k[] = {2.0, 1.0, 4.0, 0.5};
  k.relax_row(row, next, row_k, 2.0, 9, 4);
  CHECK(row[0] == 4.0);
  CHECK(next[0] == 9);
  CHECK(row[1] == 3.0);  // tie keeps the existing entry
  CHECK(next[1] == 1);
  CHECK(row[2] == 6.0);
  CHECK(next[2] == 9);
  CHECK(row[3] == 1.0);
  CHECK(next[3] == 3);
}

TEST_CASE("avx2 kernels match the scalar reference") {
  const kernels::KernelTable* v = kernels::avx2();
  if (v == nullptr) {
    MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
    return;
  }
  const auto& s = kernels::scalar();
  Rng rng(7);
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto a = random_vec(rng, n, -3, 3);
    const auto b = random_vec(rng, n, -3, 3);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    CHECK(std::abs(v->dot(a.data(), b.data(), n) - s.dot(a.data(), b.data(), n)) <= 1e-12 * (1.0 + mag));

    auto y1 = random_vec(rng, n, -1, 1);
    auto y2 = y1;
    s.axpy(0.37, a.data(), y1.data(), n);
    v->axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-14 * (1.0 + std::abs(y1[i])));

    // Min-plus uses one addition and one comparison per entry, so it is exact.
    auto r1 = random_vec(rng, n, 0, 10);
    for (std::size_t i = 0; i < n; i += 5) r1[i] = std::numeric_limits<double>::infinity();
    auto r2 = r1;
    const auto rk = random_vec(rng, n, 0, 5);
    std::vector<std::int32_t> n1(n, -1), n2(n, -1);
    s.relax_row(r1.data(), n1.data(), rk.data(), 2.5, 42, n);
    v->relax_row(r2.data(), n2.data(), rk.data(), 2.5, 42, n);
    CHECK(r1 == r2);
    CHECK(n1 == n2);
  }
}
