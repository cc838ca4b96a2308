#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "suffice/rng.hpp"

using suffice::derive_seed;
using suffice::Rng;

TEST_SUITE("rng") {

TEST_CASE("same seed reproduces the stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.uniform01() == b.uniform01());
  }
}

TEST_CASE("uniform01 stays in [0,1)") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("bernoulli frequency tracks p") {
  Rng rng(7);
  int count = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) count += rng.bernoulli(0.3) ? 1 : 0;
  const double freq = static_cast<double>(count) / n;
  CHECK(freq > 0.28);
  CHECK(freq < 0.32);
}

TEST_CASE("normal moments are sane") {
  Rng rng(13);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("uniform_index is in range and covers values") {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const std::uint64_t k = rng.uniform_index(7);
    REQUIRE(k < 7);
    counts[static_cast<std::size_t>(k)]++;
  }
  for (int c : counts) CHECK(c > 700);
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng a(99), b(99);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::sort(w.begin(), w.end());
  std::vector<int> expect(20);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(w == expect);
}

TEST_CASE("derive_seed separates streams") {
  const std::uint64_t base = 1234;
  CHECK(derive_seed(base, 1) != derive_seed(base, 2));
  CHECK(derive_seed(base, 1) != derive_seed(base + 1, 1));
  CHECK(derive_seed(base, 1) == derive_seed(base, 1));
}

}  // TEST_SUITE
