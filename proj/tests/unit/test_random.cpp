#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "vessal/random.hpp"

using namespace vessal;

TEST_SUITE("random") {

TEST_CASE("same seed reproduces the full draw sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 200; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(42), d(42);
  for (int i = 0; i < 200; ++i) {
    CHECK(c.uniform() == d.uniform());
    CHECK(c.gaussian() == d.gaussian());
  }
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0, 1) and fills the range") {
  Rng rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("uniform mean and variance match the flat density") {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.03));
}

TEST_CASE("uniform_int covers [0, bound) uniformly") {
  Rng rng(13);
  const std::uint64_t bound = 10;
  std::vector<int> counts(bound, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = rng.uniform_int(bound);
    REQUIRE(v < bound);
    ++counts[v];
  }
  // Each bin expects n/bound = 10000; a 5% band is ~16 sigma.
  for (int c : counts) {
    CHECK(c > 9500);
    CHECK(c < 10500);
  }
}

TEST_CASE("uniform_int with bound 1 always returns 0") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) CHECK(rng.uniform_int(1) == 0);
}

TEST_CASE("gaussian matches standard normal moments") {
  Rng rng(17);
  const int n = 400000;
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    m1 += g;
    m2 += g * g;
    m3 += g * g * g;
    m4 += g * g * g * g;
  }
  m1 /= n;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 0.01);
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(m3) < 0.05);
  CHECK(m4 == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("gaussian tail mass matches the normal CDF") {
  Rng rng(19);
  const int n = 200000;
  int beyond1 = 0, beyond2 = 0;
  for (int i = 0; i < n; ++i) {
    const double g = std::abs(rng.gaussian());
    if (g > 1.0) ++beyond1;
    if (g > 2.0) ++beyond2;
  }
  // P(|Z|>1) = 0.3173, P(|Z|>2) = 0.0455.
  CHECK(static_cast<double>(beyond1) / n == doctest::Approx(0.3173).epsilon(0.03));
  CHECK(static_cast<double>(beyond2) / n == doctest::Approx(0.0455).epsilon(0.08));
}

TEST_CASE("derive_seed separates streams and stays deterministic") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(12345, s));
  CHECK(seen.size() == 1000);
  std::set<std::uint64_t> bases;
  for (std::uint64_t b = 0; b < 1000; ++b) bases.insert(derive_seed(b, 7));
  CHECK(bases.size() == 1000);
}

TEST_CASE("seeded_shuffle emits a bijection of its input") {
  Rng rng(23);
  for (int n : {1, 2, 5, 100, 1000}) {
    std::vector<int> items = iota_permutation(n);
    seeded_shuffle(items, rng);
    std::vector<int> sorted = items;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == iota_permutation(n));
  }
}

TEST_CASE("seeded_shuffle is reproducible and seed-sensitive") {
  std::vector<int> a = iota_permutation(50);
  std::vector<int> b = iota_permutation(50);
  Rng r1(5), r2(5);
  seeded_shuffle(a, r1);
  seeded_shuffle(b, r2);
  CHECK(a == b);

  std::vector<int> c = iota_permutation(50);
  Rng r3(6);
  seeded_shuffle(c, r3);
  CHECK(a != c);
}

TEST_CASE("seeded_shuffle visits permutations uniformly on a small set") {
  // 3 elements, 6 permutations; each should get about n/6.
  std::map<std::vector<int>, int> counts;
  Rng rng(29);
  const int n = 60000;
  for (int i = 0; i < n; ++i) {
    std::vector<int> items = {0, 1, 2};
    seeded_shuffle(items, rng);
    ++counts[items];
  }
  CHECK(counts.size() == 6);
  for (const auto& [perm, c] : counts) {
    CHECK(c > 9500);
    CHECK(c < 10500);
  }
}

TEST_CASE("iota_permutation is the identity") {
  const std::vector<int> p = iota_permutation(5);
  REQUIRE(p.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(p[i] == i);
  CHECK(iota_permutation(0).empty());
}

}  // TEST_SUITE
