#include <doctest.h>

#include <cmath>

#include "gabi/rng.hpp"

using namespace gabi;

TEST_CASE("identical seeds produce identical streams") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams are independent of each other") {
  Rng a = Rng::stream(7, {streams::kAbcLatent, 0});
  Rng b = Rng::stream(7, {streams::kAbcLatent, 1});
  Rng c = Rng::stream(7, {streams::kAbcObsNoise, 0});
  int collisions = 0;
  for (int i = 0; i < 100; ++i) {
    const uint64_t va = a.next_u64();
    if (va == b.next_u64()) ++collisions;
    if (va == c.next_u64()) ++collisions;
  }
  CHECK(collisions == 0);
}

TEST_CASE("normal draws have the right first two moments") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform stays in [0,1) and uniform_pos in (0,1]") {
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double p = rng.uniform_pos();
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("below produces all residues of small moduli") {
  Rng rng(8);
  bool seen[7] = {};
  for (int i = 0; i < 1000; ++i) seen[rng.below(7)] = true;
  for (bool s : seen) CHECK(s);
}
