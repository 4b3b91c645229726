#include <doctest.h>

#include <set>
#include <stdexcept>

#include "asrsplit/parallel.hpp"
#include "asrsplit/rng.hpp"

using namespace asrsplit;

TEST_SUITE("rng") {

TEST_CASE("derived seeds are stable and name-separated") {
  CHECK(derive_seed(7, "random", 0) == derive_seed(7, "random", 0));
  std::set<std::uint64_t> seen;
  for (const char* name : {"random", "adversarial", "mock-asr"}) {
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(7, name, i));
  }
  CHECK(seen.size() == 150);
  CHECK(derive_seed(7, "random") != derive_seed(8, "random"));
}

TEST_CASE("engine output is pinned") {
  // mt19937_64 is fully specified, so these values hold on every platform.
  Rng a(1), b(1);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  std::mt19937_64 ref(splitmix64(42));
  Rng c(42);
  CHECK(c.next() == ref());
}

TEST_CASE("sampling helpers stay in range") {
  Rng r(3);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(r.below(7) < 7);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation") {
  Rng r(9);
  std::vector<int> xs{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  r.shuffle(std::span<int>(xs));
  std::set<int> s(xs.begin(), xs.end());
  CHECK(s.size() == 10);
}

}

TEST_SUITE("parallel") {

TEST_CASE("results land in their own slots regardless of workers") {
  for (std::size_t w : {1u, 2u, 4u}) {
    std::vector<std::size_t> out(100);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = i * i; }, w);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
  }
}

TEST_CASE("the lowest-index exception is rethrown") {
  for (std::size_t w : {1u, 3u}) {
    try {
      parallel_for(
          20,
          [](std::size_t i) {
            if (i == 5 || i == 13) throw std::runtime_error("at " + std::to_string(i));
          },
          w);
      FAIL("expected exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "at 5");
    }
  }
}

TEST_CASE("zero items is a no-op") {
  bool touched = false;
  parallel_for(0, [&](std::size_t) { touched = true; }, 4);
  CHECK_FALSE(touched);
}

}
