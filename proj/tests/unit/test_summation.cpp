#include <random>
#include <vector>

#include "doctest.h"
#include "nonlocal/quadrature.hpp"
#include "nonlocal/summation.hpp"

using namespace nonlocal;

TEST_CASE("pairwise_sum matches exact integer sums") {
  std::vector<double> v(1000);
  for (int k = 0; k < 1000; ++k) v[k] = k + 1;
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::span<const double>{}) == 0.0);
}

TEST_CASE("deterministic_sum is bit-identical across worker counts") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(100'003);
  for (auto& x : v) x = u(rng) * 1e3;
  auto term = [&](Index k) { return v[static_cast<std::size_t>(k)]; };
  const double one = deterministic_sum(static_cast<Index>(v.size()), 1, term);
  for (int w : {2, 3, 8}) CHECK(deterministic_sum(static_cast<Index>(v.size()), w, term) == one);
}

TEST_CASE("parallel_blocks visits every block once") {
  std::vector<int> hits(257, 0);
  parallel_blocks(257, 6, [&](Index b) { ++hits[static_cast<std::size_t>(b)]; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("quadrature reproduces closed forms") {
  using namespace quadrature;
  CHECK(integrate([](double x) { return x * x; }, 0.0, 3.0) == doctest::Approx(9.0).epsilon(1e-13));
  CHECK(integrate_upper([](double x) { return std::exp(-x); }, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  // Slowly decaying exponential: int_{-inf}^0 e^{0.001 x} dx = 1000.
  CHECK(integrate_lower([](double x) { return std::exp(1e-3 * x); }, 0.0) ==
        doctest::Approx(1000.0).epsilon(1e-10));
}
