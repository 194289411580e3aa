#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nonlocal/cantor.hpp"
#include "nonlocal/energy.hpp"

using namespace nonlocal;

namespace {

GridFunction centers(const MetricMeasureSpace& s) { return s.coords(); }

GridFunction step(Index n, Index at) {
  GridFunction f = GridFunction::Zero(n);
  f.tail(n - at).setOnes();
  return f;
}

}  // namespace

TEST_CASE("tv on uniform grids") {
  const Index n = 100;
  const auto s = MetricMeasureSpace::uniform_interval(n);
  const auto r = tv(step(n, 50), s);
  CHECK(r.value == 1.0);
  CHECK(r.variant == "raw");
  CHECK(r.per_edge.size() == n - 1);
  CHECK(r.delta.value_or(-1.0) == 0.0);

  const auto lin = tv(centers(s), s);
  CHECK(lin.value == doctest::Approx(1.0 - 1.0 / n).epsilon(1e-12));

  const auto lsc = tv(step(n, 50), s, 0.1);
  CHECK(lsc.variant == "lsc");
  CHECK(*lsc.delta == 0.1);
  CHECK(lsc.value == 1.0);

  CHECK(tv(GridFunction::Constant(n, 3.0), s).value == 0.0);
  CHECK_THROWS_AS(tv(GridFunction::Zero(n - 1), s), ValidationError);
  CHECK_THROWS_AS(tv(step(n, 50), s, -0.1), ValidationError);
}

TEST_CASE("tv envelope on a weight-2 block") {
  const Index n = 64;
  Vector w = Vector::Ones(n);
  w(31) = w(32) = 2.0;
  const auto s = MetricMeasureSpace::weighted_interval(n, w);
  const auto f = step(n, 32);  // jump between the two heavy cells
  CHECK(tv(f, s).value == 2.0);
  CHECK(tv(f, s, 0.5 / n).value == 2.0);
  CHECK(tv(f, s, 1.5 / n).value == 1.0);

  const auto e = tv_edge_weights(s, 1.5 / n);
  CHECK(e(31) == 1.0);
  CHECK(tv_edge_weights(s, 0.0)(31) == 2.0);
  CHECK(tv_edge_weights(s, 0.0)(30) == 1.0);
}

TEST_CASE("tv on the Cantor density") {
  const auto spec = fat_cantor(3);
  const auto s = cantor_space(spec, Index{1} << 14);
  const auto cf = cantor_function(spec, s);
  // 4 L_3 = 9/4 up to one cell per component boundary.
  CHECK(std::abs(tv(cf.f, s).value - 2.25) < 2e-3);

  // The envelope can only lower the edge weights.
  double prev = tv(cf.f, s).value;
  for (double delta : {1e-4, 1e-3, 1e-2, 0.05, 0.2}) {
    const double v = tv(cf.f, s, delta).value;
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
  // delta = diam uses the global minimum weight.
  const auto flat = tv(cf.f, s, 1.0);
  CHECK(flat.value == doctest::Approx((cf.f.tail(s.size() - 1) - cf.f.head(s.size() - 1)).cwiseAbs().sum())
                          .epsilon(1e-12));
}

TEST_CASE("tv requires an interval space") {
  Matrix d(2, 2);
  d << 0, 1, 1, 0;
  const auto s = MetricMeasureSpace::from_matrix(d, Vector::Ones(2));
  CHECK_THROWS_WITH_AS(tv(GridFunction::Ones(2), s), doctest::Contains("tv_relax"), ValidationError);
}

TEST_CASE("relaxed tv of a step") {
  const Index n = 200;
  const auto s = MetricMeasureSpace::uniform_interval(n);
  // Raising the low side by a and lowering the high side by b costs (a + b)/2 in L1.
  const auto r = tv_relax(step(n, 100), s, {0.3, 0.1, 0.01, 1e-6});
  REQUIRE(r.curve.size() == 4);
  CHECK(r.variant == "relaxed");
  const double expect[] = {0.4, 0.8, 0.98, 1.0 - 2e-6};
  for (std::size_t k = 0; k < 4; ++k) CHECK(r.curve[k].value == doctest::Approx(expect[k]).epsilon(1e-4));
  CHECK(r.value == r.curve.back().value);

  const auto zero = tv_relax(step(n, 100), s, {0.6});
  CHECK(zero.value <= 1e-4);

  CHECK_THROWS_AS(tv_relax(step(n, 100), s, {0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(tv_relax(step(n, 100), s, {0.1, 0.1}), ValidationError);
  CHECK_THROWS_AS(tv_relax(step(n, 100), s, {0.0}), ValidationError);
}

TEST_CASE("relaxed tv approaches the raw value on the Cantor density") {
  const auto spec = fat_cantor(3);
  const auto s = cantor_space(spec, 4096);
  const auto cf = cantor_function(spec, s);
  const double raw = tv(cf.f, s).value;
  const auto r = tv_relax(cf.f, s, {0.01, 1e-4, 1e-6}, 1e-4, 4);
  CHECK(r.curve.back().value <= raw * (1 + 1e-4));
  CHECK(r.curve.back().value >= raw * 0.98);
  for (std::size_t k = 1; k < r.curve.size(); ++k) CHECK(r.curve[k].value >= r.curve[k - 1].value * (1 - 1e-4));
}

TEST_CASE("relaxed tv on random weighted grids") {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < 20; ++c) {
    const Index n = 16 + static_cast<Index>(unit(rng) * 240);
    Vector w(n);
    for (Index k = 0; k < n; ++k) w(k) = unit(rng) < 0.3 ? 2.0 : 1.0;
    const auto s = MetricMeasureSpace::weighted_interval(n, w);
    GridFunction f(n);
    for (Index k = 0; k < n; ++k) f(k) = std::round(unit(rng) * 8) / 4 - 1;
    const double raw = tv(f, s).value;
    const std::vector<double> sched{0.2, 0.05, 0.01, 1e-3};
    const auto r1 = tv_relax(f, s, sched, 1e-4, 1);
    const auto r3 = tv_relax(f, s, sched, 1e-4, 3);
    double prev = 0.0;
    for (std::size_t k = 0; k < sched.size(); ++k) {
      const double v = r1.curve[k].value;
      CHECK(v >= 0.0);
      CHECK(v <= raw * (1 + 1e-4) + 1e-12);
      CHECK(v >= prev * (1 - 1e-4) - 1e-12);
      CHECK(r3.curve[k].value == v);
      prev = v;
    }
  }
}

TEST_CASE("sobolev energy") {
  const Index n = 2000;
  const auto s = MetricMeasureSpace::uniform_interval(n);
  const GridFunction x = centers(s);
  CHECK(sobolev_energy(x, s, 3.0).value == doctest::Approx(1.0).epsilon(1e-12));
  const GridFunction sq = x.array().square();
  CHECK(sobolev_energy(sq, s, 2.0).value == doctest::Approx(4.0 / 3.0).epsilon(2e-3));
  CHECK(sobolev_energy(sq, s, 2.0).variant == "sobolev");

  for (double p : {1.5, 2.0, 4.0})
    for (double c : {-3.0, 0.5, 2.0})
      CHECK(sobolev_energy(c * sq, s, p).value ==
            doctest::Approx(std::pow(std::abs(c), p) * sobolev_energy(sq, s, p).value).epsilon(1e-12));

  CHECK_THROWS_AS(sobolev_energy(x, s, 1.0), ValidationError);
  CHECK(energy(x, s, 2.0).value == sobolev_energy(x, s, 2.0).value);
  CHECK(energy(x, s, 1.0, 0.1).value == tv(x, s, 0.1).value);
}
