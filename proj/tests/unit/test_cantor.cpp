#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "nonlocal/cantor.hpp"
#include "nonlocal/energy.hpp"

using namespace nonlocal;

namespace {

double len(const FatCantorSpec& s, const DyadicInterval& iv) { return static_cast<double>(iv.hi - iv.lo) * s.scale(); }

std::vector<double> resolved_scales(Index n) {
  std::vector<double> r;
  for (double t = 0.25; t * static_cast<double>(n) >= 16.0; t /= 2) r.push_back(t);
  return r;
}

}  // namespace

TEST_CASE("first levels") {
  const auto s1 = fat_cantor(1);
  CHECK(s1.lengths[1] == 0.75);
  REQUIRE(s1.gaps[1].size() == 1);
  CHECK(static_cast<double>(s1.gaps[1][0].lo) * s1.scale() == 0.375);
  CHECK(static_cast<double>(s1.gaps[1][0].hi) * s1.scale() == 0.625);

  const auto s2 = fat_cantor(2);
  CHECK(s2.lengths[2] == 0.625);
  REQUIRE(s2.gaps[2].size() == 2);
  for (const auto& g : s2.gaps[2]) CHECK(len(s2, g) == 1.0 / 16);

  CHECK_THROWS_AS(fat_cantor(0), ValidationError);
  CHECK_THROWS_AS(fat_cantor(13), ValidationError);
}

TEST_CASE("construction invariants") {
  for (int m = 1; m <= 12; ++m) {
    const auto s = fat_cantor(m);
    CHECK(s.lengths[0] == 1.0);
    CHECK(s.lengths[static_cast<std::size_t>(m)] == 0.5 + std::ldexp(1.0, -m - 1));
    double removed = 0.0;
    for (int i = 1; i <= m; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      CHECK(s.lengths[ui] == s.lengths[ui - 1] - std::ldexp(1.0, -i - 1));
      REQUIRE(s.gaps[ui].size() == std::size_t{1} << (i - 1));
      for (const auto& g : s.gaps[ui]) {
        CHECK(len(s, g) == std::ldexp(1.0, -2 * i));
        removed += len(s, g);
      }
      REQUIRE(s.components[ui].size() == std::size_t{1} << i);
      double total = 0.0;
      for (std::size_t k = 0; k < s.components[ui].size(); ++k) {
        const auto& c = s.components[ui][k];
        total += len(s, c);
        if (k > 0) CHECK(s.components[ui][k - 1].hi < c.lo);
        // Nested in a component of the previous level.
        bool inside = false;
        for (const auto& p : s.components[ui - 1]) inside = inside || (p.lo <= c.lo && c.hi <= p.hi);
        CHECK(inside);
      }
      CHECK(total == s.lengths[ui]);
    }
    CHECK(removed + s.lengths[static_cast<std::size_t>(m)] == 1.0);
  }
}

TEST_CASE("Cantor spaces") {
  const auto s1 = fat_cantor(1);
  const auto sp1 = cantor_space(s1, 64);
  int light = 0;
  for (Index k = 0; k < 64; ++k)
    if (sp1.weights()(k) == 1.0) {
      ++light;
      CHECK(k >= 24);
      CHECK(k < 40);
    }
  CHECK(light == 16);

  const auto s3 = fat_cantor(3);
  const auto sp3 = cantor_space(s3, Index{1} << 14);
  CHECK(std::abs(sp3.total_mass() - 1.5625) <= std::ldexp(1.0, -14));
  CHECK_THROWS_WITH_AS(cantor_space(s3, 255), doctest::Contains("256"), ValidationError);

  const auto sp = cantor_space(s3, 4096);
  CHECK(estimate_doubling(sp, resolved_scales(4096)) <= 4.0);
}

TEST_CASE("Cantor function and approximants") {
  const int m = 3;
  const auto spec = fat_cantor(m);
  const Index n = Index{1} << 14;
  const auto sp = cantor_space(spec, n);
  const auto cf = cantor_function(spec, sp);
  const double lm = spec.lengths[m];
  const double h = 1.0 / static_cast<double>(n);
  CHECK(std::abs(cf.f(n - 1) - 2 * lm) <= std::ldexp(1.0, -12));
  CHECK(cf.f(0) <= h);
  CHECK(0.5 * (cf.f(n / 2 - 1) + cf.f(n / 2)) == doctest::Approx(lm).epsilon(1e-12));
  for (Index k = 1; k < n; ++k) CHECK(cf.f(k) >= cf.f(k - 1));

  REQUIRE(cf.approximants.size() == static_cast<std::size_t>(m + 1));
  for (int i = 1; i <= m; ++i) {
    const auto& g = cf.densities[static_cast<std::size_t>(i)];
    CHECK(std::abs(g.dot(sp.mass()) - 1.0) <= 1e-10);
    CHECK(std::abs(g.sum() * h - 1.0) <= 1e-10);
  }

  // At finite depth int g = 2 L_m, so the comparison holds for f / (2 L_m);
  // the unnormalized f picks up at most 2 L_m - 1 more.
  const GridFunction normalized = cf.f / (2 * lm);
  for (int i = 1; i < m; ++i) {
    const auto& next = cf.approximants[static_cast<std::size_t>(i + 1)];
    const double bound = std::ldexp(1.0, -i);
    CHECK((next - normalized).cwiseAbs().maxCoeff() <= bound + 1e-12);
    CHECK((next - cf.f).cwiseAbs().maxCoeff() <= bound + (2 * lm - 1) + 1e-12);
  }
  // f_i agrees with the normalized f off A_{i-1}, i.e. on the earlier gaps.
  for (int i = 2; i <= m; ++i)
    for (Index k = 0; k < n; ++k) {
      bool in_earlier_gap = false;
      for (int j = 1; j < i; ++j) in_earlier_gap = in_earlier_gap || spec.in_gap(j, 2 * k + 1, 2 * n);
      if (in_earlier_gap)
        CHECK(cf.approximants[static_cast<std::size_t>(i)](k) == doctest::Approx(normalized(k)).epsilon(1e-12));
    }

  CHECK_THROWS_AS(cantor_function(fat_cantor(2), sp), ValidationError);
}

TEST_CASE("tent function") {
  const auto sp = MetricMeasureSpace::uniform_interval(8);
  const auto t = tent_function(sp, 0.25, 0.75, 2.0);
  CHECK(t(0) == 0.0);
  CHECK(t(3) == doctest::Approx(1.5));
  CHECK(t(4) == doctest::Approx(1.5));
  CHECK(t(7) == 0.0);
  CHECK_THROWS_AS(tent_function(sp, 0.5, 0.5), ValidationError);
}

TEST_CASE("counterexample report") {
  const std::vector<double> radii{std::ldexp(1.0, -5), std::ldexp(1.0, -7), std::ldexp(1.0, -9)};
  const auto rep = run_counterexample(3, Index{1} << 14, radii, 0.05, 4);
  CHECK(rep.tv_reference == 1.0);
  CHECK(rep.predicted_limit == 4.5);
  CHECK(rep.resolved == std::vector<bool>{false, true, true});
  for (double v : rep.functional_values) CHECK(v >= 0.0);
  CHECK(std::abs(rep.functional_values.back() - 4.5) <= 0.45);
  CHECK(rep.lower_bound_check);
  const double a = rep.functional_values[1], b = rep.functional_values[2];
  CHECK(std::abs(a - b) <= 0.1 * std::max(a, b));
  CHECK(rep.gap_scale == 0.125);
  CHECK(rep.tv_discrete_gapscale == doctest::Approx(1.125).epsilon(1e-3));
  CHECK(std::abs(rep.tv_discrete_delta0 - 2.25) < 0.01);
  CHECK(rep.bump_tv == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(std::abs(rep.bump_functional - 2.0) <= 0.1);
  CHECK(std::abs(rep.bump_ratio - 1.0) <= 0.05);

  CHECK_THROWS_AS(run_counterexample(3, 4096, {0.1, 0.02}), ValidationError);  // 0.02 >= 2^-6
  CHECK_THROWS_AS(run_counterexample(3, 256, {0.1, 0.01}), ValidationError);   // under 8 cells
  CHECK_THROWS_AS(run_counterexample(3, 4096, {0.005, 0.01}), ValidationError);
}
