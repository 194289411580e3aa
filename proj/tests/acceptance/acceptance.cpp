// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nonlocal/cantor.hpp"
#include "nonlocal/energy.hpp"
#include "nonlocal/functional.hpp"
#include "nonlocal/mollifier.hpp"
#include "nonlocal/smoothing.hpp"
#include "nonlocal/space.hpp"

using namespace nonlocal;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string first_failure;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) first_failure = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<double> dyadic_scales(Index n) {
  std::vector<double> r;
  for (double t = 0.5; t * static_cast<double>(n) >= 8.0; t /= 2) r.push_back(t);
  return r;
}

std::vector<double> fractional_sequence(int count) {
  std::vector<double> s;
  for (int i = 1; i <= count; ++i) s.push_back(1.0 - std::ldexp(1.0, -i));
  return s;
}

GridFunction step_at(const MetricMeasureSpace& s, double at) {
  return (s.coords().array() >= at).cast<double>();
}

// ---------------------------------------------------------------------------

void identity_calibration(Outcome& out, int workers) {
  const Index n = 4096;
  const auto s = MetricMeasureSpace::uniform_interval(n);
  const auto fam = MollifierFamily::indicator({0.1, 0.05, 0.01}, Normalization::mu_ball);
  EvaluateOptions opt;
  opt.workers = workers;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto t0 = Clock::now();
    const double v = evaluate(s, s.coords(), fam, i, full_mask(n), opt).value;
    const double sec = seconds_since(t0);
    out.detail << " r=" << fmt(fam.params()[i]) << ":" << fmt(v) << " (" << fmt(sec) << " s)";
    out.require(std::abs(v - 1.0) <= 0.01, "value off 1 by more than 0.01");
    out.require(sec < 1.0, "runtime over 1 s");
  }
}

void davila_identity(Outcome& out, int workers) {
  const Index n = 4096;
  const auto s = MetricMeasureSpace::uniform_interval(n);
  const auto fam = MollifierFamily::indicator({0.1, 0.05, 0.025, 0.0125}, Normalization::lebesgue_1d);
  EvaluateOptions opt;
  opt.workers = workers;
  const auto sw = sweep(s, step_at(s, 0.5), fam, full_mask(n), 3, opt);
  for (std::size_t i = 0; i < sw.values.size(); ++i)
    out.detail << " r=" << fmt(sw.index_params[i]) << ":" << fmt(sw.values[i]);
  out.require(std::abs(sw.values.back() - 1.0) <= 0.02, "smallest radius off TV=1 by more than 2%");
}

void sobolev_case(Outcome& out, int workers) {
  const Index n = 4096;
  const auto s = MetricMeasureSpace::uniform_interval(n);
  const GridFunction sq = s.coords().array().square();
  const auto fam = MollifierFamily::window(2.0, {0.1, 0.05, 0.02, 0.01, 0.005});
  EvaluateOptions opt;
  opt.workers = workers;
  const auto sw = sweep(s, sq, fam, full_mask(n), 3, opt);
  const double target = 4.0 / 3.0;
  out.detail << " tail=[" << fmt(sw.tail_lo) << ", " << fmt(sw.tail_hi) << "] target " << fmt(target);
  out.require(std::abs(sw.tail_lo - target) <= 0.02 * target && std::abs(sw.tail_hi - target) <= 0.02 * target,
              "window tail not within 2% of 4/3");

  const double e1 = sobolev_energy(sq, s, 2.0).value;
  const auto s2 = MetricMeasureSpace::uniform_interval(2 * n);
  const double e2 = sobolev_energy(GridFunction(s2.coords().array().square()), s2, 2.0).value;
  out.detail << "; sobolev n=" << n << ":" << fmt(e1) << " 2n:" << fmt(e2);
  out.require(std::abs(e1 - e2) <= 0.005 * e2, "sobolev energy refinement differs by more than 0.5%");
}

void fractional_certification(Outcome& out, int workers) {
  const Index n = 1024;
  const auto s = MetricMeasureSpace::uniform_interval(n);
  const double cd = estimate_doubling(s, dyadic_scales(n));
  const auto seq = fractional_sequence(10);
  const auto fam = MollifierFamily::fractional(1.0, seq);
  AdmissibilityOptions opt;
  opt.workers = workers;
  const auto rep = check_admissibility(fam, s, {0.5, 0.1}, full_mask(n), opt);
  double worst = 0.0;
  for (std::size_t k = 0; k < rep.deltas.size(); ++k)
    for (std::size_t i = 0; i < seq.size(); ++i)
      worst = std::max(worst, std::abs(rep.nu_mass[k][i] - seq[i] * std::pow(rep.deltas[k], 1.0 - seq[i])));
  const double maj = *std::max_element(rep.majorant_sums.begin(), rep.majorant_sums.end());
  out.detail << " nu-mass err " << fmt(worst) << "; majorant max " << fmt(maj) << " vs 4*C_d=" << fmt(4 * cd)
             << "; verdict " << (rep.pass ? "pass" : "fail");
  out.require(worst <= 1e-3, "nu-mass off closed form by more than 1e-3");
  out.require(maj <= 4 * cd, "majorant sum above 4 C_d");
  out.require(rep.pass, "fractional verdict fail");

  const auto ring = MollifierFamily::ring(1.0, 0.5, 0.01, 5);
  const auto rr = check_admissibility(ring, s, {0.25}, full_mask(n), opt);
  bool tail_named = false;
  for (const auto& f : rr.failures) tail_named = tail_named || f.find("tail decay") != std::string::npos;
  out.detail << "; ring verdict " << (rr.pass ? "pass" : "fail");
  out.require(!rr.pass && !rr.tail_ok && tail_named, "ring kernel not rejected on the tail condition");
}

void counterexample(Outcome& out, int workers) {
  const auto t0 = Clock::now();
  const std::vector<double> radii{std::ldexp(1.0, -5), std::ldexp(1.0, -7), std::ldexp(1.0, -9)};
  const auto a = run_counterexample(3, Index{1} << 14, radii, 0.05, workers);
  const auto b = run_counterexample(3, Index{1} << 15, radii, 0.05, workers);
  const double sec = seconds_since(t0);
  const double va = a.functional_values.back(), vb = b.functional_values.back();
  out.detail << " n=2^14:" << fmt(va) << " n=2^15:" << fmt(vb) << " predicted " << fmt(a.predicted_limit)
             << "; bump ratio " << fmt(a.bump_ratio) << "; " << fmt(sec) << " s";
  out.require(a.lower_bound_check && va >= 2 * 0.95, "functional below 2(1-eps)");
  out.require(std::abs(va - 4.5) <= 0.45, "n=2^14 not within 10% of 8 L_3");
  out.require(std::abs(vb - 4.5) <= 0.45, "n=2^15 not within 10% of 8 L_3");
  out.require(std::abs(a.bump_ratio - 1.0) <= 0.05, "bump ratio not within 5% of 1");
  out.require(sec < 60.0, "runtime over 60 s");
}

void smoothing_suite(Outcome& out, int workers) {
  const Index n = 2048;
  const auto s = MetricMeasureSpace::uniform_interval(n);
  const GridFunction x = s.coords();
  const auto spec = fat_cantor(3);
  const GridFunction cantor = cantor_function(spec, cantor_space(spec, n)).f;
  const std::vector<std::string> labels{"x", "x^2", "sqrt x", "step 0.5", "step 0.3", "tent", "sin", "|x-1/2|",
                                        "cantor", "x^3-x"};
  const std::vector<GridFunction> suite{
      x,
      x.array().square(),
      x.array().sqrt(),
      step_at(s, 0.5),
      step_at(s, 0.3),
      tent_function(s, 0.375, 0.625),
      (2 * M_PI * x.array()).sin(),
      (x.array() - 0.5).abs(),
      cantor,
      x.array().cube() - x.array(),
  };
  const DomainMask u = interval_mask(s, 0.2, 0.8);
  const std::vector<double> scales{0.1, 0.05, 0.025};
  int cases = 0, lip_pass = 0, max_classes = 0, decreasing = 0;
  std::string not_decreasing;
  double worst_sum = 0.0, worst_ratio = 0.0;
  for (std::size_t fi = 0; fi < suite.size(); ++fi) {
    double prev = INFINITY;
    bool strict = true;
    for (double R : scales) {
      const auto cov = cover(s, u, R);
      for (std::size_t a = 0; a < cov.centers.size(); ++a)
        for (std::size_t b = a + 1; b < cov.centers.size(); ++b)
          out.require(s.dist(cov.centers[a], cov.centers[b]) >= 2 * cov.seed_radius, "seed balls overlap");
      max_classes = std::max(max_classes, cov.n_classes);
      out.require(cov.n_classes <= 256, "more than 256 overlap classes");
      const auto pou = partition_of_unity(s, cov);
      for (Index k = 0; k < n; ++k)
        if (cov.target(k)) worst_sum = std::max(worst_sum, std::abs(pou.phi.row(k).sum() - 1.0));
      const auto h = discrete_convolve(s, suite[fi], cov, pou);
      double l1 = 0.0;
      for (Index k = 0; k < n; ++k)
        if (u(k)) l1 += std::abs(h(k) - suite[fi](k)) * s.mass(k);
      strict = strict && l1 < prev;
      prev = l1;
      for (double p : {1.0, 2.0}) {
        const auto rep = verify_lip_bound(s, suite[fi], u, cov, pou, p, nullptr, workers);
        ++cases;
        if (rep.pass) ++lip_pass;
        worst_ratio = std::max(worst_ratio, rep.measured_constant / rep.theoretical_constant);
      }
    }
    if (strict) ++decreasing;
    else not_decreasing += (not_decreasing.empty() ? "" : ", ") + labels[fi];
  }
  out.require(decreasing == static_cast<int>(suite.size()), "L1 error not strictly decreasing in R for " + not_decreasing);
  out.require(worst_sum <= 1e-10, "partition of unity off 1 by more than 1e-10");
  out.require(lip_pass == cases, "Lip bound violated");
  out.detail << " L1 strictly decreasing " << decreasing << "/" << suite.size() << "; classes max " << max_classes << "; sum err " << fmt(worst_sum) << "; lip " << lip_pass << "/"
             << cases << " (max measured/theoretical " << fmt(worst_ratio) << ")";
}

void property_suite(Outcome& out, int workers) {
  std::mt19937_64 rng(0x5eed2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int fails[5] = {0, 0, 0, 0, 0};
  const char* names[5] = {"shift", "homogeneity", "mask", "pruned", "workers"};
  for (int c = 0; c < 1000; ++c) {
    const Index n = pick(32, 200);
    Vector w = Vector::Ones(n);
    const int wk = pick(0, 2);
    for (Index k = 0; k < n; ++k) w(k) = wk == 0 ? 1.0 : wk == 1 ? pick(1, 2) : 0.5 + 1.5 * unit(rng);
    const auto s = MetricMeasureSpace::weighted_interval(n, w);

    const double p = std::vector<double>{1.0, 1.5, 2.0, 3.0}[static_cast<std::size_t>(pick(0, 3))];
    const double hmin = 2.0 / static_cast<double>(n);
    std::vector<double> radii{0.05 + 0.4 * unit(rng)};
    for (int k = 0; k < 2; ++k) radii.push_back(std::max(hmin, radii.back() * (0.2 + 0.6 * unit(rng))));
    if (!(radii[2] < radii[1] && radii[1] < radii[0])) radii = {0.4, 0.2, 0.1};
    const int kind = pick(0, 3);
    const MollifierFamily fam =
        kind == 0   ? MollifierFamily::window(p, radii)
        : kind == 1 ? MollifierFamily::indicator(radii, Normalization::mu_ball, p)
        : kind == 2 ? MollifierFamily::indicator(radii, Normalization::lebesgue_1d, p)
                    : MollifierFamily::fractional(p, {0.3 * unit(rng), 0.5 + 0.2 * unit(rng), 0.9 + 0.099 * unit(rng)});
    const std::size_t i = static_cast<std::size_t>(pick(0, 2));

    GridFunction f(n);
    for (Index k = 0; k < n; ++k) f(k) = pick(-256, 256) / 64.0;
    DomainMask omega = full_mask(n);
    if (pick(0, 1)) omega = interval_mask(s, 0.3 * unit(rng), 0.7 + 0.3 * unit(rng));
    DomainMask sub = omega;
    for (Index k = 0; k < n; ++k) sub(k) = omega(k) && unit(rng) < 0.7;

    EvaluateOptions base;
    const double v = evaluate(s, f, fam, i, omega, base).value;
    const GridFunction shifted = f.array() + static_cast<double>(pick(-8, 8));
    if (evaluate(s, shifted, fam, i, omega, base).value != v) ++fails[0];
    const double cs = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.1 + 3.0 * unit(rng));
    const GridFunction scaled = cs * f;
    const double vs = evaluate(s, scaled, fam, i, omega, base).value;
    if (std::abs(vs - std::pow(std::abs(cs), p) * v) > 1e-12 * std::pow(std::abs(cs), p) * v) ++fails[1];
    if (evaluate(s, f, fam, i, sub, base).value > v * (1 + 1e-12)) ++fails[2];
    EvaluateOptions dense;
    dense.prune = false;
    const double vd = evaluate(s, f, fam, i, omega, dense).value;
    if (std::abs(vd - v) > 1e-10 * vd) ++fails[3];
    EvaluateOptions many;
    many.workers = std::max(2, std::min(workers * 2, 16)) - pick(0, 1);
    if (evaluate(s, f, fam, i, omega, many).value != v) ++fails[4];
  }
  for (int k = 0; k < 5; ++k) {
    out.detail << " " << names[k] << ":" << 1000 - fails[k] << "/1000";
    out.require(fails[k] == 0, std::string(names[k]) + " property violated");
  }
}

void comparability(Outcome& out, int workers) {
  const Index n = 1024;
  const auto s = MetricMeasureSpace::uniform_interval(n);
  const std::vector<double> radii{0.1, 0.05, 0.02, 0.01, 0.005};
  const std::vector<std::pair<std::string, MollifierFamily>> fams{
      {"fractional", MollifierFamily::fractional(1.0, fractional_sequence(10))},
      {"window", MollifierFamily::window(1.0, radii)},
      {"indicator", MollifierFamily::indicator(radii, Normalization::mu_ball)},
  };
  std::mt19937_64 rng(0xc0ffee);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EvaluateOptions opt;
  opt.workers = workers;
  std::vector<double> lo(3, INFINITY), hi(3, -INFINITY);
  std::vector<int> ok(3, 0);
  for (int c = 0; c < 20; ++c) {
    const int knots = 2 + static_cast<int>(unit(rng) * 4);
    std::vector<double> xs{0.0, 1.0}, ys;
    for (int k = 0; k < knots; ++k) xs.push_back(unit(rng));
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k < xs.size(); ++k) ys.push_back(2 * unit(rng) - 1);
    GridFunction f(n);
    for (Index k = 0; k < n; ++k) {
      const double t = s.coords()(k);
      const auto it = std::upper_bound(xs.begin(), xs.end(), t);
      const std::size_t j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - xs.begin(), static_cast<std::ptrdiff_t>(xs.size()) - 1));
      const double a = xs[j - 1], b = xs[j];
      f(k) = b > a ? ys[j - 1] + (ys[j] - ys[j - 1]) * (t - a) / (b - a) : ys[j];
    }
    const auto e = tv(f, s);
    for (std::size_t q = 0; q < fams.size(); ++q) {
      const auto est = estimate_constants(sweep(s, f, fams[q].second, full_mask(n), 3, opt), e);
      lo[q] = std::min(lo[q], est.c1_hat);
      hi[q] = std::max(hi[q], est.c2_hat);
      bool good = est.c1_hat <= est.c2_hat && est.c1_hat >= 0.5 && est.c2_hat <= 2.0;
      if (fams[q].first == "indicator") good = good && est.c1_hat >= 0.95 && est.c2_hat <= 1.05;
      if (good) ++ok[q];
    }
  }
  for (std::size_t q = 0; q < fams.size(); ++q) {
    out.detail << " " << fams[q].first << ": " << ok[q] << "/20 in range, c_hat span [" << fmt(lo[q]) << ", "
               << fmt(hi[q]) << "]";
    out.require(ok[q] == 20, fams[q].first + " constants out of range");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int workers = 4;
  app.add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 1024));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<void(Outcome&, int)>>> criteria{
      {"identity calibration", identity_calibration},
      {"1D step identity", davila_identity},
      {"Sobolev case", sobolev_case},
      {"fractional certification", fractional_certification},
      {"fat Cantor counterexample", counterexample},
      {"smoothing suite", smoothing_suite},
      {"property suite", property_suite},
      {"two-sided comparability", comparability},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome out;
    try {
      criteria[k].second(out, workers);
    } catch (const std::exception& e) {
      out.require(false, std::string("error: ") + e.what());
    }
    if (!out.pass) ++failed;
    std::printf("[%s] %zu %s:%s%s%s\n", out.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                out.detail.str().c_str(), out.pass ? "" : " | first failure: ", out.first_failure.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
