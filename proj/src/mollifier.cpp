#include "nonlocal/mollifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>

#include "nonlocal/quadrature.hpp"
#include "nonlocal/summation.hpp"

namespace nonlocal {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::fractional: return "fractional";
    case KernelKind::window: return "window";
    case KernelKind::indicator: return "indicator";
    case KernelKind::custom: return "custom";
  }
  return "custom";
}

std::string to_string(Normalization norm) {
  return norm == Normalization::mu_ball ? "mu_ball" : "lebesgue_1d";
}

// ---------------------------------------------------------------------------
// NuMeasure

NuMeasure NuMeasure::from_log_density(std::function<double(double)> log_density) {
  NuMeasure nu;
  nu.log_density_ = std::move(log_density);
  return nu;
}

NuMeasure NuMeasure::atomic(std::vector<std::pair<double, double>> atoms) {
  for (const auto& [t, m] : atoms) {
    if (!(t >= 0.0) || !(m >= 0.0)) throw ValidationError("nu atoms need t >= 0 and mass >= 0");
  }
  NuMeasure nu;
  nu.atoms_ = std::move(atoms);
  return nu;
}

double NuMeasure::moment(double p, double delta) const {
  double s = 0.0;
  for (const auto& [t, m] : atoms_) {
    if (t <= delta) s += std::pow(t, p) * m;
  }
  if (log_density_) {
    const auto& ld = log_density_;
    s += quadrature::integrate_lower(
        [&](double lam) { return std::exp(p * lam + ld(lam)); }, std::log(delta));
  }
  return s;
}

double NuMeasure::tail(double d) const {
  double s = 0.0;
  for (const auto& [t, m] : atoms_) {
    if (t > d) s += m;
  }
  if (log_density_) {
    const auto& ld = log_density_;
    s += quadrature::integrate_upper([&](double lam) { return std::exp(ld(lam)); },
                                     std::log(d));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Constructors

namespace {

int shell_of(double d) {
  int e = 0;
  std::frexp(d, &e);
  return 1 - e;
}

void require_count(const std::vector<double>& v, const char* what) {
  if (v.empty()) {
    std::ostringstream os;
    os << what << " sequence must not be empty";
    throw ValidationError(os.str());
  }
}

void require_exponent(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError("mollifier exponent must satisfy p >= 1");
}

void require_decreasing_radii(const std::vector<double>& r) {
  require_count(r, "radius");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0) || !std::isfinite(r[i])) {
      std::ostringstream os;
      os << "radius r_" << i << " = " << r[i] << " must be positive";
      throw ValidationError(os.str());
    }
    if (i > 0 && !(r[i] < r[i - 1])) {
      throw ValidationError("radii must be strictly decreasing");
    }
  }
}

}  // namespace

MollifierFamily MollifierFamily::fractional(double p, std::vector<double> s) {
  require_exponent(p);
  require_count(s, "fractional parameter");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0 && s[i] < 1.0)) {
      std::ostringstream os;
      os << "fractional parameter s_" << i << " = " << s[i] << " must lie in (0, 1)";
      throw ValidationError(os.str());
    }
    if (i > 0 && !(s[i] > s[i - 1])) throw ValidationError("fractional parameters must be strictly increasing");
  }
  MollifierFamily fam;
  fam.kind_ = KernelKind::fractional;
  fam.name_ = "fractional";
  fam.p_ = p;
  fam.params_ = std::move(s);
  fam.size_ = fam.params_.size();
  for (double si : fam.params_) {
    // dnu/dt = p s (1 - s) t^{-ps-1}, so t dnu/dt = p s (1 - s) t^{-ps}.
    const double log_c = std::log(p * si * (1.0 - si));
    fam.nu_.push_back(NuMeasure::from_log_density(
        [log_c, p, si](double lam) { return log_c - p * si * lam; }));
  }
  return fam;
}

MollifierFamily MollifierFamily::window(double p, std::vector<double> r) {
  require_exponent(p);
  require_decreasing_radii(r);
  MollifierFamily fam;
  fam.kind_ = KernelKind::window;
  fam.name_ = "window";
  fam.p_ = p;
  fam.params_ = std::move(r);
  fam.size_ = fam.params_.size();
  return fam;
}

MollifierFamily MollifierFamily::indicator(std::vector<double> r, Normalization norm, double p) {
  require_exponent(p);
  require_decreasing_radii(r);
  MollifierFamily fam;
  fam.kind_ = KernelKind::indicator;
  fam.name_ = "indicator";
  fam.p_ = p;
  fam.norm_ = norm;
  fam.params_ = std::move(r);
  fam.size_ = fam.params_.size();
  return fam;
}

MollifierFamily MollifierFamily::tabulated(double p, std::size_t n_indices,
                                           std::vector<TableEntry> table) {
  require_exponent(p);
  if (n_indices == 0) throw ValidationError("tabulated family needs at least one index");
  MollifierFamily fam;
  fam.kind_ = KernelKind::custom;
  fam.name_ = "tabulated";
  fam.p_ = p;
  fam.size_ = n_indices;
  fam.params_.resize(n_indices);
  for (std::size_t i = 0; i < n_indices; ++i) fam.params_[i] = static_cast<double>(i + 1);
  fam.table_.assign(n_indices, {});
  for (const auto& e : table) {
    if (e.index >= n_indices) throw ValidationError("table entry index out of range");
    if (e.shell < 1 || e.shell > 1000) throw ValidationError("table shell must be in [1, 1000]");
    if (!(e.value >= 0.0)) throw ValidationError("table values must be nonnegative");
    auto& row = fam.table_[e.index];
    if (row.size() < static_cast<std::size_t>(e.shell)) row.resize(static_cast<std::size_t>(e.shell), 0.0);
    row[static_cast<std::size_t>(e.shell - 1)] = e.value;
  }
  fam.custom_support_ = Support{1.0, false};
  return fam;
}

MollifierFamily MollifierFamily::ring(double p, double center, double halfwidth,
                                      std::size_t n_indices) {
  require_exponent(p);
  if (!(center > 0.0) || !(halfwidth > 0.0)) throw ValidationError("ring needs positive center and halfwidth");
  if (n_indices == 0) throw ValidationError("ring family needs at least one index");
  KernelFn fn = [center, halfwidth](const BallMeasure& mu, Index y, double d, std::size_t) {
    if (!(std::abs(d - center) < halfwidth)) return 0.0;
    const double inner = center - halfwidth;
    const double annulus = mu(y, center + halfwidth) - (inner >= 0.0 ? mu(y, inner, true) : 0.0);
    return annulus > 0.0 ? 1.0 / annulus : 0.0;
  };
  std::vector<double> params(n_indices);
  for (std::size_t i = 0; i < n_indices; ++i) params[i] = static_cast<double>(i + 1);
  auto fam = custom("ring", p, std::move(params), std::move(fn),
                    Support{center + halfwidth, false});
  return fam;
}

MollifierFamily MollifierFamily::custom(std::string name, double p, std::vector<double> params,
                                        KernelFn kernel, std::optional<Support> support,
                                        std::vector<NuMeasure> nu) {
  require_exponent(p);
  require_count(params, "index parameter");
  if (!nu.empty() && nu.size() != params.size()) {
    throw ValidationError("declared nu measures must match the number of indices");
  }
  MollifierFamily fam;
  fam.kind_ = KernelKind::custom;
  fam.name_ = std::move(name);
  fam.p_ = p;
  fam.params_ = std::move(params);
  fam.size_ = fam.params_.size();
  fam.custom_ = std::move(kernel);
  fam.custom_support_ = support;
  fam.nu_ = std::move(nu);
  return fam;
}

// ---------------------------------------------------------------------------
// Evaluation

double MollifierFamily::operator()(const BallMeasure& mu, Index y, double d,
                                   std::size_t i) const {
  const double a = params_[i];
  switch (kind_) {
    case KernelKind::fractional: {
      if (d == 0.0) return 0.0;
      return (1.0 - a) * std::pow(d, p_ * (1.0 - a)) / mu(y, d);
    }
    case KernelKind::window: {
      if (!(d < a)) return 0.0;
      return std::pow(d / a, p_) / mu(y, a);
    }
    case KernelKind::indicator: {
      if (norm_ == Normalization::lebesgue_1d) return d <= a ? 0.5 / a : 0.0;
      return d < a ? 1.0 / mu(y, a) : 0.0;
    }
    case KernelKind::custom: {
      if (custom_) return custom_(mu, y, d, i);
      if (!(d > 0.0) || !(d < 1.0)) return 0.0;
      const int j = shell_of(d);
      const auto& row = table_[i];
      if (j < 1 || static_cast<std::size_t>(j) > row.size()) return 0.0;
      const double v = row[static_cast<std::size_t>(j - 1)];
      return v == 0.0 ? 0.0 : v / mu(y, std::ldexp(1.0, 1 - j));
    }
  }
  return 0.0;
}

double MollifierFamily::at(const MetricMeasureSpace& space, Index x, Index y,
                           std::size_t i) const {
  return (*this)(BallMeasure(space), y, space.dist(x, y), i);
}

std::optional<MollifierFamily::Support> MollifierFamily::support(std::size_t i) const {
  switch (kind_) {
    case KernelKind::fractional: return std::nullopt;
    case KernelKind::window: return Support{params_[i], false};
    case KernelKind::indicator:
      return Support{params_[i], norm_ == Normalization::lebesgue_1d};
    case KernelKind::custom: return custom_support_;
  }
  return std::nullopt;
}

std::optional<double> MollifierFamily::lower_radius(std::size_t i) const {
  if (kind_ == KernelKind::window || kind_ == KernelKind::indicator) return params_[i];
  return std::nullopt;
}

const NuMeasure* MollifierFamily::nu(std::size_t i) const {
  return i < nu_.size() ? &nu_[i] : nullptr;
}

double MollifierFamily::diagonal_mass(const BallMeasure& mu, Index y, std::size_t i) const {
  const MetricMeasureSpace& space = mu.space();
  if (!space.is_interval()) return 0.0;
  const double h = space.cell_length();
  const double w = space.weights()[y];
  const double a = params_[i];
  switch (kind_) {
    case KernelKind::fractional:
      // Inside the cell mu(B(y, t)) = 2 w t, so the weight cancels.
      return std::pow(0.5 * h, p_ * (1.0 - a)) / p_;
    case KernelKind::window: {
      const double half = std::min(0.5 * h, a);
      return 2.0 * w * std::pow(half, p_ + 1.0) / ((p_ + 1.0) * std::pow(a, p_)) / mu(y, a);
    }
    case KernelKind::indicator:
      if (norm_ == Normalization::lebesgue_1d) return w * std::min(h, 2.0 * a) / (2.0 * a);
      return space.mass(y) / mu(y, a);
    case KernelKind::custom: return 0.0;
  }
  return 0.0;
}

void MollifierFamily::require_compatible(const MetricMeasureSpace& space) const {
  if (kind_ == KernelKind::indicator && norm_ == Normalization::lebesgue_1d &&
      !space.is_interval()) {
    throw ValidationError("lebesgue_1d normalization is only defined on interval spaces");
  }
}

// ---------------------------------------------------------------------------
// Dyadic majorant

namespace {

constexpr int kMaxShell = 200;

template <class Fn>
void for_each_pair_below_one(const MetricMeasureSpace& space, Index y,
                             const std::optional<MollifierFamily::Support>& sup, Fn&& fn) {
  double reach = 1.0;
  bool closed = false;
  if (sup && sup->radius <= 1.0) {
    reach = sup->radius;
    closed = sup->closed;
  }
  space.for_each_in_ball(y, reach, closed, [&](Index x, double d) {
    if (d > 0.0 && d < 1.0) fn(x, d);
  });
}

}  // namespace

DyadicMajorant dyadic_majorant(const MollifierFamily& family, const MetricMeasureSpace& space,
                               std::size_t i, int workers) {
  family.require_compatible(space);
  const BallMeasure mu(space);
  const auto sup = family.support(i);
  const Index n = space.size();
  const Index block = 64;
  const Index n_blocks = (n + block - 1) / block;
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(n_blocks));
  parallel_blocks(n_blocks, workers, [&](Index b) {
    std::vector<double> best(kMaxShell, 0.0);
    for (Index y = b * block; y < std::min(n, (b + 1) * block); ++y) {
      for_each_pair_below_one(space, y, sup, [&](Index, double d) {
        const int j = shell_of(d);
        if (j < 1 || j > kMaxShell) return;
        const double rho = family(mu, y, d, i);
        if (rho <= 0.0) return;
        const double c = rho * mu(y, std::ldexp(1.0, 1 - j));
        auto& slot = best[static_cast<std::size_t>(j - 1)];
        slot = std::max(slot, c);
      });
    }
    partial[static_cast<std::size_t>(b)] = std::move(best);
  });
  DyadicMajorant out;
  out.coeffs.assign(kMaxShell, 0.0);
  for (const auto& p : partial)
    for (int j = 0; j < kMaxShell; ++j) out.coeffs[j] = std::max(out.coeffs[j], p[j]);
  const double dmin = space.min_positive_distance();
  out.truncation_depth = dmin < 1.0 ? std::min(kMaxShell, shell_of(dmin)) : 0;
  out.coeffs.resize(static_cast<std::size_t>(std::max(out.truncation_depth, 0)));
  out.sum = pairwise_sum(out.coeffs);
  return out;
}

// ---------------------------------------------------------------------------
// Admissibility

namespace {

struct PairSampler {
  bool exhaustive;
  std::vector<std::pair<Index, Index>> pairs;
};

PairSampler sample_pairs(const MetricMeasureSpace& space, const AdmissibilityOptions& opt) {
  const Index n = space.size();
  PairSampler s;
  s.exhaustive = n * (n - 1) <= opt.max_pairs;
  if (s.exhaustive) return s;
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  s.pairs.reserve(static_cast<std::size_t>(opt.max_pairs));
  while (static_cast<Index>(s.pairs.size()) < opt.max_pairs) {
    const Index x = pick(rng), y = pick(rng);
    if (x != y) s.pairs.emplace_back(x, y);
  }
  return s;
}

template <class Fn>
void visit_pairs(const MetricMeasureSpace& space, const PairSampler& s, double reach,
                 bool closed, Fn&& fn) {
  if (s.exhaustive) {
    for (Index y = 0; y < space.size(); ++y) {
      space.for_each_in_ball(y, reach, closed, [&](Index x, double d) { fn(x, y, d); });
    }
    return;
  }
  for (const auto& [x, y] : s.pairs) {
    const double d = space.dist(x, y);
    if (closed ? d <= reach : d < reach) fn(x, y, d);
  }
}

struct LowerResult {
  std::string option = "fail";
  double constant = std::numeric_limits<double>::infinity();
};

LowerResult check_lower(const MollifierFamily& fam, const MetricMeasureSpace& space,
                        const BallMeasure& mu, const PairSampler& sampler, std::size_t i) {
  const double p = fam.p();
  LowerResult res;
  if (auto r = fam.lower_radius(i)) {
    double worst = 1.0;
    bool ok = true;
    visit_pairs(space, sampler, std::min(*r, 1.0), *r > 1.0, [&](Index, Index y, double d) {
      if (!ok || d <= 0.0) return;
      const double bound = std::pow(d / *r, p) / mu(y, *r);
      const double rho = fam(mu, y, d, i);
      if (rho <= 0.0) {
        ok = false;
        return;
      }
      worst = std::max(worst, bound / rho);
    });
    if (ok) {
      res.option = "A";
      res.constant = worst;
      return res;
    }
  }
  if (const NuMeasure* nu = fam.nu(i)) {
    std::unordered_map<std::uint64_t, double> tail_cache;
    bool ok = true;
    visit_pairs(space, sampler, 1.0, true, [&](Index, Index y, double d) {
      if (!ok || d <= 0.0) return;
      const auto key = std::bit_cast<std::uint64_t>(d);
      auto it = tail_cache.find(key);
      if (it == tail_cache.end()) it = tail_cache.emplace(key, nu->tail(d)).first;
      const double bound = std::pow(d, p) * it->second / mu(y, d);
      if (fam(mu, y, d, i) < bound * (1.0 - 1e-9)) ok = false;
    });
    if (ok) {
      res.option = "B";
      res.constant = 1.0;
    }
  }
  return res;
}

/// sup_y int_{Omega \ B(y, delta)} rho/d^p dmu(x) + sup_x int_{Omega \ B(x, delta)} rho/d^p dmu(y)
double tail_integral(const MollifierFamily& fam, const MetricMeasureSpace& space,
                     const BallMeasure& mu, const DomainMask& omega, std::size_t i,
                     double delta) {
  if (auto sup = fam.support(i)) {
    if (sup->closed ? sup->radius < delta : sup->radius <= delta) return 0.0;
  }
  const Index n = space.size();
  const double p = fam.p();
  Vector by_y = Vector::Zero(n), by_x = Vector::Zero(n);
  for (Index y = 0; y < n; ++y) {
    if (!omega[y]) continue;
    for (Index x = 0; x < n; ++x) {
      if (!omega[x]) continue;
      const double d = space.dist(x, y);
      if (d < delta || d == 0.0) continue;
      const double q = fam(mu, y, d, i) / std::pow(d, p);
      by_y[y] += q * space.mass(x);
      by_x[x] += q * space.mass(y);
    }
  }
  return by_y.maxCoeff() + by_x.maxCoeff();
}

}  // namespace

AdmissibilityReport check_admissibility(const MollifierFamily& family,
                                        const MetricMeasureSpace& space,
                                        const std::vector<double>& deltas,
                                        const DomainMask& tail_domain,
                                        const AdmissibilityOptions& options) {
  family.require_compatible(space);
  const std::size_t m = family.size();
  const int w = std::max(1, options.tail_window);
  if (m < 3) throw ValidationError("admissibility check needs a family with at least 3 indices");
  if (deltas.empty()) throw ValidationError("admissibility check needs at least one probe delta");
  for (double d : deltas) {
    if (!(d > 0.0)) throw ValidationError("probe deltas must be positive");
  }
  if (tail_domain.size() != space.size()) throw ValidationError("tail domain length does not match the space");

  const BallMeasure mu(space);
  const PairSampler sampler = sample_pairs(space, options);

  AdmissibilityReport rep;
  rep.deltas = deltas;
  rep.lower_option.assign(m, "fail");
  rep.lower_constant.assign(m, std::numeric_limits<double>::infinity());
  rep.majorants.resize(m);
  rep.majorant_sums.assign(m, 0.0);
  rep.tail_decay.assign(deltas.size(), std::vector<double>(m, 0.0));
  const bool has_nu = family.nu(0) != nullptr;
  if (has_nu) rep.nu_mass.assign(deltas.size(), std::vector<double>(m, 0.0));

  parallel_blocks(static_cast<Index>(m), options.workers, [&](Index bi) {
    const auto i = static_cast<std::size_t>(bi);
    const auto lower = check_lower(family, space, mu, sampler, i);
    rep.lower_option[i] = lower.option;
    rep.lower_constant[i] = lower.constant;
    rep.majorants[i] = dyadic_majorant(family, space, i, 1);
    rep.majorant_sums[i] = rep.majorants[i].sum;
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      if (has_nu) rep.nu_mass[k][i] = family.nu(i)->moment(family.p(), deltas[k]);
      rep.tail_decay[k][i] = tail_integral(family, space, mu, tail_domain, i, deltas[k]);
    }
  });

  const std::size_t head_end = std::min<std::size_t>(m, static_cast<std::size_t>(w));
  const std::size_t tail_begin = m - std::min<std::size_t>(m, static_cast<std::size_t>(w));
  double c_rho = 1.0;

  // (a) pointwise lower bound, one option per index.
  rep.lower_ok = std::none_of(rep.lower_option.begin(), rep.lower_option.end(),
                              [](const std::string& o) { return o == "fail"; });
  if (!rep.lower_ok) rep.failures.push_back("lower bound: neither minorant option holds for some index");
  bool uses_b = false;
  for (std::size_t i = 0; i < m; ++i) {
    if (rep.lower_option[i] == "A") c_rho = std::max(c_rho, rep.lower_constant[i]);
    if (rep.lower_option[i] == "B") uses_b = true;
  }

  // (b) liminf of the nu moments, proxied by the trailing-window minimum.
  rep.nu_ok = true;
  for (std::size_t k = 0; k < deltas.size() && has_nu; ++k) {
    const auto& seq = rep.nu_mass[k];
    const double lo = *std::min_element(seq.begin() + static_cast<std::ptrdiff_t>(tail_begin), seq.end());
    rep.nu_liminf.push_back(lo);
    if (uses_b) {
      if (lo > 0.0) {
        c_rho = std::max(c_rho, 1.0 / lo);
      } else {
        rep.nu_ok = false;
      }
    }
  }
  if (uses_b && !has_nu) rep.nu_ok = false;
  if (!rep.nu_ok) rep.failures.push_back("nu moment: liminf of int_0^delta t^p dnu_i is not positive");

  // (c) majorant sums bounded uniformly in i.
  rep.majorant_ok = true;
  double head_max = 0.0, tail_max = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(rep.majorant_sums[i])) rep.majorant_ok = false;
    if (i < head_end) head_max = std::max(head_max, rep.majorant_sums[i]);
    if (i >= tail_begin) tail_max = std::max(tail_max, rep.majorant_sums[i]);
    c_rho = std::max(c_rho, rep.majorant_sums[i]);
  }
  if (tail_max > 2.0 * head_max && tail_max > 0.0) rep.majorant_ok = false;
  if (!rep.majorant_ok) rep.failures.push_back("majorant: dyadic coefficient sums are not uniformly bounded");

  // (d) tail integrals beyond delta decay along the index sequence.
  rep.tail_ok = true;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const auto& seq = rep.tail_decay[k];
    bool ok = seq.back() <= 0.1 * seq.front();
    for (std::size_t i = tail_begin + 1; i < m; ++i) {
      if (seq[i] > seq[i - 1] * (1.0 + 1e-12)) ok = false;
    }
    if (!ok) {
      rep.tail_ok = false;
      std::ostringstream os;
      os << "tail decay: integral of rho_i/d^p beyond delta=" << deltas[k]
         << " does not vanish along the sequence";
      rep.failures.push_back(os.str());
    }
  }

  rep.c_rho = c_rho;
  rep.pass = rep.lower_ok && rep.nu_ok && rep.majorant_ok && rep.tail_ok;
  return rep;
}

}  // namespace nonlocal
