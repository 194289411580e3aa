#include "nonlocal/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "nonlocal/cantor.hpp"
#include "nonlocal/energy.hpp"
#include "nonlocal/functional.hpp"
#include "nonlocal/smoothing.hpp"

namespace nonlocal {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Parsing helpers

void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    std::ostringstream os;
    os << where << ": unknown field \"" << key << "\"; valid fields are";
    for (std::size_t k = 0; k < allowed.size(); ++k) os << (k ? ", " : " ") << allowed[k];
    throw ValidationError(os.str());
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

void require(bool ok, const std::string& field, const std::string& bound) {
  if (!ok) throw ValidationError(field + ": out of range, requires " + bound);
}

MaskSpec parse_mask(const json& j, const std::string& where) {
  MaskSpec m;
  if (j.is_string()) {
    if (j.get<std::string>() != "full") throw ValidationError(where + ": mask must be \"full\", {\"interval\": [lo, hi]} or a boolean array");
    return m;
  }
  if (j.is_array()) {
    m.kind = "array";
    for (const auto& v : j) {
      if (!v.is_boolean()) throw ValidationError(where + ": mask arrays hold booleans");
      m.values.push_back(v.get<bool>());
    }
    return m;
  }
  check_keys(j, {"interval"}, where);
  const auto iv = j.at("interval");
  if (!iv.is_array() || iv.size() != 2) throw ValidationError(where + ".interval: expected [lo, hi]");
  m.kind = "interval";
  m.lo = iv[0].get<double>();
  m.hi = iv[1].get<double>();
  require(m.lo <= m.hi, where + ".interval", "lo <= hi");
  return m;
}

json mask_json(const MaskSpec& m) {
  if (m.kind == "full") return "full";
  if (m.kind == "interval") return json{{"interval", {m.lo, m.hi}}};
  return json(m.values);
}

SpaceSpec parse_space(const json& j) {
  check_keys(j, {"type", "n_cells", "weights", "depth", "dist", "mass"}, "space");
  SpaceSpec s;
  s.type = get_or<std::string>(j, "type", s.type, "space");
  if (s.type == "matrix") {
    if (!j.contains("dist") || !j.contains("mass")) throw ValidationError("space: matrix spaces need dist and mass");
    const auto rows = j.at("dist").get<std::vector<std::vector<double>>>();
    const auto mass = j.at("mass").get<std::vector<double>>();
    const Index n = static_cast<Index>(rows.size());
    s.dist.resize(n, n);
    for (Index a = 0; a < n; ++a) {
      if (static_cast<Index>(rows[static_cast<std::size_t>(a)].size()) != n) throw ValidationError("space.dist: matrix must be square");
      for (Index b = 0; b < n; ++b) s.dist(a, b) = rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
    s.mass = Eigen::Map<const Vector>(mass.data(), static_cast<Index>(mass.size()));
    s.n_cells = n;
    return s;
  }
  if (s.type != "interval") throw ValidationError("space.type: must be \"interval\" or \"matrix\"");
  s.n_cells = get_or<Index>(j, "n_cells", s.n_cells, "space");
  require(s.n_cells >= 2, "space.n_cells", "n_cells >= 2");
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.is_array()) {
      s.weights = "array";
      s.weight_values = w.get<std::vector<double>>();
      if (static_cast<Index>(s.weight_values.size()) != s.n_cells) throw ValidationError("space.weights: length must equal n_cells");
    } else if (w.is_string()) {
      s.weights = w.get<std::string>();
      if (s.weights != "uniform" && s.weights != "fat_cantor") throw ValidationError("space.weights: must be \"uniform\", \"fat_cantor\" or an array");
    } else {
      throw ValidationError("space.weights: wrong type");
    }
  }
  s.depth = get_or<int>(j, "depth", s.depth, "space");
  require(s.depth >= 1 && s.depth <= 12, "space.depth", "1 <= depth <= 12");
  return s;
}

json space_json(const SpaceSpec& s) {
  json j;
  j["type"] = s.type;
  if (s.type == "matrix") {
    json rows = json::array();
    for (Index a = 0; a < s.dist.rows(); ++a) {
      std::vector<double> r(s.dist.cols());
      for (Index b = 0; b < s.dist.cols(); ++b) r[static_cast<std::size_t>(b)] = s.dist(a, b);
      rows.push_back(r);
    }
    j["dist"] = rows;
    j["mass"] = std::vector<double>(s.mass.data(), s.mass.data() + s.mass.size());
    return j;
  }
  j["n_cells"] = s.n_cells;
  if (s.weights == "array") {
    j["weights"] = s.weight_values;
  } else {
    j["weights"] = s.weights;
  }
  if (s.weights == "fat_cantor") j["depth"] = s.depth;
  return j;
}

FunctionSpec parse_function(const json& j) {
  FunctionSpec f;
  if (j.is_string()) {
    f.name = j.get<std::string>();
  } else {
    check_keys(j, {"name", "power", "location", "lo", "hi", "height", "table"}, "function");
    f.name = get_or<std::string>(j, "name", f.name, "function");
    f.power = get_or<double>(j, "power", f.power, "function");
    f.location = get_or<double>(j, "location", f.location, "function");
    f.lo = get_or<double>(j, "lo", f.lo, "function");
    f.hi = get_or<double>(j, "hi", f.hi, "function");
    f.height = get_or<double>(j, "height", f.height, "function");
    f.table = get_or<std::vector<double>>(j, "table", {}, "function");
    if (!f.table.empty() && !j.contains("name")) f.name = "table";
  }
  static const std::set<std::string> names{"ramp", "step", "tent", "cantor", "table"};
  if (!names.count(f.name)) throw ValidationError("function: unknown generator \"" + f.name + "\"; valid generators are ramp, step, tent, cantor, table");
  require(f.power > 0.0, "function.power", "power > 0");
  require(f.lo < f.hi, "function.lo", "lo < hi");
  if (f.name == "table" && f.table.empty()) throw ValidationError("function.table: the table generator needs values");
  return f;
}

json function_json(const FunctionSpec& f) {
  json j;
  j["name"] = f.name;
  if (f.name == "ramp") j["power"] = f.power;
  if (f.name == "step") j["location"] = f.location;
  if (f.name == "tent") {
    j["lo"] = f.lo;
    j["hi"] = f.hi;
    j["height"] = f.height;
  }
  if (f.name == "table") j["table"] = f.table;
  return j;
}

FamilySpec parse_family(const json& j) {
  check_keys(j, {"kind", "params", "normalization", "profile", "center", "halfwidth", "n_indices", "table"}, "family");
  FamilySpec f;
  f.kind = get_or<std::string>(j, "kind", f.kind, "family");
  f.params = get_or<std::vector<double>>(j, "params", {}, "family");
  f.normalization = get_or<std::string>(j, "normalization", f.normalization, "family");
  f.profile = get_or<std::string>(j, "profile", f.kind == "custom" ? "table" : "", "family");
  f.center = get_or<double>(j, "center", f.center, "family");
  f.halfwidth = get_or<double>(j, "halfwidth", f.halfwidth, "family");
  f.n_indices = get_or<std::size_t>(j, "n_indices", f.n_indices, "family");
  if (j.contains("table")) {
    for (const auto& e : j.at("table")) {
      if (!e.is_array() || e.size() != 3) throw ValidationError("family.table: entries are [index, shell, value]");
      f.table.push_back({e[0].get<std::size_t>(), e[1].get<int>(), e[2].get<double>()});
    }
  }
  static const std::set<std::string> kinds{"fractional", "window", "indicator", "custom"};
  if (!kinds.count(f.kind)) throw ValidationError("family.kind: must be fractional, window, indicator or custom");
  if (f.normalization != "mu_ball" && f.normalization != "lebesgue_1d") throw ValidationError("family.normalization: must be mu_ball or lebesgue_1d");
  if (f.kind == "custom" && f.profile != "ring" && f.profile != "table") throw ValidationError("family.profile: custom kernels are \"ring\" or \"table\"");
  return f;
}

json family_json(const FamilySpec& f) {
  json j;
  j["kind"] = f.kind;
  if (f.kind == "custom") {
    j["profile"] = f.profile;
    j["n_indices"] = f.n_indices;
    if (f.profile == "ring") {
      j["center"] = f.center;
      j["halfwidth"] = f.halfwidth;
    } else {
      json t = json::array();
      for (const auto& e : f.table) t.push_back({e.index, e.shell, e.value});
      j["table"] = t;
    }
    return j;
  }
  j["params"] = f.params;
  if (f.kind == "indicator") j["normalization"] = f.normalization;
  return j;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json energy_json(const EnergyReport& e, bool per_edge) {
  json j;
  j["p"] = e.p;
  j["variant"] = e.variant;
  j["value"] = e.value;
  j["delta"] = e.delta ? json(*e.delta) : json(nullptr);
  if (per_edge) j["per_edge"] = vec_json(e.per_edge);
  if (!e.curve.empty()) {
    json c = json::array();
    for (const auto& pt : e.curve) c.push_back({{"eps", pt.eps}, {"value", pt.value}, {"lambda", pt.lambda}});
    j["curve"] = c;
  }
  return j;
}

class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    written_.push_back(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw Error("failed writing " + path.string());
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void remove_all() {
    for (const auto& p : written_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
    written_.clear();
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

struct Stage {
  std::string name = "cli";
};

// ---------------------------------------------------------------------------
// Commands

int run_sweep(const ExperimentPlan& plan, OutputSet& out, json& meta, Stage& stage, int workers,
              std::uint64_t seed) {
  if (!plan.family) throw ValidationError("sweep needs a family");
  stage.name = "space";
  const auto space = build_space(plan.space, seed);
  const auto f = build_function(plan.function, space, plan.space);
  const auto omega = build_mask(plan.omega, space);
  stage.name = "mollifier";
  const auto family = build_family(*plan.family, plan.p);
  stage.name = "functional";
  EvaluateOptions opt;
  opt.workers = workers;
  const int window = plan.window_given ? plan.window
                                       : std::min(plan.window, static_cast<int>(family.size()));
  const auto res = sweep(space, f, family, omega, window, opt);

  json footer;
  footer["tail_lo"] = res.tail_lo;
  footer["tail_hi"] = res.tail_hi;
  footer["window"] = res.window;
  json cut = json::array();
  for (const auto& c : res.cutoffs) cut.push_back(c ? json(*c) : json(nullptr));
  footer["cutoffs"] = cut;
  if (space.is_interval()) {
    stage.name = "energy";
    const auto e = energy(f, space, plan.p, plan.delta);
    stage.name = "functional";
    const auto est = estimate_constants(res, e);
    footer["c1_hat"] = est.degenerate ? json(nullptr) : json(est.c1_hat);
    footer["c2_hat"] = est.degenerate ? json(nullptr) : json(est.c2_hat);
    footer["degenerate"] = est.degenerate;
    footer["energy_ref"] = energy_json(e, false);
  } else {
    footer["c1_hat"] = nullptr;
    footer["c2_hat"] = nullptr;
    footer["degenerate"] = false;
    footer["energy_ref"] = nullptr;
  }

  std::ostringstream csv;
  csv << "index_param,value,pairs_enumerated\n";
  for (std::size_t i = 0; i < res.values.size(); ++i) {
    csv << fmt17(res.index_params[i]) << ',' << fmt17(res.values[i]) << ',' << res.pairs[i] << '\n';
  }
  csv << "# " << footer.dump() << '\n';
  out.write("sweep.csv", csv.str());
  meta["seconds_per_index"] = res.seconds;
  return kExitPass;
}

int run_check(const ExperimentPlan& plan, OutputSet& out, Stage& stage, int workers,
              std::uint64_t seed) {
  if (!plan.family) throw ValidationError("check-mollifier needs a family");
  stage.name = "space";
  const auto space = build_space(plan.space, seed);
  const auto tail_domain = build_mask(plan.omega, space);
  stage.name = "mollifier";
  const auto family = build_family(*plan.family, plan.p);
  AdmissibilityOptions opt;
  opt.workers = workers;
  opt.seed = seed;
  opt.tail_window = plan.window;
  const auto rep = check_admissibility(family, space, plan.deltas, tail_domain, opt);

  json j;
  j["verdict"] = rep.pass ? "pass" : "fail";
  j["failures"] = rep.failures;
  j["c_rho"] = rep.c_rho;
  j["index_params"] = family.params();
  j["lower_ok"] = rep.lower_ok;
  j["nu_ok"] = rep.nu_ok;
  j["majorant_ok"] = rep.majorant_ok;
  j["tail_ok"] = rep.tail_ok;
  j["lower_option"] = rep.lower_option;
  json lc = json::array();
  for (double c : rep.lower_constant) lc.push_back(std::isfinite(c) ? json(c) : json(nullptr));
  j["lower_constant"] = lc;
  j["deltas"] = rep.deltas;
  j["nu_mass"] = rep.nu_mass;
  j["nu_liminf"] = rep.nu_liminf;
  json coeffs = json::array(), depth = json::array();
  for (const auto& m : rep.majorants) {
    coeffs.push_back(m.coeffs);
    depth.push_back(m.truncation_depth);
  }
  j["majorant_coeffs"] = coeffs;
  j["majorant_sums"] = rep.majorant_sums;
  j["truncation_depth"] = depth;
  j["tail_decay"] = rep.tail_decay;
  out.write_json("admissibility.json", j);

  std::ostringstream csv;
  csv << "index_param,lower_option,lower_constant,majorant_sum";
  for (double d : rep.deltas) csv << ",tail_" << fmt17(d);
  csv << '\n';
  for (std::size_t i = 0; i < family.size(); ++i) {
    csv << fmt17(family.params()[i]) << ',' << rep.lower_option[i] << ','
        << fmt17(rep.lower_constant[i]) << ',' << fmt17(rep.majorant_sums[i]);
    for (std::size_t k = 0; k < rep.deltas.size(); ++k) csv << ',' << fmt17(rep.tail_decay[k][i]);
    csv << '\n';
  }
  out.write("admissibility.csv", csv.str());
  return rep.pass ? kExitPass : kExitCheckFailed;
}

int run_cantor(const ExperimentPlan& plan, OutputSet& out, json& meta, Stage& stage, int workers) {
  stage.name = "cantor";
  const auto rep = run_counterexample(plan.depth, plan.n_cells, plan.radii, plan.epsilon, workers);
  json j;
  j["depth"] = rep.depth;
  j["n_cells"] = rep.n_cells;
  j["radii"] = rep.radii;
  j["functional_values"] = rep.functional_values;
  j["resolved"] = rep.resolved;
  j["tv_reference"] = rep.tv_reference;
  j["tv_discrete_delta0"] = rep.tv_discrete_delta0;
  j["tv_discrete_gapscale"] = rep.tv_discrete_gapscale;
  j["gap_scale"] = rep.gap_scale;
  j["predicted_limit"] = rep.predicted_limit;
  j["epsilon"] = rep.epsilon;
  j["lower_bound_check"] = rep.lower_bound_check;
  j["bump_functional"] = rep.bump_functional;
  j["bump_tv"] = rep.bump_tv;
  j["bump_ratio"] = rep.bump_ratio;
  out.write_json("counterexample.json", j);
  std::ostringstream csv;
  csv << "radius,functional_value,resolved\n";
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    csv << fmt17(rep.radii[i]) << ',' << fmt17(rep.functional_values[i]) << ','
        << (rep.resolved[i] ? "true" : "false") << '\n';
  }
  out.write("counterexample.csv", csv.str());
  meta["counterexample_seconds"] = rep.seconds;
  return rep.lower_bound_check ? kExitPass : kExitCheckFailed;
}

int run_smooth(const ExperimentPlan& plan, OutputSet& out, Stage& stage, int workers,
               std::uint64_t seed) {
  stage.name = "space";
  const auto space = build_space(plan.space, seed);
  const auto f = build_function(plan.function, space, plan.space);
  const auto u = build_mask(plan.u, space);
  const bool has_omega = plan.omega.kind != "full";
  const auto omega = build_mask(plan.omega, space);
  stage.name = "smoothing";
  const auto cov = cover(space, u, plan.radius, has_omega ? &omega : nullptr);
  const auto pou = partition_of_unity(space, cov);
  const auto h = discrete_convolve(space, f, cov, pou);
  const auto rep = verify_lip_bound(space, f, u, cov, pou, plan.p, has_omega ? &omega : nullptr, workers);

  double l1 = 0.0;
  for (Index x = 0; x < space.size(); ++x) {
    if (u[x]) l1 += std::abs(h[x] - f[x]) * space.mass(x);
  }
  stage.name = "space";
  const std::vector<double> scales{plan.radius, 2.0 * plan.radius, 5.0 * plan.radius};
  const double cd_measured = estimate_doubling(space, scales);

  json j;
  j["R"] = cov.radius;
  j["seed_radius"] = cov.seed_radius;
  j["centers"] = cov.centers;
  j["overlap_class"] = cov.overlap_class;
  j["n_classes"] = cov.n_classes;
  j["max_multiplicity"] = cov.max_multiplicity;
  j["c_d_assumed"] = cov.c_d_assumed;
  j["c_d_measured"] = cd_measured;
  j["c0_bound"] = cov.c0_bound;
  j["lipschitz_bound"] = pou.lipschitz_bound;
  j["max_measured_lipschitz"] = pou.measured_lipschitz.size() ? pou.measured_lipschitz.maxCoeff() : 0.0;
  j["l1_error"] = l1;
  j["lip_bound"] = {{"lhs", rep.lhs}, {"rhs", rep.rhs}, {"measured_constant", rep.measured_constant},
                    {"theoretical_constant", rep.theoretical_constant}, {"pass", rep.pass}};
  out.write_json("covering.json", j);
  std::ostringstream csv;
  csv << "R,p,lhs,rhs,measured,theoretical,pass\n"
      << fmt17(rep.R) << ',' << fmt17(rep.p) << ',' << fmt17(rep.lhs) << ',' << fmt17(rep.rhs) << ','
      << fmt17(rep.measured_constant) << ',' << fmt17(rep.theoretical_constant) << ','
      << (rep.pass ? "true" : "false") << '\n';
  out.write("lip_bound.csv", csv.str());
  return rep.pass ? kExitPass : kExitCheckFailed;
}

int run_energy(const ExperimentPlan& plan, OutputSet& out, Stage& stage, int workers,
               std::uint64_t seed) {
  stage.name = "space";
  const auto space = build_space(plan.space, seed);
  const auto f = build_function(plan.function, space, plan.space);
  stage.name = "energy";
  json j;
  j["energy"] = energy_json(energy(f, space, plan.p, plan.delta), true);
  if (!plan.eps_schedule.empty()) {
    if (plan.p != 1.0) throw ValidationError("eps_schedule applies to p = 1 only");
    j["relaxed"] = energy_json(tv_relax(f, space, plan.eps_schedule, 1e-4, workers), false);
  }
  out.write_json("energy.json", j);
  return kExitPass;
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentPlan parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"space", "function", "family", "p", "omega", "window", "deltas", "depth", "n_cells",
                 "radii", "epsilon", "R", "u", "delta", "eps_schedule"},
             "config");
  ExperimentPlan plan;
  try {
    if (j.contains("space")) plan.space = parse_space(j.at("space"));
    if (j.contains("function")) plan.function = parse_function(j.at("function"));
    if (j.contains("family")) plan.family = parse_family(j.at("family"));
    plan.p = get_or<double>(j, "p", plan.p, "config");
    require(plan.p >= 1.0 && std::isfinite(plan.p), "p", "p ≥ 1");
    if (j.contains("omega")) plan.omega = parse_mask(j.at("omega"), "omega");
    plan.window = get_or<int>(j, "window", plan.window, "config");
    plan.window_given = j.contains("window");
    require(plan.window >= 1, "window", "window ≥ 1");
    plan.deltas = get_or<std::vector<double>>(j, "deltas", plan.deltas, "config");
    require(!plan.deltas.empty(), "deltas", "at least one delta");
    for (double d : plan.deltas) require(d > 0.0, "deltas", "every delta > 0");
    plan.depth = get_or<int>(j, "depth", plan.depth, "config");
    require(plan.depth >= 1 && plan.depth <= 12, "depth", "1 ≤ depth ≤ 12");
    plan.n_cells = get_or<Index>(j, "n_cells", plan.n_cells, "config");
    require(plan.n_cells >= 2, "n_cells", "n_cells ≥ 2");
    plan.radii = get_or<std::vector<double>>(j, "radii", plan.radii, "config");
    require(!plan.radii.empty(), "radii", "at least one radius");
    for (std::size_t k = 0; k < plan.radii.size(); ++k) {
      require(plan.radii[k] > 0.0, "radii", "every radius > 0");
      if (k > 0) require(plan.radii[k] < plan.radii[k - 1], "radii", "strictly decreasing radii");
    }
    plan.epsilon = get_or<double>(j, "epsilon", plan.epsilon, "config");
    require(plan.epsilon > 0.0 && plan.epsilon < 1.0, "epsilon", "0 < epsilon < 1");
    plan.radius = get_or<double>(j, "R", plan.radius, "config");
    require(plan.radius > 0.0, "R", "R > 0");
    if (j.contains("u")) plan.u = parse_mask(j.at("u"), "u");
    plan.delta = get_or<double>(j, "delta", plan.delta, "config");
    require(plan.delta >= 0.0, "delta", "delta ≥ 0");
    plan.eps_schedule = get_or<std::vector<double>>(j, "eps_schedule", {}, "config");
    if (plan.family) build_family(*plan.family, plan.p);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  json& e = plan.echo;
  e["space"] = space_json(plan.space);
  e["function"] = function_json(plan.function);
  e["family"] = plan.family ? family_json(*plan.family) : json(nullptr);
  e["p"] = plan.p;
  e["omega"] = mask_json(plan.omega);
  e["window"] = plan.window;
  e["deltas"] = plan.deltas;
  e["depth"] = plan.depth;
  e["n_cells"] = plan.n_cells;
  e["radii"] = plan.radii;
  e["epsilon"] = plan.epsilon;
  e["R"] = plan.radius;
  e["u"] = mask_json(plan.u);
  e["delta"] = plan.delta;
  e["eps_schedule"] = plan.eps_schedule;
  return plan;
}

MetricMeasureSpace build_space(const SpaceSpec& spec, std::uint64_t seed) {
  if (spec.type == "matrix") return MetricMeasureSpace::from_matrix(spec.dist, spec.mass, seed);
  if (spec.weights == "uniform") return MetricMeasureSpace::uniform_interval(spec.n_cells);
  if (spec.weights == "fat_cantor") return cantor_space(fat_cantor(spec.depth), spec.n_cells);
  const Vector w = Eigen::Map<const Vector>(spec.weight_values.data(),
                                            static_cast<Index>(spec.weight_values.size()));
  return MetricMeasureSpace::weighted_interval(spec.n_cells, w);
}

GridFunction build_function(const FunctionSpec& spec, const MetricMeasureSpace& space,
                            const SpaceSpec& space_spec) {
  const Index n = space.size();
  if (spec.name == "table") {
    if (static_cast<Index>(spec.table.size()) != n) throw ValidationError("function.table: length must equal the number of points");
    return Eigen::Map<const Vector>(spec.table.data(), n);
  }
  if (spec.name == "cantor") {
    if (space_spec.weights != "fat_cantor") throw ValidationError("function cantor needs a fat_cantor weighted space");
    return cantor_function(fat_cantor(space_spec.depth), space).f;
  }
  // Interval spaces use coordinates; matrix spaces use the distance from point 0.
  Vector x(n);
  for (Index k = 0; k < n; ++k) x[k] = space.is_interval() ? space.coords()[k] : space.dist(0, k);
  if (spec.name == "ramp") return spec.power == 1.0 ? x : Vector(x.array().pow(spec.power));
  if (spec.name == "step") return (x.array() >= spec.location).cast<double>();
  const double mid = 0.5 * (spec.lo + spec.hi), half = 0.5 * (spec.hi - spec.lo);
  return (spec.height * (1.0 - (x.array() - mid).abs() / half).max(0.0)).matrix();
}

MollifierFamily build_family(const FamilySpec& spec, double p) {
  if (spec.kind == "fractional") return MollifierFamily::fractional(p, spec.params);
  if (spec.kind == "window") return MollifierFamily::window(p, spec.params);
  if (spec.kind == "indicator") {
    return MollifierFamily::indicator(spec.params, spec.normalization == "lebesgue_1d"
                                                       ? Normalization::lebesgue_1d
                                                       : Normalization::mu_ball, p);
  }
  if (spec.profile == "ring") return MollifierFamily::ring(p, spec.center, spec.halfwidth, spec.n_indices);
  return MollifierFamily::tabulated(p, spec.n_indices, spec.table);
}

DomainMask build_mask(const MaskSpec& spec, const MetricMeasureSpace& space) {
  const Index n = space.size();
  if (spec.kind == "full") return full_mask(n);
  if (spec.kind == "interval") {
    if (!space.is_interval()) throw ValidationError("interval masks need an interval space");
    return interval_mask(space, spec.lo, spec.hi);
  }
  if (static_cast<Index>(spec.values.size()) != n) throw ValidationError("mask array length must equal the number of points");
  DomainMask m(n);
  for (Index k = 0; k < n; ++k) m[k] = spec.values[static_cast<std::size_t>(k)];
  return m;
}

int run_plan(const std::string& command, const ExperimentPlan& plan,
             const std::filesystem::path& out_dir, int workers, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  Stage stage;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cli: cannot create output directory " << out_dir << ": " << ec.message() << '\n';
    return kExitError;
  }
  OutputSet out(out_dir);
  json meta;
  meta["command"] = command;
  meta["workers"] = workers;
  meta["seed"] = seed;
  int code = kExitError;
  try {
    if (command == "sweep") {
      code = run_sweep(plan, out, meta, stage, workers, seed);
    } else if (command == "check-mollifier") {
      code = run_check(plan, out, stage, workers, seed);
    } else if (command == "counterexample") {
      code = run_cantor(plan, out, meta, stage, workers);
    } else if (command == "smooth") {
      code = run_smooth(plan, out, stage, workers, seed);
    } else if (command == "energy") {
      code = run_energy(plan, out, stage, workers, seed);
    } else {
      throw ValidationError("unknown command \"" + command + "\"");
    }
    stage.name = "cli";
    out.write_json("plan.json", plan.echo);
    meta["exit_code"] = code;
    meta["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.write_json("run_meta.json", meta);
  } catch (const std::exception& e) {
    out.remove_all();
    std::cerr << stage.name << ": " << e.what() << '\n';
    return kExitError;
  }
  return code;
}

}  // namespace nonlocal
