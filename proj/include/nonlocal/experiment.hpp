#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nonlocal/core.hpp"
#include "nonlocal/mollifier.hpp"
#include "nonlocal/space.hpp"

namespace nonlocal {

struct SpaceSpec {
  std::string type = "interval";    // "interval" or "matrix"
  Index n_cells = 1024;
  std::string weights = "uniform";  // "uniform", "array" or "fat_cantor"
  std::vector<double> weight_values;
  int depth = 3;                    // fat_cantor weights
  Matrix dist;
  Vector mass;
};

struct FunctionSpec {
  std::string name = "ramp";  // ramp, step, tent, cantor, table
  double power = 1.0;         // ramp: x^power
  double location = 0.5;      // step: 1{x >= location}
  double lo = 0.375;          // tent support
  double hi = 0.625;
  double height = 1.0;
  std::vector<double> table;
};

struct FamilySpec {
  std::string kind = "indicator";  // fractional, window, indicator, custom
  std::vector<double> params;
  std::string normalization = "mu_ball";
  std::string profile;             // custom: "ring" or "table"
  double center = 0.5;
  double halfwidth = 0.01;
  std::size_t n_indices = 5;
  std::vector<MollifierFamily::TableEntry> table;
};

struct MaskSpec {
  std::string kind = "full";  // "full", "interval" or "array"
  double lo = 0.0;
  double hi = 1.0;
  std::vector<bool> values;
};

/// Validated run description with every default filled in.
struct ExperimentPlan {
  SpaceSpec space;
  FunctionSpec function;
  std::optional<FamilySpec> family;
  double p = 1.0;
  MaskSpec omega;
  int window = 3;
  bool window_given = false;  // a defaulted window shrinks to the family size
  // check-mollifier
  std::vector<double> deltas{0.5, 0.1};
  // counterexample
  int depth = 3;
  Index n_cells = 16384;
  std::vector<double> radii{0.03125, 0.0078125, 0.001953125};
  double epsilon = 0.05;
  // smooth
  double radius = 0.05;
  MaskSpec u{"interval", 0.2, 0.8, {}};
  // energy
  double delta = 0.0;
  std::vector<double> eps_schedule;

  nlohmann::ordered_json echo;  // normalized plan, written to plan.json
};

ExperimentPlan parse_config(const std::string& text);

MetricMeasureSpace build_space(const SpaceSpec& spec, std::uint64_t seed = 0);
GridFunction build_function(const FunctionSpec& spec, const MetricMeasureSpace& space,
                            const SpaceSpec& space_spec);
MollifierFamily build_family(const FamilySpec& spec, double p);
DomainMask build_mask(const MaskSpec& spec, const MetricMeasureSpace& space);

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

/// Commands: sweep, check-mollifier, counterexample, smooth, energy.
/// Writes data files plus plan.json and run_meta.json into out_dir and returns
/// the exit code. Errors are reported on stderr and remove partial outputs.
int run_plan(const std::string& command, const ExperimentPlan& plan,
             const std::filesystem::path& out_dir, int workers = 1, std::uint64_t seed = 0);

}  // namespace nonlocal
