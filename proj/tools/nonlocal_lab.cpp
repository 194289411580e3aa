// Command-line runner for nonlocal functional experiments.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nonlocal/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal functional laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int workers = 1;
  std::uint64_t seed = 0;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"sweep", "evaluate the functional along a mollifier family"},
      {"check-mollifier", "certify the admissibility conditions of a family"},
      {"counterexample", "run the fat Cantor counterexample"},
      {"smooth", "covering, partition of unity and Lip bound check"},
      {"energy", "reference energy of a grid function"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON plan")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
    sub->add_option("--seed", seed, "seed for sampled validations")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nonlocal::kExitError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::ifstream in(config_path);
  std::stringstream text;
  text << in.rdbuf();

  nonlocal::ExperimentPlan plan;
  try {
    plan = nonlocal::parse_config(text.str());
  } catch (const std::exception& e) {
    std::cerr << "config: " << e.what() << '\n';
    return nonlocal::kExitError;
  }
  return nonlocal::run_plan(command, plan, out_dir, workers, seed);
}
