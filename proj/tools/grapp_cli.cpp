#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "grapp/scenario.hpp"

namespace {

struct RunArgs {
  std::string scenario_path;
  std::string format = "both";
  std::string out_dir;
  grapp::ScenarioOverrides overrides;
};

int run_scenario_file(const RunArgs& args) {
  std::ifstream in(args.scenario_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << args.scenario_path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  grapp::ScenarioResult res = grapp::run_scenario_text(buf.str(), args.overrides);
  std::string machine = grapp::machine_report_string(res);
  const bool want_text = args.format != "machine";
  const bool want_machine = args.format != "text";
  if (!args.out_dir.empty()) {
    std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    std::string stem = std::filesystem::path(args.scenario_path).stem().string();
    if (want_text) {
      std::ofstream f(dir / (stem + ".report.txt"), std::ios::binary);
      f << res.text;
    }
    if (want_machine) {
      std::ofstream f(dir / (stem + ".report.json"), std::ios::binary);
      f << machine;
    }
  }
  if (want_text) std::cout << res.text;
  if (want_machine) std::cout << machine;
  return res.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group approximation scenarios: run checks and constructions from a file"};
  app.require_subcommand(1);

  RunArgs args;
  std::uint64_t budget = 0, seed = 0, samples = 0;
  CLI::App* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("scenario", args.scenario_path, "scenario JSON file")->required();
  auto* budget_opt = run->add_option("--budget", budget, "evaluation budget for exhaustive mode");
  auto* seed_opt = run->add_option("--seed", seed, "sampling seed");
  auto* samples_opt = run->add_option("--samples", samples, "sample count per sampled check");
  run->add_option("--format", args.format, "report format")
      ->check(CLI::IsMember({"text", "machine", "both"}))
      ->capture_default_str();
  run->add_option("--out", args.out_dir, "directory for report files");

  CLI11_PARSE(app, argc, argv);

  if (budget_opt->count()) args.overrides.budget = budget;
  if (seed_opt->count()) args.overrides.seed = seed;
  if (samples_opt->count()) args.overrides.samples = samples;

  try {
    return run_scenario_file(args);
  } catch (const grapp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
