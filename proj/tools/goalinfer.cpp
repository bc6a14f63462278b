#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "goalinfer/commands.hpp"

namespace {

int run(const std::string& command, const std::string& scenario_path, const goalinfer::RunOptions& opts,
        std::string out_dir) {
  using namespace goalinfer;
  const Scenario s = load_scenario(scenario_path);
  RunOutput out;
  if (command == "plan") out = cmd_plan(s, opts);
  else if (command == "infer") out = cmd_infer(s, opts);
  else if (command == "train") out = cmd_train(s, opts);
  else out = cmd_eval(s, opts);

  write_run_output(out, out_dir);
  for (const auto& [name, contents] : out.files) std::cout << "wrote " << (std::filesystem::path(out_dir) / name).string() << '\n';
  for (const auto& [key, value] : out.summary) std::cout << key << " = " << format_number(value) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal inference with likelihood-free planners"};
  app.require_subcommand(1);

  std::string scenario;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool full = false;
  std::string net;
  int count = -1;

  for (const char* name : {"plan", "infer", "train", "eval"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_flag("--full", full, "Use the full-scale sections of the scenario");
    if (std::string(name) == "plan") sub->add_option("--count", count, "Number of runs per setting");
    if (std::string(name) == "infer" || std::string(name) == "eval") {
      sub->add_option("--net", net, "Trained network file for neural strategies");
    }
  }
  CLI11_PARSE(app, argc, argv);

  if (const char* env = std::getenv("GOALINFER_OUT_DIR"); env != nullptr && *env != '\0') out_dir = env;

  goalinfer::RunOptions opts;
  if (app.get_subcommands().front()->count("--seed") > 0) opts.seed = seed;
  opts.full = full;
  opts.net_path = net;
  opts.count = count;
  try {
    return run(app.get_subcommands().front()->get_name(), scenario, opts, out_dir);
  } catch (const goalinfer::ScenarioError& e) {
    std::cerr << "scenario error at " << e.field() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
