#pragma once

// The plan / infer / train / eval commands. Each returns its output files in
// memory; writing them is a separate step.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "goalinfer/scenario.hpp"

namespace goalinfer {

struct RunOptions {
  /// Overrides the scenario seed.
  std::optional<std::uint64_t> seed;
  /// Use the scenario's full-scale sections.
  bool full = false;
  /// Network file for neural strategies; defaults to the scenario's.
  std::string net_path;
  /// Plan count; negative means the scenario's value.
  int count = -1;
};

struct RunOutput {
  /// File name -> contents. CSV rows carry the scenario hash and seed.
  std::map<std::string, std::string> files;
  std::vector<std::pair<std::string, double>> summary;

  double summary_value(const std::string& key) const;
};

PlannerParams effective_planner(const Scenario& s, bool full);
InferenceConfig effective_inference(const Scenario& s, bool full);
EvalConfig effective_eval(const Scenario& s, bool full);

RunOutput cmd_plan(const Scenario& s, const RunOptions& opts = {});
RunOutput cmd_infer(const Scenario& s, const RunOptions& opts = {});
RunOutput cmd_train(const Scenario& s, const RunOptions& opts = {});
RunOutput cmd_eval(const Scenario& s, const RunOptions& opts = {});

void write_run_output(const RunOutput& out, const std::filesystem::path& dir);

/// Shortest round-trip decimal form used in every CSV.
std::string format_number(double v);

}  // namespace goalinfer
