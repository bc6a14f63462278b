#include "doctest.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "goalinfer/commands.hpp"
#include "../support/svg_check.hpp"

using namespace goalinfer;

namespace {

Scenario scenario(const std::string& name) {
  return load_scenario(std::string(GOALINFER_SCENARIO_DIR) + "/" + name + ".json");
}

/// Non-empty lines of a CSV, header included.
std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string error_field(auto&& run) {
  try {
    run();
  } catch (const ScenarioError& e) {
    return e.field();
  }
  return "<no error>";
}

Scenario small_drone() {
  Scenario s = scenario("enclosure_scenario2");
  s.inference.transitions = 3;
  s.inference.replicates = 4;
  return s;
}

}  // namespace

TEST_CASE("format_number round trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324}) {
    const std::string text = format_number(v);
    double back = 0.0;
    std::from_chars(text.data(), text.data() + text.size(), back);
    CHECK(back == v);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("effective sections follow the full flag") {
  Scenario s = scenario("waypoint");
  REQUIRE(s.full_planner.has_value());
  CHECK(effective_planner(s, false).refinement_iters == s.planner.refinement_iters);
  CHECK(effective_planner(s, true).refinement_iters == s.full_planner->refinement_iters);
  CHECK(effective_inference(s, true).replicates == s.full_inference->replicates);
  CHECK(effective_eval(s, false).replicates == s.eval.replicates);

  s.full_planner.reset();
  s.full_inference.reset();
  s.full_eval.reset();
  CHECK(effective_planner(s, true).restarts == s.planner.restarts);
  CHECK(effective_inference(s, true).transitions == s.inference.transitions);
  CHECK(effective_eval(s, true).transition_counts == s.eval.transition_counts);
}

TEST_CASE("plan output is byte-identical across runs and carries the scenario hash") {
  const Scenario s = scenario("planner_quality");
  RunOptions opts;
  opts.count = 3;
  const RunOutput a = cmd_plan(s, opts);
  const RunOutput b = cmd_plan(s, opts);
  CHECK(a.files == b.files);
  CHECK(a.files.at("samples.csv").find(scenario_hash(s)) != std::string::npos);
  CHECK(a.files.size() == 1 + s.plan.settings.size());
  for (const auto& [name, text] : a.files) {
    if (name.ends_with(".svg")) CHECK(svgcheck::count(text, "goal").circles_with_class == 1);
  }

  opts.seed = s.seed + 1;
  CHECK(cmd_plan(s, opts).files.at("samples.csv") != a.files.at("samples.csv"));
}

TEST_CASE("zero plans give a header-only table") {
  RunOptions opts;
  opts.count = 0;
  const RunOutput out = cmd_plan(scenario("planner_quality"), opts);
  CHECK(data_lines(out.files.at("samples.csv")).size() == 1);
  CHECK(std::isnan(out.summary_value("mean_length_N10_R1")));
  CHECK(out.summary_value("found_N10_R1") == 0.0);
}

TEST_CASE("plan rejects an unreachable goal") {
  Scenario s = scenario("planner_quality");
  s.plan.goal = Point(0.5, 0.6);
  CHECK(error_field([&] { cmd_plan(s); }) == "/plan/goal");
}

TEST_CASE("inference output is deterministic") {
  const Scenario s = small_drone();
  const RunOutput a = cmd_infer(s);
  const RunOutput b = cmd_infer(s);
  CHECK(a.files.at("samples.csv") == b.files.at("samples.csv"));
  CHECK(data_lines(a.files.at("samples.csv")).size() == 1 + 4 * 2);

  const auto svg = svgcheck::count(a.files.at("samples.svg"), "sample");
  CHECK(svg.valid);
  CHECK(svg.circles_with_class == 4);
  for (const auto& region : s.regions) {
    const double f = a.summary_value("fraction_in_" + region.name);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  CHECK_THROWS_AS(a.summary_value("no_such_key"), std::out_of_range);
}

TEST_CASE("inference needs observations") {
  Scenario s = small_drone();
  s.observations.clear();
  CHECK(error_field([&] { cmd_infer(s); }) == "/observations");
}

TEST_CASE("neural strategy without a network is an error") {
  Scenario s = scenario("waypoint");
  s.neural.net_file.clear();
  s.inference.strategy = {"nni", 1};
  s.inference.replicates = 2;
  CHECK_THROWS_AS(cmd_infer(s), std::invalid_argument);
}

TEST_CASE("eval needs transition counts") {
  Scenario s = scenario("waypoint");
  s.eval.transition_counts.clear();
  CHECK(error_field([&] { cmd_eval(s); }) == "/eval/transition_counts");
}

TEST_CASE("training a small network is reproducible") {
  Scenario s = scenario("waypoint");
  s.neural.examples = 100;
  s.neural.hidden = 8;
  s.neural.train.epochs = 3;
  const RunOutput a = cmd_train(s);
  const RunOutput b = cmd_train(s);
  CHECK(a.files == b.files);
  CHECK(a.files.count("waypoint_net.json") == 1);
  CHECK(data_lines(a.files.at("training_curve.csv")).size() == 1 + 3 + 1);
  CHECK(std::isfinite(a.summary_value("final_validation_nll")));

  CHECK(error_field([&] { cmd_train(small_drone()); }) == "/model");
}

TEST_CASE("run output is written to disk") {
  const auto dir = std::filesystem::temp_directory_path() / "goalinfer_test_commands";
  std::filesystem::remove_all(dir);
  RunOutput out;
  out.files["a.csv"] = "x\n1\n";
  out.files["b.svg"] = "<svg/>";
  write_run_output(out, dir);
  std::ifstream in(dir / "a.csv");
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str() == "x\n1\n");
  CHECK(std::filesystem::exists(dir / "b.svg"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("nested strategy on a model without nested inference is an error") {
  Scenario s = small_drone();
  s.inference.strategy = {"rni", 2};
  CHECK_THROWS_AS(cmd_infer(s), std::invalid_argument);
}

TEST_CASE("belief samples carry the goal and three obstacle parameters") {
  Scenario s = scenario("belief_goal");
  s.inference.transitions = 1;
  s.inference.replicates = 2;
  const std::string csv = cmd_infer(s).files.at("samples.csv");
  for (const char* choice : {"goal", "obstacle_post", "obstacle_angle", "obstacle_length"}) {
    CHECK(csv.find(std::string(",") + choice + ",") != std::string::npos);
  }
  // Replicate 0 has 2 + 2 + 1 + 1 values.
  int rows = 0;
  for (const auto& line : data_lines(csv)) rows += line.starts_with("0,") ? 1 : 0;
  CHECK(rows == 6);
}

TEST_CASE("training aborts on a non-finite loss") {
  Scenario s = scenario("waypoint");
  s.neural.examples = 50;
  s.neural.hidden = 4;
  s.neural.train.epochs = 2;
  s.neural.train.learning_rate = 1e300;
  CHECK_THROWS_AS(cmd_train(s), std::runtime_error);
}
