#pragma once

// Declarative experiment description, loaded from and saved to JSON.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "goalinfer/geom.hpp"
#include "goalinfer/neural.hpp"
#include "goalinfer/planner.hpp"

namespace goalinfer {

enum class ModelKind { drone, waypoint, common_goal, belief_goal };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// A transition strategy for goal inference.
struct StrategySpec {
  std::string kind = "cr";  // cr | nni | rni
  int samples = 1;          // K, for nested strategies

  std::string label() const;
};

struct InferenceConfig {
  StrategySpec strategy;
  int transitions = 1000;
  int replicates = 480;
  /// Kernel schedule; model-specific names (e.g. "joint", "goal", "obstacle").
  std::vector<std::string> kernels;
};

struct EvalConfig {
  std::vector<StrategySpec> strategies;
  std::vector<int> transition_counts;
  int replicates = 96;
  int reference_transitions = 3000;
  int reference_replicates = 96;
  int grid = 5;
  double pseudocount = 0.1;
  /// Per-strategy transition counts highlighted in the chart.
  std::vector<int> marked_transitions;
};

struct PlanSetting {
  int refinement_iters = 1000;
  int restarts = 10;
};

struct PlanConfig {
  Point goal = Point(0.9, 0.9);
  int count = 60;
  std::vector<PlanSetting> settings;
};

struct NeuralConfig {
  std::string net_file;
  int examples = 10000;
  int hidden = 64;
  TrainConfig train;
};

struct BeliefConfig {
  Point post_lo = Point(0.0, 0.0);
  Point post_hi = Point(1.0, 1.0);
  double angle_lo = 0.0;
  double angle_hi = 3.141592653589793;
  double length_lo = 0.1;
  double length_hi = 0.5;
  double width = 0.02;
};

struct Region {
  std::string name;
  Polygon polygon;
};

struct Scenario {
  int schema_version = 1;
  std::string name;
  ModelKind model = ModelKind::drone;
  std::uint64_t seed = 0;
  WorldMap map;
  /// One start per agent.
  std::vector<Point> starts;
  TimeGrid times;
  /// One observed series per agent; may be empty for plan-only scenarios.
  std::vector<LocationSeries> observations;
  PlannerParams planner;
  /// Planner settings used instead of `planner` when running at full scale.
  std::optional<PlannerParams> full_planner;
  double obs_noise = 0.02;
  InferenceConfig inference;
  std::optional<InferenceConfig> full_inference;
  EvalConfig eval;
  std::optional<EvalConfig> full_eval;
  PlanConfig plan;
  NeuralConfig neural;
  BeliefConfig belief;
  std::vector<Region> regions;
  /// Directory the scenario was loaded from; relative paths resolve here.
  std::string base_dir;
};

/// Scenario validation or parse failure; field() is a JSON pointer.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& s);

/// 16 hex digits of FNV-1a over the canonical JSON form.
std::string scenario_hash(const Scenario& s);

/// Checks the fields required by the scenario's model kind.
void validate_scenario(const Scenario& s);

}  // namespace goalinfer
