#pragma once

// The four goal-inference programs as model graphs over the planner
// primitives, plus the proposal kernels and schedules each one ships with.

#include <map>
#include <string>
#include <vector>

#include "goalinfer/inference.hpp"
#include "goalinfer/neural.hpp"
#include "goalinfer/scenario.hpp"

namespace goalinfer {

// Primitive choices shared by the models.

/// Uniform over [0,1]^2; value is a 2-vector.
PrimitiveType uniform_point_primitive();
/// Uniform over an axis-aligned box.
PrimitiveType uniform_box_primitive(const Point& lo, const Point& hi);
/// Uniform over [lo, hi); value is a 1-vector.
PrimitiveType uniform_scalar_primitive(double lo, double hi);
/// Bernoulli(p) stored as 0.0 / 1.0.
PrimitiveType bernoulli_primitive(double p);
/// Isotropic Gaussian around a 2-vector mean.
PrimitiveType gaussian_point_primitive(double sigma);
/// agent_path with args = goal; value is the walked series flattened (2T).
PrimitiveType agent_path_primitive(WorldMap map, Point start, TimeGrid times, PlannerParams params);

Value flatten(const LocationSeries& z);
LocationSeries unflatten(const Value& v);

/// Thin rectangle of the given width from post along angle for length.
Polygon obstacle_rectangle(const Point& post, double angle, double length, double width);

/// Everything needed to run chains on one of the models.
struct BuiltModel {
  ModelGraph graph;
  NestedInferenceMap nias;
  std::map<std::string, ProposalKernel> kernels;
  std::vector<std::string> default_kernels;
};

ModelGraph build_drone_model(const Scenario& s);

/// The waypoint program in one of two layouts. Strategy "cr" builds
/// goal -> path -> obs_k with tractable Gaussian observations; "nni" and "rni"
/// build goal -> noisy_path with the series observed on the primitive itself
/// and a nested inference algorithm attached. "nni" needs a network.
BuiltModel build_waypoint_model(const Scenario& s, const StrategySpec& strategy,
                                const ProposalNet* net = nullptr);

ModelGraph build_common_goal_model(const Scenario& s);

ModelGraph build_belief_goal_model(const Scenario& s);

/// Model graph plus kernels for any model kind and strategy.
BuiltModel build_model(const Scenario& s, const StrategySpec& strategy,
                       const ProposalNet* net = nullptr);

/// One transition per named kernel, cascading for "cr" and nested otherwise.
std::vector<Transition> make_schedule(const BuiltModel& model, const StrategySpec& strategy,
                                      std::vector<std::string> kernel_names = {});

/// Average speed along an observed series: path length over elapsed time.
double observed_average_speed(const LocationSeries& z, const TimeGrid& t);

}  // namespace goalinfer
