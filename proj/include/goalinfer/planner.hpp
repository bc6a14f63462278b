#pragma once

// Randomized goal-directed motion model. A tree search finds a path, which is
// then shortened, and the agent walks it at constant speed.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "goalinfer/geom.hpp"
#include "goalinfer/random.hpp"

namespace goalinfer {

struct PlannerParams {
  int refinement_iters = 1000;  // N
  int restarts = 10;            // R
  int max_tree_nodes = 10000;   // J
  int min_tree_nodes = 2000;    // S
  double refine_std = 0.01;     // sigma of the refinement perturbation
  double agent_speed = 0.5;     // v

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Raised when the planner is called with a start or goal that is not a valid
/// state. Distinct from a failed search, which is reported as std::nullopt.
class PlannerPreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A planned path, or std::nullopt for "no path found".
using PlanResult = std::optional<Path>;

/// Locations at each observation time, one column per time point.
using LocationSeries = Eigen::Matrix2Xd;

/// Strictly increasing, non-negative observation times.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);

  /// t = first, first + step, ... (count entries).
  static TimeGrid uniform(double first, double step, int count);

  const std::vector<double>& times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t i) const { return times_[i]; }

 private:
  std::vector<double> times_;
};

PlanResult rrt(const WorldMap& m, const Point& s, const Point& g, const PlannerParams& params,
               RandomStream& rng);

/// One-pass shortcutting: an interior point is dropped when the last kept
/// point has line of sight to its successor.
Path simplify_path(const WorldMap& m, const Path& p);

/// Coordinate-wise random local search that accepts strict length decreases
/// keeping the path clear. Endpoints stay fixed.
Path refine_path(const WorldMap& m, const Path& p, const PlannerParams& params, RandomStream& rng);

/// Seed of restart r's private stream, given the base drawn by plan_path.
std::uint64_t restart_seed(std::uint64_t base, int restart);

/// rrt -> simplify -> refine on a single stream.
PlanResult plan_single_restart(const WorldMap& m, const Point& s, const Point& g,
                               const PlannerParams& params, RandomStream& rng);

/// Best of R restarts by path length; failed restarts are skipped.
PlanResult plan_path(const WorldMap& m, const Point& s, const Point& g,
                     const PlannerParams& params, RandomStream& rng);

/// Location at arc length t*v along p, clamped to the final point.
Point walk_to(const Path& p, double t, double speed);
LocationSeries walk_path(const Path& p, const TimeGrid& t, double speed);

/// plan_path then walk_path. A failed plan leaves the agent at s for all times.
LocationSeries agent_path(const WorldMap& m, const Point& s, const Point& g, const TimeGrid& t,
                          const PlannerParams& params, RandomStream& rng);

/// The first-level internal choices of the waypoint planner.
struct WaypointChoice {
  bool use_waypoint = false;
  Point waypoint = Point::Zero();
};

struct WaypointTrace {
  WaypointChoice choice;
  Path path;               // concatenated plan actually walked
  LocationSeries walked;   // noise-free locations
};

/// The waypoint planner with its first-level choices fixed: plans s->g' and
/// g'->g when the waypoint is used, s->g otherwise. A failed first leg leaves
/// the agent at s; a failed second leg stops it at the waypoint.
WaypointTrace waypoint_path_given(const WorldMap& m, const Point& s, const Point& g,
                                  const TimeGrid& t, const PlannerParams& params,
                                  const WaypointChoice& choice, RandomStream& rng);

/// Samples g' ~ Uniform([0,1]^2), then w ~ Bernoulli(0.5), then runs
/// waypoint_path_given. No observation noise.
WaypointTrace sample_waypoint_path(const WorldMap& m, const Point& s, const Point& g,
                                   const TimeGrid& t, const PlannerParams& params,
                                   RandomStream& rng);

/// i.i.d. Gaussian noise per coordinate.
LocationSeries add_noise(const LocationSeries& clean, double noise_std, RandomStream& rng);

/// log density of add_noise(clean) producing noisy.
double noise_log_density(const LocationSeries& noisy, const LocationSeries& clean,
                         double noise_std);

struct NoisyWaypointRun {
  LocationSeries observed;
  WaypointTrace trace;
};

/// Full waypoint primitive: sample_waypoint_path followed by add_noise.
NoisyWaypointRun agent_waypoint_path(const WorldMap& m, const Point& s, const Point& g,
                                     const TimeGrid& t, const PlannerParams& params,
                                     double noise_std, RandomStream& rng);

}  // namespace goalinfer
