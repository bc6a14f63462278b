#include "goalinfer/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace goalinfer {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool in_box(const Eigen::VectorXd& v, const Point& lo, const Point& hi) {
  return v.size() == 2 && v[0] >= lo[0] && v[0] <= hi[0] && v[1] >= lo[1] && v[1] <= hi[1];
}

void require_single_agent(const Scenario& s, const char* model) {
  const std::string m(model);
  if (s.starts.size() != 1) throw std::invalid_argument(m + ": exactly one start required");
  if (s.observations.size() != 1) throw std::invalid_argument(m + ": exactly one observation series required");
  if (s.observations[0].cols() == 0) throw std::invalid_argument(m + ": observations are empty");
  if (static_cast<std::size_t>(s.observations[0].cols()) != s.times.size()) {
    throw std::invalid_argument(m + ": observation count does not match the time grid");
  }
}

std::string obs_name(const std::string& prefix, Eigen::Index k) {
  return prefix + std::to_string(k);
}

/// Adds one Gaussian observation per time point, reading column k of `path`.
void add_observations(ModelGraph::Builder& b, const std::string& path, const std::string& prefix,
                      const LocationSeries& z, double sigma) {
  const PrimitiveType obs = gaussian_point_primitive(sigma);
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const std::string name = obs_name(prefix, k);
    b.add(name, obs, {path}, [k](std::span<const Value> parents) -> Args {
      return parents[0].segment<2>(2 * k);
    });
    b.constrain(name, z.col(k));
  }
}

WaypointWorld waypoint_world(const Scenario& s) {
  return {s.map, s.starts.front(), s.times, s.planner, s.obs_noise};
}

void check_range(double lo, double hi, const std::string& what) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw std::invalid_argument("belief model: degenerate range for " + what);
  }
}

}  // namespace

Value flatten(const LocationSeries& z) { return z.reshaped(); }

LocationSeries unflatten(const Value& v) {
  if (v.size() % 2 != 0) throw std::invalid_argument("unflatten: odd length");
  return v.reshaped(2, v.size() / 2);
}

PrimitiveType uniform_point_primitive() { return uniform_box_primitive(Point(0, 0), Point(1, 1)); }

PrimitiveType uniform_box_primitive(const Point& lo, const Point& hi) {
  const double log_area = std::log((hi - lo).prod());
  return {"uniform_point",
          [lo, hi](const Args&, RandomStream& rng) -> Value {
            const double x = rng.uniform(lo[0], hi[0]);
            const double y = rng.uniform(lo[1], hi[1]);
            return Eigen::Vector2d(x, y);
          },
          [lo, hi, log_area](const Value& z, const Args&) {
            return in_box(z, lo, hi) ? -log_area : kNegInf;
          }};
}

PrimitiveType uniform_scalar_primitive(double lo, double hi) {
  const double log_width = std::log(hi - lo);
  return {"uniform",
          [lo, hi](const Args&, RandomStream& rng) -> Value {
            return Value::Constant(1, rng.uniform(lo, hi));
          },
          [lo, hi, log_width](const Value& z, const Args&) {
            return z.size() == 1 && z[0] >= lo && z[0] <= hi ? -log_width : kNegInf;
          }};
}

PrimitiveType bernoulli_primitive(double p) {
  return {"bernoulli",
          [p](const Args&, RandomStream& rng) -> Value {
            return Value::Constant(1, rng.bernoulli(p) ? 1.0 : 0.0);
          },
          [p](const Value& z, const Args&) {
            if (z.size() != 1) return kNegInf;
            if (z[0] == 1.0) return std::log(p);
            if (z[0] == 0.0) return std::log1p(-p);
            return kNegInf;
          }};
}

PrimitiveType gaussian_point_primitive(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("observation noise must be positive");
  const double norm = -2.0 * std::log(sigma) - std::log(2.0 * std::numbers::pi);
  return {"gaussian_point",
          [sigma](const Args& mean, RandomStream& rng) -> Value {
            const double x = rng.normal(mean[0], sigma);
            const double y = rng.normal(mean[1], sigma);
            return Eigen::Vector2d(x, y);
          },
          [sigma, norm](const Value& z, const Args& mean) {
            return -0.5 * (z - mean).squaredNorm() / (sigma * sigma) + norm;
          }};
}

PrimitiveType agent_path_primitive(WorldMap map, Point start, TimeGrid times, PlannerParams params) {
  params.validate();
  return {"agent_path",
          [map = std::move(map), start, times = std::move(times), params](const Args& goal,
                                                                         RandomStream& rng) {
            return flatten(agent_path(map, start, goal.head<2>(), times, params, rng));
          },
          {}};
}

Polygon obstacle_rectangle(const Point& post, double angle, double length, double width) {
  const Point d(std::cos(angle), std::sin(angle));
  const Point n(-d[1], d[0]);
  const Point half = 0.5 * width * n;
  const Point tip = post + length * d;
  return Polygon({post - half, tip - half, tip + half, post + half});
}

double observed_average_speed(const LocationSeries& z, const TimeGrid& t) {
  if (z.cols() < 2 || static_cast<std::size_t>(z.cols()) != t.size()) {
    throw std::invalid_argument("average speed needs at least two observations on the time grid");
  }
  double dist = 0.0;
  for (Eigen::Index k = 1; k < z.cols(); ++k) dist += (z.col(k) - z.col(k - 1)).norm();
  return dist / (t[t.size() - 1] - t[0]);
}

ModelGraph build_drone_model(const Scenario& s) {
  require_single_agent(s, "drone model");
  ModelGraph::Builder b;
  b.add("goal", uniform_point_primitive());
  b.add("path", agent_path_primitive(s.map, s.starts.front(), s.times, s.planner), {"goal"});
  add_observations(b, "path", "obs_", s.observations.front(), s.obs_noise);
  return b.build();
}

BuiltModel build_waypoint_model(const Scenario& s, const StrategySpec& strategy, const ProposalNet* net) {
  require_single_agent(s, "waypoint model");
  const WaypointWorld world = waypoint_world(s);
  ModelGraph::Builder b;
  b.add("goal", uniform_point_primitive());
  BuiltModel out;

  if (strategy.kind == "cr") {
    PrimitiveType path{"waypoint_path",
                       [world](const Args& goal, RandomStream& rng) {
                         return flatten(sample_waypoint_path(world.map, world.start, goal.head<2>(),
                                                             world.times, world.planner, rng)
                                            .walked);
                       },
                       {}};
    b.add("path", std::move(path), {"goal"});
    add_observations(b, "path", "obs_", s.observations.front(), s.obs_noise);
    out.graph = b.build();
  } else if (strategy.kind == "nni" || strategy.kind == "rni") {
    PrimitiveType noisy{"agent_waypoint_path",
                        [world](const Args& goal, RandomStream& rng) {
                          return flatten(agent_waypoint_path(world.map, world.start, goal.head<2>(),
                                                             world.times, world.planner,
                                                             world.noise_std, rng)
                                             .observed);
                        },
                        {}};
    b.add("noisy_path", std::move(noisy), {"goal"});
    b.observe("noisy_path", flatten(s.observations.front()));
    out.graph = b.build();
    const NodeId site = out.graph.id("noisy_path");
    if (strategy.kind == "nni") {
      if (net == nullptr) {
        throw std::invalid_argument("waypoint model: neural nested inference requires a trained network");
      }
      out.nias.emplace(site, neural_nested_algorithm(*net, world, strategy.samples));
    } else {
      out.nias.emplace(site, resimulation_nested_algorithm(world, strategy.samples));
    }
  } else {
    throw std::invalid_argument("waypoint model: unknown strategy '" + strategy.kind + "'");
  }
  out.kernels.emplace("goal", prior_kernel(out.graph, std::vector<std::string>{"goal"}, "goal"));
  out.default_kernels = {"goal"};
  return out;
}

ModelGraph build_common_goal_model(const Scenario& s) {
  if (s.starts.size() != 2) throw std::invalid_argument("common-goal model: two starts required");
  if (s.observations.size() != 2) throw std::invalid_argument("common-goal model: two observation series required");
  for (const auto& z : s.observations) {
    if (static_cast<std::size_t>(z.cols()) != s.times.size()) {
      throw std::invalid_argument("common-goal model: observation series length does not match the time grid");
    }
  }
  PlannerParams params_a = s.planner;
  PlannerParams params_b = s.planner;
  params_a.agent_speed = std::max(observed_average_speed(s.observations[0], s.times), 1e-6);
  params_b.agent_speed = std::max(observed_average_speed(s.observations[1], s.times), 1e-6);

  ModelGraph::Builder b;
  b.add("is_common_goal", bernoulli_primitive(0.5));
  b.add("goal_a", uniform_point_primitive());
  b.add("goal_b", uniform_point_primitive());
  b.add("path_a", agent_path_primitive(s.map, s.starts[0], s.times, params_a), {"goal_a"});
  b.add("path_b", agent_path_primitive(s.map, s.starts[1], s.times, params_b),
        {"is_common_goal", "goal_a", "goal_b"}, [](std::span<const Value> p) -> Args {
          return p[0][0] == 1.0 ? p[1] : p[2];
        });
  add_observations(b, "path_a", "obs_a_", s.observations[0], s.obs_noise);
  add_observations(b, "path_b", "obs_b_", s.observations[1], s.obs_noise);
  return b.build();
}

ModelGraph build_belief_goal_model(const Scenario& s) {
  require_single_agent(s, "belief model");
  const BeliefConfig& c = s.belief;
  check_range(c.post_lo[0], c.post_hi[0], "post x");
  check_range(c.post_lo[1], c.post_hi[1], "post y");
  check_range(c.angle_lo, c.angle_hi, "angle");
  check_range(c.length_lo, c.length_hi, "length");
  if (!(c.length_lo > 0.0)) throw std::invalid_argument("belief model: minimum obstacle length must be positive");
  if (!(c.width > 0.0)) throw std::invalid_argument("belief model: obstacle width must be positive");

  s.planner.validate();
  PrimitiveType path{"belief_agent_path",
                     [known = s.map, start = s.starts.front(), times = s.times, params = s.planner,
                      width = c.width](const Args& x, RandomStream& rng) {
                       WorldMap m = known;
                       m.add(obstacle_rectangle(x.segment<2>(2), x[4], x[5], width));
                       return flatten(agent_path(m, start, x.head<2>(), times, params, rng));
                     },
                     {}};

  ModelGraph::Builder b;
  b.add("goal", uniform_point_primitive());
  b.add("obstacle_post", uniform_box_primitive(c.post_lo, c.post_hi));
  b.add("obstacle_angle", uniform_scalar_primitive(c.angle_lo, c.angle_hi));
  b.add("obstacle_length", uniform_scalar_primitive(c.length_lo, c.length_hi));
  b.add("path", std::move(path), {"goal", "obstacle_post", "obstacle_angle", "obstacle_length"});
  add_observations(b, "path", "obs_", s.observations.front(), s.obs_noise);
  return b.build();
}

BuiltModel build_model(const Scenario& s, const StrategySpec& strategy, const ProposalNet* net) {
  if (s.model == ModelKind::waypoint) return build_waypoint_model(s, strategy, net);
  if (strategy.kind != "cr") {
    throw std::invalid_argument(std::string("model '") + to_string(s.model) +
                                "' has no nested inference algorithm; use strategy cr");
  }
  BuiltModel out;
  auto add_kernel = [&](const std::string& name, std::vector<std::string> targets) {
    out.kernels.emplace(name, prior_kernel(out.graph, targets, name));
  };
  switch (s.model) {
    case ModelKind::drone:
      out.graph = build_drone_model(s);
      add_kernel("goal", {"goal"});
      out.default_kernels = {"goal"};
      break;
    case ModelKind::common_goal:
      out.graph = build_common_goal_model(s);
      add_kernel("joint", {"is_common_goal", "goal_a", "goal_b"});
      add_kernel("is_common_goal", {"is_common_goal"});
      add_kernel("goal_a", {"goal_a"});
      add_kernel("goal_b", {"goal_b"});
      out.default_kernels = {"joint"};
      break;
    case ModelKind::belief_goal:
      out.graph = build_belief_goal_model(s);
      add_kernel("joint", {"goal", "obstacle_post", "obstacle_angle", "obstacle_length"});
      add_kernel("goal", {"goal"});
      add_kernel("obstacle", {"obstacle_post", "obstacle_angle", "obstacle_length"});
      out.default_kernels = {"joint"};
      break;
    case ModelKind::waypoint:
      break;
  }
  return out;
}

std::vector<Transition> make_schedule(const BuiltModel& model, const StrategySpec& strategy,
                                      std::vector<std::string> kernel_names) {
  if (kernel_names.empty()) kernel_names = model.default_kernels;
  std::vector<Transition> schedule;
  for (const auto& name : kernel_names) {
    auto it = model.kernels.find(name);
    if (it == model.kernels.end()) throw std::invalid_argument("unknown kernel '" + name + "'");
    if (strategy.kind == "cr") {
      schedule.push_back(cascading_transition(model.graph, it->second));
    } else {
      if (model.nias.empty()) {
        throw std::invalid_argument("nested strategy '" + strategy.kind + "' needs a nested inference algorithm");
      }
      schedule.push_back(nested_transition(model.graph, it->second, model.nias));
    }
  }
  return schedule;
}

}  // namespace goalinfer
