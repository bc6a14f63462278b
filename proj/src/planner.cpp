#include "goalinfer/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace goalinfer {

void PlannerParams::validate() const {
  if (refinement_iters < 0) throw std::invalid_argument("planner: refinement_iters must be >= 0");
  if (restarts < 1) throw std::invalid_argument("planner: restarts must be positive");
  if (max_tree_nodes < 1) throw std::invalid_argument("planner: max_tree_nodes must be positive");
  if (min_tree_nodes < 0 || min_tree_nodes >= max_tree_nodes) {
    throw std::invalid_argument("planner: need 0 <= min_tree_nodes < max_tree_nodes");
  }
  if (!(refine_std > 0.0)) throw std::invalid_argument("planner: refine_std must be positive");
  if (!(agent_speed > 0.0)) throw std::invalid_argument("planner: agent_speed must be positive");
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.empty()) throw std::invalid_argument("time grid must be non-empty");
  if (!(times_.front() >= 0.0)) throw std::invalid_argument("time grid must start at t >= 0");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("time grid must be strictly increasing");
    }
  }
}

TimeGrid TimeGrid::uniform(double first, double step, int count) {
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) t[static_cast<std::size_t>(i)] = first + step * i;
  return TimeGrid(std::move(t));
}

PlanResult rrt(const WorldMap& m, const Point& s, const Point& g, const PlannerParams& params,
               RandomStream& rng) {
  if (!m.valid_state(s)) throw PlannerPreconditionError("rrt: start is not a valid state");
  if (!m.valid_state(g)) throw PlannerPreconditionError("rrt: goal is not a valid state");

  std::vector<Point> vertices{s};
  std::vector<std::size_t> parent{0};
  vertices.reserve(static_cast<std::size_t>(params.max_tree_nodes) + 1);
  parent.reserve(vertices.capacity());

  for (int j = 1; j <= params.max_tree_nodes; ++j) {
    const Point a = rng.unit_square();
    if (!m.valid_state(a)) continue;
    const std::size_t b = nearest_vertex_index<double>(vertices, a);
    const double eps = rng.uniform();
    const Point c = eps * a + (1.0 - eps) * vertices[b];
    if (!m.clear_line(vertices[b], c)) continue;
    vertices.push_back(c);
    parent.push_back(b);
    if (j > params.min_tree_nodes && m.clear_line(c, g)) {
      Path path{g};
      for (std::size_t k = vertices.size() - 1;; k = parent[k]) {
        path.push_back(vertices[k]);
        if (k == 0) break;
      }
      std::reverse(path.begin(), path.end());
      return path;
    }
  }
  return std::nullopt;
}

Path simplify_path(const WorldMap& m, const Path& p) {
  if (p.size() <= 2) return p;
  Path out{p.front()};
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (!m.clear_line(out.back(), p[i + 1])) out.push_back(p[i]);
  }
  out.push_back(p.back());
  return out;
}

Path refine_path(const WorldMap& m, const Path& p, const PlannerParams& params, RandomStream& rng) {
  Path path = p;
  if (path.size() <= 2) return path;
  const std::size_t dims = 2 * (path.size() - 2);
  for (int iter = 0; iter < params.refinement_iters; ++iter) {
    double d = path_length(path);
    for (std::size_t l = 0; l < dims; ++l) {
      const double eps = rng.normal(0.0, params.refine_std);
      const std::size_t k = 1 + l / 2;
      const int coord = static_cast<int>(l % 2);
      const double old = path[k][coord];
      path[k][coord] = old + eps;
      const double d_new = path_length(path);
      // The rest of the path is already clear, so only the moved point and
      // its two segments need checking.
      if (d_new < d && m.clear_line(path[k - 1], path[k]) && m.clear_line(path[k], path[k + 1])) {
        d = d_new;
      } else {
        path[k][coord] = old;
      }
    }
  }
  return path;
}

std::uint64_t restart_seed(std::uint64_t base, int restart) {
  return derive_seed(base, static_cast<std::uint64_t>(restart));
}

PlanResult plan_single_restart(const WorldMap& m, const Point& s, const Point& g,
                               const PlannerParams& params, RandomStream& rng) {
  PlanResult raw = rrt(m, s, g, params, rng);
  if (!raw) return std::nullopt;
  return refine_path(m, simplify_path(m, *raw), params, rng);
}

PlanResult plan_path(const WorldMap& m, const Point& s, const Point& g,
                     const PlannerParams& params, RandomStream& rng) {
  const std::uint64_t base = rng.next_u64();
  PlanResult best;
  double best_length = std::numeric_limits<double>::infinity();
  for (int r = 0; r < params.restarts; ++r) {
    RandomStream sub(restart_seed(base, r));
    PlanResult candidate = plan_single_restart(m, s, g, params, sub);
    if (!candidate) continue;
    const double len = path_length(*candidate);
    if (len < best_length) {
      best_length = len;
      best = std::move(candidate);
    }
  }
  return best;
}

Point walk_to(const Path& p, double t, double speed) {
  double d = 0.0;
  const double target = t * speed;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    const double delta = (p[j] - p[j + 1]).norm();
    if (d + delta > target) {
      const double e = target - d;
      const double w = (delta - e) / delta;
      return w * p[j] + (1.0 - w) * p[j + 1];
    }
    d += delta;
  }
  return p.back();
}

LocationSeries walk_path(const Path& p, const TimeGrid& t, double speed) {
  LocationSeries z(2, static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) z.col(static_cast<Eigen::Index>(i)) = walk_to(p, t[i], speed);
  return z;
}

namespace {

LocationSeries stay_at(const Point& s, const TimeGrid& t) {
  return s.replicate(1, static_cast<Eigen::Index>(t.size()));
}

// Inside a model the endpoints are random, so an invalid start or goal is
// absorbed as a failed plan instead of a precondition error.
PlanResult plan_if_valid(const WorldMap& m, const Point& s, const Point& g,
                         const PlannerParams& params, RandomStream& rng) {
  if (!m.valid_state(s) || !m.valid_state(g)) return std::nullopt;
  return plan_path(m, s, g, params, rng);
}

}  // namespace

LocationSeries agent_path(const WorldMap& m, const Point& s, const Point& g, const TimeGrid& t,
                          const PlannerParams& params, RandomStream& rng) {
  PlanResult p = plan_if_valid(m, s, g, params, rng);
  if (!p) return stay_at(s, t);
  return walk_path(*p, t, params.agent_speed);
}

WaypointTrace waypoint_path_given(const WorldMap& m, const Point& s, const Point& g,
                                  const TimeGrid& t, const PlannerParams& params,
                                  const WaypointChoice& choice, RandomStream& rng) {
  WaypointTrace trace;
  trace.choice = choice;
  if (!choice.use_waypoint) {
    PlanResult p = plan_if_valid(m, s, g, params, rng);
    trace.path = p ? std::move(*p) : Path{s, s};
  } else {
    PlanResult first = plan_if_valid(m, s, choice.waypoint, params, rng);
    if (!first) {
      trace.path = Path{s, s};
    } else {
      trace.path = std::move(*first);
      PlanResult second = plan_if_valid(m, choice.waypoint, g, params, rng);
      if (second) trace.path.insert(trace.path.end(), second->begin() + 1, second->end());
    }
  }
  trace.walked = walk_path(trace.path, t, params.agent_speed);
  return trace;
}

WaypointTrace sample_waypoint_path(const WorldMap& m, const Point& s, const Point& g,
                                   const TimeGrid& t, const PlannerParams& params,
                                   RandomStream& rng) {
  WaypointChoice choice;
  choice.waypoint = rng.unit_square();
  choice.use_waypoint = rng.bernoulli(0.5);
  return waypoint_path_given(m, s, g, t, params, choice, rng);
}

LocationSeries add_noise(const LocationSeries& clean, double noise_std, RandomStream& rng) {
  LocationSeries z = clean;
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] += rng.normal(0.0, noise_std);
  return z;
}

double noise_log_density(const LocationSeries& noisy, const LocationSeries& clean,
                         double noise_std) {
  const double n = static_cast<double>(noisy.size());
  const double sq = (noisy - clean).squaredNorm();
  return -0.5 * sq / (noise_std * noise_std) - n * (std::log(noise_std) + 0.5 * std::log(2.0 * std::numbers::pi));
}

NoisyWaypointRun agent_waypoint_path(const WorldMap& m, const Point& s, const Point& g,
                                     const TimeGrid& t, const PlannerParams& params,
                                     double noise_std, RandomStream& rng) {
  NoisyWaypointRun run;
  run.trace = sample_waypoint_path(m, s, g, t, params, rng);
  run.observed = add_noise(run.trace.walked, noise_std, rng);
  return run;
}

}  // namespace goalinfer
