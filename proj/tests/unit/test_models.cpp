#include "doctest.h"

#include <cmath>

#include "goalinfer/models.hpp"

using namespace goalinfer;

namespace {

Scenario scenario(const std::string& file) { return load_scenario(std::string(GOALINFER_SCENARIO_DIR) + "/" + file); }

std::vector<Value> simulate(const ModelGraph& g, std::uint64_t seed) {
  RandomStream rng(seed);
  return simulate_trace(g, rng).values;
}

}  // namespace

TEST_CASE("flatten and unflatten") {
  LocationSeries z(2, 3);
  z << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  const Value v = flatten(z);
  CHECK(v.size() == 6);
  CHECK(v[1] == 0.4);
  CHECK(unflatten(v) == z);
  CHECK_THROWS(unflatten(Value::Zero(3)));
}

TEST_CASE("primitives") {
  RandomStream rng(1);
  const PrimitiveType box = uniform_box_primitive({0.2, 0.4}, {0.3, 0.9});
  for (int k = 0; k < 200; ++k) {
    const Value v = box.simulate(Args(), rng);
    CHECK(v[0] >= 0.2);
    CHECK(v[0] < 0.3);
    CHECK(v[1] >= 0.4);
    CHECK(v[1] < 0.9);
  }
  CHECK(box.log_density(Eigen::Vector2d(0.25, 0.5), Args()) == doctest::Approx(-std::log(0.1 * 0.5)));
  CHECK(box.log_density(Eigen::Vector2d(0.5, 0.5), Args()) == -INFINITY);
  CHECK(uniform_point_primitive().log_density(Eigen::Vector2d(0.5, 0.5), Args()) == 0.0);
  CHECK(bernoulli_primitive(0.3).log_density(Value::Constant(1, 1.0), Args()) == doctest::Approx(std::log(0.3)));
  CHECK(bernoulli_primitive(0.3).log_density(Value::Constant(1, 0.0), Args()) == doctest::Approx(std::log(0.7)));

  // Observation densities are finite everywhere in the square.
  const PrimitiveType obs = gaussian_point_primitive(0.02);
  for (int k = 0; k < 200; ++k) {
    CHECK(std::isfinite(obs.log_density(rng.unit_square(), rng.unit_square())));
  }
  CHECK_THROWS(gaussian_point_primitive(0.0));
  CHECK(agent_path_primitive(WorldMap(), {0.1, 0.1}, TimeGrid::uniform(0.1, 0.1, 3), PlannerParams{}).likelihood_free());
}

TEST_CASE("obstacle rectangles") {
  const Polygon r = obstacle_rectangle({0.5, 0.5}, 0.0, 0.3, 0.02);
  CHECK(r.contains({0.6, 0.5}));
  CHECK_FALSE(r.contains({0.45, 0.5}));
  CHECK(r.upper().x() == doctest::Approx(0.8));
  RandomStream rng(2);
  for (int k = 0; k < 200; ++k) {
    CHECK_NOTHROW(obstacle_rectangle(rng.unit_square(), rng.uniform(0.0, M_PI), rng.uniform(0.1, 0.5), 0.02));
  }
}

TEST_CASE("drone model") {
  Scenario s = scenario("enclosure_scenario1.json");
  const ModelGraph g = build_drone_model(s);
  CHECK(g.size() == 2 + s.times.size());
  CHECK_FALSE(g.likelihood_free(g.id("goal")));
  CHECK(g.likelihood_free(g.id("path")));
  for (std::size_t k = 0; k < s.times.size(); ++k) CHECK(g.constrained(g.id("obs_" + std::to_string(k))));

  const std::vector<Value> v = simulate(g, 3);
  CHECK(v[g.id("path")].size() == static_cast<Eigen::Index>(2 * s.times.size()));
  // Each observation reads its own time slice of the path.
  const Args x3 = g.args(g.id("obs_3"), v);
  CHECK(x3 == v[g.id("path")].segment<2>(6));

  Scenario one = s;
  one.times = TimeGrid({0.5});
  one.observations = {LocationSeries(s.observations.front().leftCols(1))};
  CHECK(build_drone_model(one).size() == 3);

  Scenario empty = s;
  empty.observations.clear();
  CHECK_THROWS(build_drone_model(empty));
  Scenario mismatch = s;
  mismatch.observations = {LocationSeries(s.observations.front().leftCols(3))};
  CHECK_THROWS(build_drone_model(mismatch));
}

TEST_CASE("waypoint model layouts") {
  const Scenario s = scenario("waypoint.json");
  const BuiltModel cr = build_waypoint_model(s, {"cr", 1});
  CHECK(cr.graph.contains("path"));
  CHECK(cr.graph.contains("obs_0"));
  CHECK(cr.nias.empty());

  const BuiltModel rni = build_waypoint_model(s, {"rni", 10});
  REQUIRE(rni.graph.size() == 2);
  const NodeId site = rni.graph.id("noisy_path");
  CHECK(rni.graph.observed_likelihood_free(site));
  REQUIRE(rni.nias.count(site) == 1);
  CHECK(rni.nias.at(site).samples == 10);
  CHECK(build_waypoint_model(s, {"rni", 2}).nias.at(site).samples == 2);

  CHECK_THROWS(build_waypoint_model(s, {"nni", 1}));
  const ProposalNet net = load_net(std::string(GOALINFER_SCENARIO_DIR) + "/" + s.neural.net_file);
  const BuiltModel nni = build_waypoint_model(s, {"nni", 1}, &net);
  CHECK(nni.nias.at(nni.graph.id("noisy_path")).samples == 1);
  CHECK_THROWS(build_waypoint_model(s, {"magic", 1}));

  // Short NNI chains run end to end.
  ChainSpec spec{nni.graph, make_schedule(nni, {"nni", 1}), 3, 4, 5, {}};
  const ChainRun run = run_chains(spec);
  CHECK(run.finals.size() == 4);
}

TEST_CASE("common-goal model routes the shared goal") {
  const Scenario s = scenario("common_goal_short.json");
  const ModelGraph g = build_common_goal_model(s);
  std::vector<Value> v = simulate(g, 6);
  const NodeId flag = g.id("is_common_goal");
  const NodeId ga = g.id("goal_a");
  const NodeId gb = g.id("goal_b");
  v[ga] = Eigen::Vector2d(0.2, 0.3);
  v[gb] = Eigen::Vector2d(0.7, 0.8);

  v[flag] = Value::Constant(1, 1.0);
  const Args a_common = g.args(g.id("path_a"), v);
  const Args b_common = g.args(g.id("path_b"), v);
  CHECK(b_common == v[ga]);
  CHECK(a_common == v[ga]);

  v[flag] = Value::Constant(1, 0.0);
  CHECK(g.args(g.id("path_a"), v) == a_common);
  CHECK(g.args(g.id("path_b"), v) == v[gb]);
  for (NodeId j = 0; j < g.size(); ++j) {
    if (g.name(j) == "path_b" || g.name(j).rfind("obs_b_", 0) == 0) continue;
    v[flag] = Value::Constant(1, 1.0);
    const Args on = g.args(j, v);
    v[flag] = Value::Constant(1, 0.0);
    CHECK(g.args(j, v) == on);
  }

  Scenario one_agent = s;
  one_agent.observations.pop_back();
  CHECK_THROWS(build_common_goal_model(one_agent));

  const Scenario driving = scenario("driving_common_goal.json");
  const ModelGraph dg = build_common_goal_model(driving);
  CHECK(dg.contains("is_common_goal"));
  CHECK(dg.parents(dg.id("path_b")).size() == 3);
}

TEST_CASE("observed average speed") {
  LocationSeries z(2, 3);
  z << 0.0, 0.3, 0.3, 0.0, 0.0, 0.4;
  CHECK(observed_average_speed(z, TimeGrid({0.0, 1.0, 2.0})) == doctest::Approx(0.35));
  CHECK_THROWS(observed_average_speed(LocationSeries(z.leftCols(1)), TimeGrid({1.0})));
}

TEST_CASE("belief model validation") {
  const Scenario s = scenario("belief_goal.json");
  const ModelGraph g = build_belief_goal_model(s);
  for (const char* n : {"goal", "obstacle_post", "obstacle_angle", "obstacle_length", "path"}) CHECK(g.contains(n));
  CHECK(g.parents(g.id("path")).size() == 4);

  Scenario zero_length = s;
  zero_length.belief.length_lo = 0.0;
  CHECK_THROWS(build_belief_goal_model(zero_length));
  Scenario flat = s;
  flat.belief.angle_hi = flat.belief.angle_lo;
  CHECK_THROWS(build_belief_goal_model(flat));
  Scenario inverted = s;
  inverted.belief.post_hi = Point(0.1, 0.1);
  CHECK_THROWS(build_belief_goal_model(inverted));
}

TEST_CASE("model dispatch and schedules") {
  const Scenario drone = scenario("enclosure_scenario2.json");
  CHECK_THROWS(build_model(drone, {"rni", 2}));
  const BuiltModel m = build_model(drone, {"cr", 1});
  CHECK(m.default_kernels == std::vector<std::string>{"goal"});
  CHECK(make_schedule(m, {"cr", 1}).size() == 1);
  CHECK_THROWS(make_schedule(m, {"cr", 1}, {"nope"}));
  CHECK_THROWS(make_schedule(m, {"rni", 2}));

  const BuiltModel belief = build_model(scenario("belief_goal.json"), {"cr", 1});
  CHECK(make_schedule(belief, {"cr", 1}, {"joint", "goal", "obstacle"}).size() == 3);
}
