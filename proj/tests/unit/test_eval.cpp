#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "goalinfer/eval.hpp"
#include "goalinfer/models.hpp"
#include "goalinfer/random.hpp"

using namespace goalinfer;

namespace {

std::vector<Point> uniform_cells(int grid) {
  std::vector<Point> pts;
  for (int y = 0; y < grid; ++y) {
    for (int x = 0; x < grid; ++x) pts.emplace_back((x + 0.5) / grid, (y + 0.5) / grid);
  }
  return pts;
}

std::vector<Point> random_points(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(rng.uniform(), rng.uniform());
  return pts;
}

}  // namespace

TEST_CASE("histogram binning and clamping") {
  BinnedHistogram h(5, 0.1);
  CHECK(h.bin_of(Point(0.0, 0.0)) == 0);
  CHECK(h.bin_of(Point(0.99, 0.0)) == 4);
  CHECK(h.bin_of(Point(0.0, 0.21)) == 5);
  CHECK(h.bin_of(Point(1.0, 1.0)) == 24);
  CHECK(h.bin_of(Point(-3.0, 7.0)) == 20);
  h.add(Point(0.5, 0.5));
  CHECK(h.counts().sum() == 1.0);
  CHECK(h.counts()[12] == 1.0);
  CHECK_THROWS_AS(BinnedHistogram(0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(BinnedHistogram(5, 0.0), std::invalid_argument);
}

TEST_CASE("probabilities sum to one") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    BinnedHistogram h(1 + static_cast<int>(seed % 7), 0.05 * static_cast<double>(seed));
    const auto pts = random_points(seed * 13, seed);
    h.add(pts);
    const Eigen::VectorXd p = h.probabilities();
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.minCoeff() > 0.0);
  }
}

TEST_CASE("KL of a single-bin reference against a uniform test") {
  const int grid = 5;
  const double c = 0.1;
  const std::size_t n = 40;
  const std::vector<Point> reference(n, Point(0.1, 0.1));
  const std::vector<Point> test = uniform_cells(grid);

  const double bins = grid * grid;
  const double denom = static_cast<double>(n) + bins * c;
  const double p_hit = (static_cast<double>(n) + c) / denom;
  const double p_miss = c / denom;
  const double q = 1.0 / bins;
  const double expected = p_hit * std::log(p_hit / q) + (bins - 1.0) * p_miss * std::log(p_miss / q);

  CHECK(binned_kl(reference, test, grid, c) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("identical lists have zero divergence") {
  const auto pts = random_points(500, 9);
  CHECK(binned_kl(pts, pts) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("divergence ignores sample order and is non-negative") {
  auto a = random_points(300, 1);
  auto b = random_points(200, 2);
  const double kl = binned_kl(a, b);
  CHECK(kl >= 0.0);
  std::reverse(a.begin(), a.end());
  std::rotate(b.begin(), b.begin() + 57, b.end());
  CHECK(binned_kl(a, b) == doctest::Approx(kl).epsilon(1e-12));
}

TEST_CASE("acceptance statistics") {
  ChainLog log;
  log.kernels.push_back({"always", 10, 10, 0.5});
  log.kernels.push_back({"never", 4, 0, 0.004});
  log.kernels.push_back({"idle", 0, 0, 0.0});
  const auto stats = acceptance_stats(log);
  REQUIRE(stats.size() == 3);
  CHECK(stats[0].name == "always");
  CHECK(stats[0].acceptance == 1.0);
  CHECK(stats[0].ms_per_transition == doctest::Approx(50.0));
  CHECK(stats[1].acceptance == 0.0);
  CHECK(stats[1].ms_per_transition == doctest::Approx(1.0));
  CHECK(stats[2].proposed == 0);
  CHECK(stats[2].acceptance == 0.0);
}

TEST_CASE("an empty strategy list gives an empty curve") {
  const Scenario s = load_scenario(std::string(GOALINFER_SCENARIO_DIR) + "/waypoint.json");
  EvalConfig cfg = s.eval;
  cfg.strategies.clear();
  const ConvergenceCurve curve = convergence_study(s, cfg, 1);
  CHECK(curve.points.empty());
  CHECK(curve.reference_samples == 0);
}

TEST_CASE("short convergence study on the waypoint scenario") {
  const Scenario s = load_scenario(std::string(GOALINFER_SCENARIO_DIR) + "/waypoint.json");
  const ProposalNet net = load_net(std::string(GOALINFER_SCENARIO_DIR) + "/" + s.neural.net_file);
  EvalConfig cfg = s.eval;
  cfg.strategies = {{"cr", 1}, {"nni", 1}};
  cfg.transition_counts = {3, 30};
  cfg.replicates = 96;
  const std::vector<Point> reference = random_points(50, 4);

  const ConvergenceCurve curve = convergence_study(s, cfg, 5, reference, &net);
  REQUIRE(curve.points.size() == 4);
  for (const auto& p : curve.points) {
    CHECK(p.samples == 96);
    CHECK(p.kl >= 0.0);
    CHECK(p.acceptance >= 0.0);
    CHECK(p.acceptance <= 1.0);
  }

  const ConvergenceCurve again = convergence_study(s, cfg, 5, reference, &net);
  REQUIRE(again.points.size() == curve.points.size());
  for (std::size_t k = 0; k < curve.points.size(); ++k) CHECK(again.points[k].kl == curve.points[k].kl);
}

namespace {

/// Fraction of prior-initialised replicates that accept a jump to `goal`.
double acceptance_of_fixed_goal(const Scenario& s, const StrategySpec& strategy, const ProposalNet* net,
                                const Point& goal) {
  const BuiltModel model = build_model(s, strategy, net);
  ProposalKernel k;
  k.name = "fixed-goal";
  k.targets = {model.graph.id("goal")};
  k.propose = [goal](const ModelGraph&, std::span<const Value>, RandomStream&) {
    return std::vector<Value>{goal};
  };
  k.log_density = [](const ModelGraph&, std::span<const Value>, std::span<const Value>) { return 0.0; };

  ChainSpec spec;
  spec.model = model.graph;
  spec.schedule = {strategy.kind == "cr" ? cascading_transition(model.graph, k)
                                         : nested_transition(model.graph, k, model.nias)};
  spec.num_transitions = 1;
  spec.num_replicates = 400;
  spec.seed = 21;
  const ChainRun run = run_chains(spec);
  return acceptance_stats(run.log).front().acceptance;
}

}  // namespace

TEST_CASE("neural nested inference accepts a matched goal proposal more often") {
  const Scenario s = load_scenario(std::string(GOALINFER_SCENARIO_DIR) + "/waypoint.json");
  const ProposalNet net = load_net(std::string(GOALINFER_SCENARIO_DIR) + "/" + s.neural.net_file);
  const Point goal(0.6, 0.8);
  const double cr = acceptance_of_fixed_goal(s, {"cr", 1}, nullptr, goal);
  const double nni = acceptance_of_fixed_goal(s, {"nni", 1}, &net, goal);
  MESSAGE("acceptance of the same proposed goal: CR " << cr << ", NNI " << nni);
  CHECK(nni > cr);
}
