#include "doctest.h"

#include <cmath>
#include <map>

#include "goalinfer/inference.hpp"
#include "../support/toy_model.hpp"

using namespace goalinfer;

namespace {

using Pair = std::pair<int, int>;

Pair state_of(const TraceState& s) { return {toy::as_int(s.values[0]), toy::as_int(s.values[1])}; }

/// a -> b with b likelihood-free and nothing observed.
ModelGraph unobserved_toy() {
  ModelGraph::Builder b;
  b.add("a", toy::prior_a_type()).add("b", toy::likelihood_free_b_type(), {"a"});
  return b.build();
}

/// a -> {b, d} likelihood-free, b -> c constrained.
ModelGraph forked_toy() {
  ModelGraph::Builder b;
  b.add("a", toy::prior_a_type())
      .add("b", toy::likelihood_free_b_type(), {"a"})
      .add("d", toy::likelihood_free_b_type(), {"a"})
      .add("c", toy::c_type(), {"b"})
      .constrain("c", toy::scalar(toy::kObservedC));
  return b.build();
}

}  // namespace

TEST_CASE("prior proposals with nothing observed always accept") {
  const ModelGraph g = unobserved_toy();
  const ProposalKernel k = prior_kernel(g, std::vector<std::string>{"a"});
  RandomStream rng(1);
  TraceState s = simulate_trace(g, rng);
  for (int step = 0; step < 2000; ++step) {
    const StepInfo info = cr_mh_step(g, s, k, rng);
    REQUIRE(info.log_alpha == doctest::Approx(0.0).epsilon(1e-12));
    REQUIRE(info.accepted);
  }

  ModelGraph::Builder tb;
  tb.add("a", toy::prior_a_type()).add("b", toy::tractable_b_type(), {"a"});
  const ModelGraph tractable = tb.build();
  const ProposalKernel block = prior_kernel(tractable, std::vector<std::string>{"b", "a"});
  TraceState t = simulate_trace(tractable, rng);
  for (int step = 0; step < 2000; ++step) REQUIRE(cr_mh_step(tractable, t, block, rng).accepted);
}

TEST_CASE("prior kernel rejects bad targets") {
  const ModelGraph g = toy::build();
  CHECK_THROWS(prior_kernel(g, std::vector<std::string>{"b"}));
  CHECK_THROWS(prior_kernel(g, std::vector<std::string>{"c"}));
  CHECK_THROWS(prior_kernel(g, std::vector<NodeId>{}));
  RandomStream rng(2);
  TraceState s = simulate_trace(g, rng);
  CHECK_THROWS(cr_mh_step(g, s, toy::uniform_kernel(g, "b", toy::kB), rng));
  CHECK_THROWS(ni_mh_step(g, s, toy::uniform_kernel(g, "a", toy::kA), {}, rng));
}

TEST_CASE("detailed balance of the block independence sampler") {
  const ModelGraph g = toy::build(true);
  const ProposalKernel k = prior_kernel(g, std::vector<std::string>{"a", "b"});
  const auto post = toy::exact_posterior();
  auto q = [](Pair x) { return toy::prior_a[x.first] * toy::p_b_given_a(x.first, x.second); };

  RandomStream rng(3);
  TraceState s = simulate_trace(g, rng);
  std::map<std::pair<Pair, Pair>, double> moves;
  constexpr int n = 1'000'000;
  for (int step = 0; step < n; ++step) {
    const Pair from = state_of(s);
    cr_mh_step(g, s, k, rng);
    moves[{from, state_of(s)}] += 1.0;
  }
  for (const auto& [x, px] : post) {
    for (const auto& [y, py] : post) {
      if (!(x < y) || px == 0.0 || py == 0.0) continue;
      // pi(x) P(x -> y) for an independence sampler is min(pi(x) q(y), pi(y) q(x)).
      const double flow = std::min(px * q(y), py * q(x));
      const double xy = moves[{x, y}];
      const double yx = moves[{y, x}];
      const double se = std::sqrt(flow * (1 - flow) / n);
      CHECK(std::abs(xy / n - flow) < 3 * se);
      CHECK(std::abs(yx / n - flow) < 3 * se);
      CHECK(std::abs(xy - yx) / n < 3 * std::sqrt(2.0) * se);
    }
  }
}

TEST_CASE("cascade resimulates likelihood-free children of a changed choice") {
  const ModelGraph g = toy::build();
  const ProposalKernel k = toy::uniform_kernel(g, "a", toy::kA);
  RandomStream rng(4);
  TraceState s = simulate_trace(g, rng);
  for (int step = 0; step < 500; ++step) {
    const StepInfo info = cr_mh_step(g, s, k, rng);
    REQUIRE(info.resimulated == std::vector<NodeId>{g.id("b")});
  }
}

TEST_CASE("observed likelihood-free choices cannot be cascaded") {
  ModelGraph::Builder b;
  b.add("a", toy::prior_a_type()).add("b", toy::likelihood_free_b_type(), {"a"}).observe("b", toy::scalar(0));
  const ModelGraph g = b.build();
  RandomStream rng(5);
  TraceState s = simulate_trace(g, rng);
  CHECK(s.values[1][0] == 0.0);
  CHECK_THROWS_AS(cr_mh_step(g, s, prior_kernel(g, std::vector<std::string>{"a"}), rng), std::logic_error);
}

TEST_CASE("rejection leaves the state unchanged") {
  const ModelGraph g = forked_toy();
  const NestedInferenceMap nias{{g.id("b"), toy::resimulation_nia(2)}, {g.id("d"), toy::resimulation_nia(2)}};
  const std::vector<ProposalKernel> kernels{toy::uniform_kernel(g, "a", toy::kA), toy::uniform_kernel(g, "b", toy::kB),
                                            toy::uniform_kernel(g, "d", toy::kB)};
  RandomStream rng(6);
  TraceState s = simulate_trace(g, rng);
  initialize_log_estimates(g, s, nias, rng);
  int rejections = 0;
  for (int step = 0; step < 3000; ++step) {
    const TraceState before = s;
    const StepInfo info = ni_mh_step(g, s, kernels[static_cast<std::size_t>(step) % 3], nias, rng);
    if (!info.accepted) {
      ++rejections;
      REQUIRE(s == before);
    }
  }
  CHECK(rejections > 100);

  const ModelGraph cg = toy::build();
  TraceState t = simulate_trace(cg, rng);
  for (int step = 0; step < 3000; ++step) {
    const TraceState before = t;
    if (!cr_mh_step(cg, t, toy::uniform_kernel(cg, "a", toy::kA), rng).accepted) REQUIRE(t == before);
  }
}

TEST_CASE("estimate database changes only on acceptance, at the target and its children") {
  const ModelGraph g = forked_toy();
  const NodeId a = g.id("a"), b = g.id("b"), d = g.id("d");
  const NestedInferenceMap nias{{b, toy::resimulation_nia(3)}, {d, toy::resimulation_nia(3)}};
  const std::map<NodeId, ProposalKernel> kernels{{a, toy::uniform_kernel(g, "a", toy::kA)},
                                                 {b, toy::uniform_kernel(g, "b", toy::kB)},
                                                 {d, toy::uniform_kernel(g, "d", toy::kB)}};
  RandomStream rng(7);
  TraceState s = simulate_trace(g, rng);
  initialize_log_estimates(g, s, nias, rng);
  int changed = 0;
  for (int step = 0; step < 3000; ++step) {
    const NodeId target = std::vector<NodeId>{a, b, d}[static_cast<std::size_t>(step) % 3];
    const TraceState before = s;
    const StepInfo info = ni_mh_step(g, s, kernels.at(target), nias, rng);
    std::vector<NodeId> allowed{target};
    for (NodeId c : g.children(target)) allowed.push_back(c);
    for (NodeId j = 0; j < g.size(); ++j) {
      if (s.log_estimates[j] == before.log_estimates[j]) continue;
      ++changed;
      REQUIRE(info.accepted);
      REQUIRE(std::find(allowed.begin(), allowed.end(), j) != allowed.end());
    }
  }
  CHECK(changed > 100);
}

TEST_CASE("lazy estimate initialization") {
  const ModelGraph g = toy::build();
  const NestedInferenceMap nias{{g.id("b"), toy::exact_nia()}};
  RandomStream rng(8);
  TraceState s = simulate_trace(g, rng);
  const bool preset = s.log_estimates.size() == g.size() && s.log_estimates[1].has_value();
  CHECK_FALSE(preset);
  ni_mh_step(g, s, toy::uniform_kernel(g, "a", toy::kA), nias, rng);
  REQUIRE(s.log_estimates.size() == g.size());
  const int a = toy::as_int(s.values[0]);
  const int bv = toy::as_int(s.values[1]);
  CHECK(*s.log_estimates[1] == doctest::Approx(std::log(toy::p_b_given_a(a, bv))).epsilon(1e-12));
}

TEST_CASE("zero old density accepts any finite proposal; zero both ways rejects") {
  PrimitiveType two{"two", [](const Args&, RandomStream& r) { return toy::scalar(static_cast<double>(r.index(2))); },
                    [](const Value&, const Args&) { return std::log(0.5); }};
  PrimitiveType match{"match", [](const Args& x, RandomStream&) { return Value(x); },
                      [](const Value& z, const Args& x) { return z[0] == x[0] ? 0.0 : -INFINITY; }};
  ModelGraph::Builder b;
  b.add("a", two).add("c", match, {"a"}).constrain("c", toy::scalar(1));
  const ModelGraph g = b.build();
  ProposalKernel to = toy::uniform_kernel(g, "a", 2);
  RandomStream rng(9);
  for (double target : {0.0, 1.0}) {
    to.propose = [target](const ModelGraph&, std::span<const Value>, RandomStream&) {
      return std::vector<Value>{toy::scalar(target)};
    };
    TraceState s{{toy::scalar(0), toy::scalar(1)}, {}};
    const StepInfo info = cr_mh_step(g, s, to, rng);
    if (target == 1.0) {
      CHECK(info.log_alpha == INFINITY);
      CHECK(info.accepted);
    } else {
      CHECK_FALSE(info.accepted);
    }
  }
}

TEST_CASE("mh_accept edge cases") {
  RandomStream rng(10);
  for (int k = 0; k < 100; ++k) {
    CHECK(mh_accept(INFINITY, rng));
    CHECK(mh_accept(0.0, rng));
    CHECK(mh_accept(5.0, rng));
    CHECK_FALSE(mh_accept(-INFINITY, rng));
    CHECK_FALSE(mh_accept(std::nan(""), rng));
  }
}

TEST_CASE("likelihood estimator") {
  const Args x = toy::scalar(0);
  const Value z = toy::scalar(0);
  RandomStream rng(11);
  for (int k = 0; k < 100; ++k) {
    CHECK(estimate_likelihood(toy::exact_nia(1), x, z, rng) == doctest::Approx(toy::p_b_given_a(0, 0)).epsilon(1e-14));
    CHECK(estimate_likelihood(toy::exact_nia(5), x, z, rng) == doctest::Approx(toy::p_b_given_a(0, 0)).epsilon(1e-14));
  }
  // b = 3 is impossible for a = 0.
  CHECK(log_estimate_likelihood(toy::resimulation_nia(4), x, toy::scalar(3), rng) == -INFINITY);
  NestedInference bad = toy::resimulation_nia(1);
  bad.samples = 0;
  CHECK_THROWS(log_estimate_likelihood(bad, x, z, rng));

  // K-sample average of resimulation draws: mean p, variance p(1-p)/K.
  constexpr int n = 40000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double e = estimate_likelihood(toy::resimulation_nia(4), x, z, rng);
    sum += e;
    sq += e * e;
  }
  const double p = toy::p_b_given_a(0, 0);
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean - p) < 3 * std::sqrt(p * (1 - p) / 4 / n));
  CHECK(var == doctest::Approx(p * (1 - p) / 4).epsilon(0.05));
}

TEST_CASE("run_chains") {
  const ModelGraph g = toy::build();
  ChainSpec spec{g, {cascading_transition(g, toy::uniform_kernel(g, "a", toy::kA))}, 0, 200, 12, {}};
  const ChainRun prior = run_chains(spec);
  REQUIRE(prior.finals.size() == 200);
  for (int r = 0; r < 200; ++r) {
    RandomStream rng(derive_seed(12, static_cast<std::uint64_t>(r)));
    REQUIRE(prior.finals[static_cast<std::size_t>(r)] == simulate_trace(g, rng));
  }

  spec.num_transitions = 50;
  spec.checkpoints = {0, 10, 50};
  const ChainRun one = run_chains(spec);
  const ChainRun two = run_chains(spec);
  CHECK(one.finals == two.finals);
  REQUIRE(one.snapshots.size() == 3);
  CHECK(one.snapshots[0] == prior.finals);
  CHECK(one.snapshots[2] == one.finals);
  CHECK(one.log.transitions == 50 * 200);
  CHECK(one.log.kernels.at(0).proposed == 50 * 200);

  spec.checkpoints = {51};
  CHECK_THROWS(run_chains(spec));
  spec.checkpoints.clear();
  spec.num_transitions = -1;
  CHECK_THROWS(run_chains(spec));
}

TEST_CASE("always-reject transition") {
  RandomStream rng(13);
  const Transition t = always_reject_transition("never");
  TraceState s = simulate_trace(toy::build(), rng);
  const TraceState before = s;
  CHECK_FALSE(t.step(s, rng).accepted);
  CHECK(s == before);
}
