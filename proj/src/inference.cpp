#include "goalinfer/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace goalinfer {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<NodeId> by_rank(const ModelGraph& g, std::vector<NodeId> ids) {
  std::sort(ids.begin(), ids.end(), [&](NodeId a, NodeId b) { return g.rank(a) < g.rank(b); });
  return ids;
}

/// Sum of two log terms where -inf - (-inf) stays NaN and rejects.
double log_ratio(double log_new, double log_old) {
  if (log_old == kNegInf && log_new == kNegInf) return std::numeric_limits<double>::quiet_NaN();
  return log_new - log_old;
}

}  // namespace

ProposalKernel prior_kernel(const ModelGraph& g, std::vector<NodeId> targets, std::string name) {
  if (targets.empty()) throw std::invalid_argument("prior_kernel: no targets");
  for (NodeId t : targets) {
    if (t >= g.size()) throw std::out_of_range("prior_kernel: unknown target");
    if (g.likelihood_free(t)) {
      throw std::invalid_argument("prior_kernel: target '" + g.name(t) + "' has no tractable density");
    }
    if (g.fixed(t)) throw std::invalid_argument("prior_kernel: target '" + g.name(t) + "' is constrained");
  }
  if (name.empty()) {
    for (NodeId t : targets) name += (name.empty() ? "" : "+") + g.name(t);
  }
  const std::vector<NodeId> ranked = by_rank(g, targets);
  std::vector<std::size_t> slot(ranked.size());
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    slot[k] = static_cast<std::size_t>(std::find(targets.begin(), targets.end(), ranked[k]) - targets.begin());
  }

  ProposalKernel kernel;
  kernel.name = std::move(name);
  kernel.targets = targets;
  kernel.propose = [ranked, slot](const ModelGraph& graph, std::span<const Value> current,
                                  RandomStream& rng) {
    std::vector<Value> scratch(current.begin(), current.end());
    std::vector<Value> out(ranked.size());
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      const NodeId t = ranked[k];
      scratch[t] = graph.type(t).simulate(graph.args(t, scratch), rng);
      out[slot[k]] = scratch[t];
    }
    return out;
  };
  kernel.log_density = [ranked, slot](const ModelGraph& graph, std::span<const Value> context,
                                      std::span<const Value> target_values) {
    std::vector<Value> scratch(context.begin(), context.end());
    for (std::size_t k = 0; k < ranked.size(); ++k) scratch[ranked[k]] = target_values[slot[k]];
    double total = 0.0;
    for (NodeId t : ranked) total += graph.type(t).log_density(scratch[t], graph.args(t, scratch));
    return total;
  };
  return kernel;
}

ProposalKernel prior_kernel(const ModelGraph& g, const std::vector<std::string>& targets, std::string name) {
  std::vector<NodeId> ids;
  for (const auto& t : targets) ids.push_back(g.id(t));
  return prior_kernel(g, std::move(ids), std::move(name));
}

bool mh_accept(double log_alpha, RandomStream& rng) {
  const double s = rng.uniform_pos();
  if (std::isnan(log_alpha)) return false;
  return std::log(s) <= log_alpha;
}

StepInfo cr_mh_step(const ModelGraph& g, TraceState& state, const ProposalKernel& kernel,
                    RandomStream& rng) {
  for (NodeId t : kernel.targets) {
    if (g.likelihood_free(t)) {
      throw std::invalid_argument("cr_mh_step: target '" + g.name(t) + "' is likelihood-free");
    }
    if (g.fixed(t)) throw std::invalid_argument("cr_mh_step: target '" + g.name(t) + "' is constrained");
  }

  const std::vector<Value> proposed = kernel.propose(g, state.values, rng);
  std::vector<Value> next = state.values;
  for (std::size_t k = 0; k < kernel.targets.size(); ++k) next[kernel.targets[k]] = proposed[k];

  // Worklist keyed by topological rank; the set deduplicates insertions.
  std::set<std::pair<std::size_t, NodeId>> worklist;
  auto enqueue = [&](NodeId j) { worklist.emplace(g.rank(j), j); };
  for (NodeId t : kernel.targets) {
    enqueue(t);
    for (NodeId c : g.children(t)) enqueue(c);
  }

  StepInfo info;
  double log_old = 0.0;
  double log_new = 0.0;
  while (!worklist.empty()) {
    const NodeId j = worklist.begin()->second;
    worklist.erase(worklist.begin());
    if (g.likelihood_free(j)) {
      if (g.fixed(j)) {
        throw std::logic_error("cr_mh_step: cannot resimulate observed likelihood-free choice '" +
                               g.name(j) + "'");
      }
      next[j] = g.type(j).simulate(g.args(j, next), rng);
      for (NodeId c : g.children(j)) enqueue(c);
      info.resimulated.push_back(j);
    } else {
      const auto& density = g.type(j).log_density;
      log_old += density(state.values[j], g.args(j, state.values));
      log_new += density(next[j], g.args(j, next));
    }
  }

  std::vector<Value> old_targets;
  old_targets.reserve(kernel.targets.size());
  for (NodeId t : kernel.targets) old_targets.push_back(state.values[t]);
  const double log_fwd = kernel.log_density(g, state.values, proposed);
  const double log_rev = kernel.log_density(g, next, old_targets);

  info.log_alpha = log_ratio(log_new, log_old) + (log_rev - log_fwd);
  info.accepted = mh_accept(info.log_alpha, rng);
  if (info.accepted) state.values = std::move(next);
  return info;
}

double log_estimate_likelihood(const NestedInference& nia, const Args& x, const Value& z,
                               RandomStream& rng) {
  if (nia.samples < 1) throw std::invalid_argument("nested inference needs K >= 1");
  std::vector<double> log_w(static_cast<std::size_t>(nia.samples));
  for (auto& w : log_w) w = nia.sample_log_ratio(x, z, rng);
  const double max_w = *std::max_element(log_w.begin(), log_w.end());
  if (max_w == kNegInf) return kNegInf;
  if (std::isinf(max_w)) return max_w;
  double sum = 0.0;
  for (double w : log_w) sum += std::exp(w - max_w);
  return max_w + std::log(sum) - std::log(static_cast<double>(nia.samples));
}

namespace {

const NestedInference& nia_for(const ModelGraph& g, const NestedInferenceMap& nias, NodeId j) {
  auto it = nias.find(j);
  if (it == nias.end()) {
    throw std::invalid_argument("no nested inference algorithm for likelihood-free choice '" +
                                g.name(j) + "'");
  }
  return it->second;
}

}  // namespace

void initialize_log_estimates(const ModelGraph& g, TraceState& state, const NestedInferenceMap& nias,
                              RandomStream& rng) {
  state.log_estimates.resize(g.size());
  for (NodeId j : g.order()) {
    if (!g.likelihood_free(j) || state.log_estimates[j] || nias.count(j) == 0) continue;
    state.log_estimates[j] = log_estimate_likelihood(nias.at(j), g.args(j, state.values), state.values[j], rng);
  }
}

StepInfo ni_mh_step(const ModelGraph& g, TraceState& state, const ProposalKernel& kernel,
                    const NestedInferenceMap& nias, RandomStream& rng) {
  if (kernel.targets.size() != 1) throw std::invalid_argument("ni_mh_step: single-site kernels only");
  const NodeId i = kernel.targets.front();
  if (g.fixed(i)) throw std::invalid_argument("ni_mh_step: target '" + g.name(i) + "' is fixed");
  state.log_estimates.resize(g.size());

  const std::vector<Value> proposed = kernel.propose(g, state.values, rng);
  std::vector<Value> next = state.values;
  next[i] = proposed.front();

  std::vector<NodeId> sites{i};
  for (NodeId c : g.children(i)) sites.push_back(c);

  StepInfo info;
  double log_old = 0.0;
  double log_new = 0.0;
  std::vector<std::pair<NodeId, double>> fresh;
  for (NodeId j : sites) {
    if (g.likelihood_free(j)) {
      const NestedInference& nia = nia_for(g, nias, j);
      if (!state.log_estimates[j]) {
        state.log_estimates[j] = log_estimate_likelihood(nia, g.args(j, state.values), state.values[j], rng);
      }
      const double estimate = log_estimate_likelihood(nia, g.args(j, next), next[j], rng);
      log_old += *state.log_estimates[j];
      log_new += estimate;
      fresh.emplace_back(j, estimate);
    } else {
      const auto& density = g.type(j).log_density;
      log_old += density(state.values[j], g.args(j, state.values));
      log_new += density(next[j], g.args(j, next));
    }
  }

  const Value old_target = state.values[i];
  const double log_fwd = kernel.log_density(g, state.values, std::span<const Value>(proposed));
  const double log_rev = kernel.log_density(g, next, std::span<const Value>(&old_target, 1));

  info.log_alpha = log_ratio(log_new, log_old) + (log_rev - log_fwd);
  info.accepted = mh_accept(info.log_alpha, rng);
  if (info.accepted) {
    state.values[i] = std::move(next[i]);
    for (const auto& [j, estimate] : fresh) state.log_estimates[j] = estimate;
  }
  return info;
}

Transition cascading_transition(const ModelGraph& g, ProposalKernel kernel) {
  std::string name = "cr:" + kernel.name;
  return {std::move(name), [g, kernel = std::move(kernel)](TraceState& s, RandomStream& rng) {
            return cr_mh_step(g, s, kernel, rng);
          }};
}

Transition nested_transition(const ModelGraph& g, ProposalKernel kernel, NestedInferenceMap nias) {
  std::string name = "ni:" + kernel.name;
  return {std::move(name),
          [g, kernel = std::move(kernel), nias = std::move(nias)](TraceState& s, RandomStream& rng) {
            return ni_mh_step(g, s, kernel, nias, rng);
          }};
}

Transition always_reject_transition(std::string name) {
  return {std::move(name), [](TraceState&, RandomStream&) {
            StepInfo info;
            info.log_alpha = kNegInf;
            return info;
          }};
}

ChainRun run_chains(const ChainSpec& spec) {
  if (spec.num_transitions < 0) throw std::invalid_argument("run_chains: negative transition count");
  if (spec.num_replicates < 0) throw std::invalid_argument("run_chains: negative replicate count");
  std::vector<int> checkpoints = spec.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  for (int c : checkpoints) {
    if (c < 0 || c > spec.num_transitions) throw std::invalid_argument("run_chains: checkpoint out of range");
  }

  using Clock = std::chrono::steady_clock;
  ChainRun run;
  run.snapshots.assign(checkpoints.size(), {});
  for (const auto& t : spec.schedule) run.log.kernels.push_back({t.name, 0, 0, 0.0});
  const auto start = Clock::now();

  for (int r = 0; r < spec.num_replicates; ++r) {
    RandomStream rng(derive_seed(spec.seed, static_cast<std::uint64_t>(r)));
    TraceState state = simulate_trace(spec.model, rng);
    std::size_t next_checkpoint = 0;
    auto record = [&](int n) {
      while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == n) {
        run.snapshots[next_checkpoint++].push_back(state);
      }
    };
    record(0);
    for (int n = 1; n <= spec.num_transitions; ++n) {
      for (std::size_t k = 0; k < spec.schedule.size(); ++k) {
        const auto t0 = Clock::now();
        const StepInfo info = spec.schedule[k].step(state, rng);
        auto& stats = run.log.kernels[k];
        stats.seconds += std::chrono::duration<double>(Clock::now() - t0).count();
        ++stats.proposed;
        if (info.accepted) ++stats.accepted;
      }
      ++run.log.transitions;
      record(n);
    }
    run.finals.push_back(std::move(state));
  }
  run.log.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return run;
}

}  // namespace goalinfer
