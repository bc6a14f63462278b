#pragma once

// Metropolis-Hastings transitions for programs with likelihood-free choices:
// cascading resimulation, nested inference with importance-sampled
// likelihood estimates, and a replicate chain driver.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "goalinfer/trace.hpp"

namespace goalinfer {

/// Proposal m over one or more target choices.
struct ProposalKernel {
  std::string name;
  std::vector<NodeId> targets;
  /// New values for the targets, in the order of `targets`.
  std::function<std::vector<Value>(const ModelGraph&, std::span<const Value> current, RandomStream&)>
      propose;
  /// log m(target_values; context).
  std::function<double(const ModelGraph&, std::span<const Value> context,
                       std::span<const Value> target_values)>
      log_density;
};

/// Proposes each target from its prior given the current parent values.
/// Targets are simulated in topological order so a block can contain
/// dependent choices. All targets must have tractable densities.
ProposalKernel prior_kernel(const ModelGraph& g, std::vector<NodeId> targets, std::string name = {});
ProposalKernel prior_kernel(const ModelGraph& g, const std::vector<std::string>& targets, std::string name = {});

struct StepInfo {
  double log_alpha = 0.0;
  bool accepted = false;
  /// Likelihood-free choices resimulated by the cascade (the set H).
  std::vector<NodeId> resimulated;
};

/// Cascading resimulation MH. Likelihood-free descendants reached through the
/// cascade are resimulated from their priors so their likelihoods cancel.
StepInfo cr_mh_step(const ModelGraph& g, TraceState& state, const ProposalKernel& kernel,
                    RandomStream& rng);

/// A sampler over a likelihood-free primitive's internal traces u ~ q(.; x, z)
/// that reports log[p(u, z; x) / q(u; x, z)] for each draw.
struct NestedInference {
  std::function<double(const Args&, const Value&, RandomStream&)> sample_log_ratio;
  int samples = 1;  // K
};

/// Wraps a typed trace sampler and ratio evaluator.
template <class Trace>
NestedInference make_nested_inference(
    std::function<Trace(const Args&, const Value&, RandomStream&)> sample_q,
    std::function<double(const Trace&, const Value&, const Args&)> log_ratio, int samples) {
  NestedInference nia;
  nia.samples = samples;
  nia.sample_log_ratio = [sample_q = std::move(sample_q), log_ratio = std::move(log_ratio)](
                             const Args& x, const Value& z, RandomStream& rng) {
    const Trace u = sample_q(x, z, rng);
    return log_ratio(u, z, x);
  };
  return nia;
}

/// log of (1/K) sum_k p(u_k, z; x) / q(u_k; x, z). -inf when every ratio is zero.
double log_estimate_likelihood(const NestedInference& nia, const Args& x, const Value& z,
                               RandomStream& rng);

inline double estimate_likelihood(const NestedInference& nia, const Args& x, const Value& z,
                                  RandomStream& rng) {
  return std::exp(log_estimate_likelihood(nia, x, z, rng));
}

using NestedInferenceMap = std::map<NodeId, NestedInference>;

/// Fills missing database entries for likelihood-free choices that have a
/// nested inference algorithm, using their current values.
void initialize_log_estimates(const ModelGraph& g, TraceState& state, const NestedInferenceMap& nias,
                              RandomStream& rng);

/// Single-site nested inference MH. Likelihood-free choices among the target
/// and its children are scored by fresh estimates against the recycled
/// database in state.log_estimates; tractable ones by exact densities.
StepInfo ni_mh_step(const ModelGraph& g, TraceState& state, const ProposalKernel& kernel,
                    const NestedInferenceMap& nias, RandomStream& rng);

/// Accepts iff log(s) <= log_alpha with s ~ Uniform(0,1]; NaN rejects.
bool mh_accept(double log_alpha, RandomStream& rng);

using TransitionFn = std::function<StepInfo(TraceState&, RandomStream&)>;

struct Transition {
  std::string name;
  TransitionFn step;
};

Transition cascading_transition(const ModelGraph& g, ProposalKernel kernel);
Transition nested_transition(const ModelGraph& g, ProposalKernel kernel, NestedInferenceMap nias);

/// Applies a fixed operator; rejects every proposal. Used for diagnostics.
Transition always_reject_transition(std::string name);

struct KernelStats {
  std::string name;
  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  double seconds = 0.0;
};

/// Aggregated over all replicates of a chain run.
struct ChainLog {
  std::vector<KernelStats> kernels;
  std::int64_t transitions = 0;
  double seconds = 0.0;
};

struct ChainSpec {
  ModelGraph model;
  /// One transition applies every operator once, in order.
  std::vector<Transition> schedule;
  int num_transitions = 0;
  int num_replicates = 1;
  std::uint64_t seed = 0;
  /// Transition counts at which every replicate's state is recorded.
  std::vector<int> checkpoints;
};

struct ChainRun {
  std::vector<TraceState> finals;
  /// snapshots[c][r]: replicate r after checkpoints[c] transitions.
  std::vector<std::vector<TraceState>> snapshots;
  ChainLog log;
};

/// Prior-initialized independent replicates with derived per-replicate seeds.
ChainRun run_chains(const ChainSpec& spec);

}  // namespace goalinfer
