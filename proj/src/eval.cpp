#include "goalinfer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "goalinfer/models.hpp"

namespace goalinfer {

BinnedHistogram::BinnedHistogram(int grid, double pseudocount)
    : grid_(grid), pseudocount_(pseudocount) {
  if (grid < 1) throw std::invalid_argument("histogram grid must be >= 1");
  if (!(pseudocount > 0.0)) throw std::invalid_argument("histogram pseudocount must be positive");
  counts_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid) * grid);
}

Eigen::Index BinnedHistogram::bin_of(const Point& p) const {
  auto cell = [this](double v) {
    const int c = static_cast<int>(std::floor(v * grid_));
    return std::clamp(c, 0, grid_ - 1);
  };
  return static_cast<Eigen::Index>(cell(p[1])) * grid_ + cell(p[0]);
}

void BinnedHistogram::add(const Point& p) { counts_[bin_of(p)] += 1.0; }

void BinnedHistogram::add(std::span<const Point> points) {
  for (const auto& p : points) add(p);
}

Eigen::VectorXd BinnedHistogram::probabilities() const {
  const Eigen::VectorXd smoothed = counts_.array() + pseudocount_;
  return smoothed / smoothed.sum();
}

double binned_kl(std::span<const Point> reference, std::span<const Point> test, int grid,
                 double pseudocount) {
  BinnedHistogram ref(grid, pseudocount);
  BinnedHistogram tst(grid, pseudocount);
  ref.add(reference);
  tst.add(test);
  const Eigen::VectorXd p = ref.probabilities();
  const Eigen::VectorXd q = tst.probabilities();
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(kl, 0.0);
}

std::vector<Point> collect_points(const ModelGraph& g, std::span<const TraceState> states,
                                  const std::string& choice) {
  const NodeId id = g.id(choice);
  std::vector<Point> out;
  out.reserve(states.size());
  for (const auto& s : states) out.emplace_back(s.values[id].head<2>());
  return out;
}

std::vector<Point> reference_goals(const Scenario& s, const EvalConfig& cfg, std::uint64_t seed) {
  const StrategySpec cr{"cr", 1};
  const BuiltModel model = build_model(s, cr);
  ChainSpec spec;
  spec.model = model.graph;
  spec.schedule = make_schedule(model, cr);
  spec.num_transitions = cfg.reference_transitions;
  spec.num_replicates = cfg.reference_replicates;
  spec.seed = derive_seed(seed, 0x7265660aULL);
  const ChainRun run = run_chains(spec);
  return collect_points(model.graph, run.finals, "goal");
}

ConvergenceCurve convergence_study(const Scenario& s, const EvalConfig& cfg, std::uint64_t seed,
                                   const ProposalNet* net) {
  if (cfg.strategies.empty()) return {};
  const std::vector<Point> reference = reference_goals(s, cfg, seed);
  return convergence_study(s, cfg, seed, reference, net);
}

ConvergenceCurve convergence_study(const Scenario& s, const EvalConfig& cfg, std::uint64_t seed,
                                   std::span<const Point> reference, const ProposalNet* net) {
  ConvergenceCurve curve;
  if (cfg.strategies.empty()) return curve;
  if (cfg.transition_counts.empty()) throw std::invalid_argument("convergence study: no transition counts");
  if (reference.empty()) throw std::invalid_argument("convergence study: empty reference sample");
  curve.reference_samples = reference.size();
  const int longest = *std::max_element(cfg.transition_counts.begin(), cfg.transition_counts.end());

  for (std::size_t k = 0; k < cfg.strategies.size(); ++k) {
    const StrategySpec& strategy = cfg.strategies[k];
    const BuiltModel model = build_model(s, strategy, net);
    ChainSpec spec;
    spec.model = model.graph;
    spec.schedule = make_schedule(model, strategy);
    spec.num_transitions = longest;
    spec.num_replicates = cfg.replicates;
    spec.seed = derive_seed(seed, k);
    spec.checkpoints = cfg.transition_counts;
    const ChainRun run = run_chains(spec);

    std::vector<int> counts = cfg.transition_counts;
    std::sort(counts.begin(), counts.end());
    counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
    const double seconds_per_transition =
        run.log.transitions > 0 ? run.log.seconds / static_cast<double>(run.log.transitions) : 0.0;
    std::int64_t proposed = 0;
    std::int64_t accepted = 0;
    for (const auto& ks : run.log.kernels) {
      proposed += ks.proposed;
      accepted += ks.accepted;
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const std::vector<Point> goals = collect_points(model.graph, run.snapshots[c], "goal");
      CurvePoint p;
      p.strategy = strategy.label();
      p.transitions = counts[c];
      p.kl = binned_kl(reference, goals, cfg.grid, cfg.pseudocount);
      p.ms_per_sample = 1000.0 * seconds_per_transition * counts[c];
      p.samples = goals.size();
      p.acceptance = proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
      curve.points.push_back(p);
    }
  }
  return curve;
}

std::vector<KernelSummary> acceptance_stats(const ChainLog& log) {
  std::vector<KernelSummary> out;
  for (const auto& k : log.kernels) {
    KernelSummary s;
    s.name = k.name;
    s.proposed = k.proposed;
    if (k.proposed > 0) {
      s.acceptance = static_cast<double>(k.accepted) / static_cast<double>(k.proposed);
      s.ms_per_transition = 1000.0 * k.seconds / static_cast<double>(k.proposed);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace goalinfer
