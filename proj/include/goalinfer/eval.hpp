#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "goalinfer/inference.hpp"
#include "goalinfer/scenario.hpp"

namespace goalinfer {

/// G x G histogram over the unit square with a pseudocount added to every bin.
/// Coordinates outside [0,1] are clamped into the border bins.
class BinnedHistogram {
 public:
  explicit BinnedHistogram(int grid = 5, double pseudocount = 0.1);

  void add(const Point& p);
  void add(std::span<const Point> points);

  int grid() const { return grid_; }
  double pseudocount() const { return pseudocount_; }
  Eigen::Index bin_of(const Point& p) const;
  /// Raw counts, row-major by (y bin, x bin).
  const Eigen::VectorXd& counts() const { return counts_; }
  Eigen::VectorXd probabilities() const;

 private:
  int grid_;
  double pseudocount_;
  Eigen::VectorXd counts_;
};

/// D_KL(reference || test) in nats between identically built histograms.
double binned_kl(std::span<const Point> reference, std::span<const Point> test, int grid = 5,
                 double pseudocount = 0.1);

struct CurvePoint {
  std::string strategy;
  int transitions = 0;
  double kl = 0.0;
  double ms_per_sample = 0.0;
  std::size_t samples = 0;
  double acceptance = 0.0;
};

struct ConvergenceCurve {
  std::vector<CurvePoint> points;
  std::size_t reference_samples = 0;
};

/// Final goals of long cascading-resimulation chains on the waypoint program.
std::vector<Point> reference_goals(const Scenario& s, const EvalConfig& cfg, std::uint64_t seed);

/// Binned KL from the reference to each strategy's final goals at each
/// transition count. Chains for one strategy run once to the largest count
/// and are snapshotted at the others. An empty strategy list gives an empty
/// curve without running the reference.
ConvergenceCurve convergence_study(const Scenario& s, const EvalConfig& cfg, std::uint64_t seed,
                                   const ProposalNet* net = nullptr);

/// Same, with precomputed reference goals.
ConvergenceCurve convergence_study(const Scenario& s, const EvalConfig& cfg, std::uint64_t seed,
                                   std::span<const Point> reference, const ProposalNet* net = nullptr);

struct KernelSummary {
  std::string name;
  std::int64_t proposed = 0;
  double acceptance = 0.0;
  double ms_per_transition = 0.0;
};

std::vector<KernelSummary> acceptance_stats(const ChainLog& log);

/// Values of a point-valued choice across trace states.
std::vector<Point> collect_points(const ModelGraph& g, std::span<const TraceState> states,
                                  const std::string& choice);

}  // namespace goalinfer
