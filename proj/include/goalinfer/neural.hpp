#pragma once

// Learned nested-inference proposal for the waypoint planner: a one-hidden-
// layer network mapping (goal, observed locations) to a distribution over the
// waypoint choice (w, g'), trained by maximum likelihood on traced runs.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "goalinfer/inference.hpp"
#include "goalinfer/planner.hpp"

namespace goalinfer {

/// q(w, g'; x, z) = Bernoulli(w; p) * (w ? TruncNormal([0,1]^2; mu, diag(s^2)) : 1).
///
/// Parameters are stored in one flat vector so that optimizers and gradient
/// checks can treat them uniformly. Layout: W1 (hidden x input, column-major),
/// b1, Wo (5 x hidden, column-major), bo. Output rows are the w logit, two
/// mean logits, and two log-scale values.
class ProposalNet {
 public:
  static constexpr int kOutputs = 5;
  static constexpr double kProbFloor = 1e-6;
  static constexpr double kStdFloor = 1e-3;

  /// All parameters zero.
  ProposalNet(int input_dim, int hidden = 64);

  /// Scaled-uniform hidden weights, small output weights, zero biases.
  static ProposalNet random(int input_dim, int hidden, RandomStream& rng);

  int input_dim() const { return input_dim_; }
  int hidden() const { return hidden_; }
  Eigen::Index num_params() const { return params_.size(); }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }

  struct Output {
    double p_use = 0.5;                          // P(w = true)
    Eigen::Vector2d mean = Eigen::Vector2d::Constant(0.5);
    Eigen::Vector2d scale = Eigen::Vector2d::Ones();
  };

  Output forward(const Eigen::VectorXd& input) const;

  double log_density(const Eigen::VectorXd& input, const WaypointChoice& u) const;

  /// log q and its gradient with respect to params(); the gradient is added
  /// into grad (which must have num_params() entries).
  double log_density_accumulate(const Eigen::VectorXd& input, const WaypointChoice& u,
                                Eigen::Ref<Eigen::VectorXd> grad) const;

  WaypointChoice sample(const Eigen::VectorXd& input, RandomStream& rng) const;

 private:
  struct Layers;
  int input_dim_;
  int hidden_;
  Eigen::VectorXd params_;
};

/// Network input: goal then observed locations, each shifted by -0.5.
Eigen::VectorXd net_input(const Point& goal, const LocationSeries& observed);

double net_logdensity(const ProposalNet& net, const Point& goal, const LocationSeries& observed,
                      const WaypointChoice& u);

/// Log density of a normal truncated to [0, 1].
double truncated_normal_logpdf(double x, double mean, double scale);

struct TrainingExample {
  Point goal;
  LocationSeries observed;
  WaypointChoice choice;
};

using TrainingSet = std::vector<TrainingExample>;

/// count traced runs of the waypoint primitive with goals ~ Uniform([0,1]^2).
TrainingSet generate_training_data(const WorldMap& m, const Point& start, const TimeGrid& t,
                                   const PlannerParams& params, double noise_std, int count,
                                   RandomStream& rng);

struct TrainConfig {
  double learning_rate = 1e-2;
  int batch_size = 64;
  int epochs = 50;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochReport {
  int epoch = 0;
  double train_nll = 0.0;
  double validation_nll = 0.0;
};

struct TrainResult {
  ProposalNet net;
  /// Entry 0 is the untrained network.
  std::vector<EpochReport> curve;
};

/// Mean negative log q over the examples.
double mean_nll(const ProposalNet& net, std::span<const TrainingExample> examples);

/// Mean negative log q and its gradient over a batch.
double nll_and_gradient(const ProposalNet& net, std::span<const TrainingExample> batch,
                        Eigen::VectorXd& grad);

/// Mini-batch SGD on the mean negative log-likelihood. Throws
/// std::runtime_error on a non-finite loss.
TrainResult train(ProposalNet net, const TrainingSet& data, const TrainConfig& cfg);

void save_net(const ProposalNet& net, const std::string& path);
ProposalNet load_net(const std::string& path);
std::string net_to_json(const ProposalNet& net);
ProposalNet net_from_json(const std::string& text);

/// Where the waypoint primitive lives: everything except the goal is fixed.
struct WaypointWorld {
  WorldMap map;
  Point start;
  TimeGrid times;
  PlannerParams planner;
  double noise_std = 0.02;
};

/// Nested inference for the waypoint primitive: (w, g') from the network,
/// remaining planner choices from the prior. Args are the goal, the value is
/// the observed series (2T).
NestedInference neural_nested_algorithm(ProposalNet net, WaypointWorld world, int samples = 1);

/// Same primitive with q equal to the prior over all internal choices.
NestedInference resimulation_nested_algorithm(WaypointWorld world, int samples);

}  // namespace goalinfer
