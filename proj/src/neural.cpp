#include "goalinfer/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>
#include "json.hpp"

namespace goalinfer {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_quantile(double p) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); }

/// Mass of N(mean, scale^2) on [0, 1], computed from the two tails.
double unit_mass(double mean, double scale) {
  const double lower_tail = std_normal_cdf(-mean / scale);
  const double upper_tail = std_normal_cdf(-(1.0 - mean) / scale);
  return 1.0 - lower_tail - upper_tail;
}

}  // namespace

double truncated_normal_logpdf(double x, double mean, double scale) {
  if (x < 0.0 || x > 1.0) return -std::numeric_limits<double>::infinity();
  const double r = (x - mean) / scale;
  return -0.5 * r * r - std::log(scale) - 0.5 * std::log(2.0 * std::numbers::pi) -
         std::log(unit_mass(mean, scale));
}

struct ProposalNet::Layers {
  Eigen::Map<const Eigen::MatrixXd> w1;
  Eigen::Map<const Eigen::VectorXd> b1;
  Eigen::Map<const Eigen::MatrixXd> wo;
  Eigen::Map<const Eigen::VectorXd> bo;

  Layers(const Eigen::VectorXd& p, int in, int hid)
      : w1(p.data(), hid, in),
        b1(p.data() + hid * in, hid),
        wo(p.data() + hid * in + hid, kOutputs, hid),
        bo(p.data() + hid * in + hid + kOutputs * hid, kOutputs) {}
};

ProposalNet::ProposalNet(int input_dim, int hidden)
    : input_dim_(input_dim), hidden_(hidden),
      params_(Eigen::VectorXd::Zero(hidden * input_dim + hidden + kOutputs * hidden + kOutputs)) {
  if (input_dim < 1 || hidden < 1) throw std::invalid_argument("ProposalNet: dimensions must be positive");
}

ProposalNet ProposalNet::random(int input_dim, int hidden, RandomStream& rng) {
  ProposalNet net(input_dim, hidden);
  const double in_scale = std::sqrt(3.0 / input_dim);
  const double out_scale = 0.1 * std::sqrt(3.0 / hidden);
  Eigen::VectorXd& p = net.params_;
  const Eigen::Index n_w1 = hidden * input_dim;
  const Eigen::Index wo_at = n_w1 + hidden;
  for (Eigen::Index k = 0; k < n_w1; ++k) p[k] = rng.uniform(-in_scale, in_scale);
  for (Eigen::Index k = 0; k < kOutputs * hidden; ++k) p[wo_at + k] = rng.uniform(-out_scale, out_scale);
  return net;
}

ProposalNet::Output ProposalNet::forward(const Eigen::VectorXd& input) const {
  const Layers l(params_, input_dim_, hidden_);
  const Eigen::VectorXd h = (l.w1 * input + l.b1).array().tanh().matrix();
  const Eigen::VectorXd o = l.wo * h + l.bo;
  Output out;
  out.p_use = kProbFloor + (1.0 - 2.0 * kProbFloor) * sigmoid(o[0]);
  out.mean = {sigmoid(o[1]), sigmoid(o[2])};
  out.scale = {kStdFloor + std::exp(o[3]), kStdFloor + std::exp(o[4])};
  return out;
}

double ProposalNet::log_density(const Eigen::VectorXd& input, const WaypointChoice& u) const {
  const Output out = forward(input);
  if (!u.use_waypoint) return std::log1p(-out.p_use);
  return std::log(out.p_use) + truncated_normal_logpdf(u.waypoint.x(), out.mean.x(), out.scale.x()) +
         truncated_normal_logpdf(u.waypoint.y(), out.mean.y(), out.scale.y());
}

double ProposalNet::log_density_accumulate(const Eigen::VectorXd& input, const WaypointChoice& u,
                                           Eigen::Ref<Eigen::VectorXd> grad) const {
  const Layers l(params_, input_dim_, hidden_);
  const Eigen::VectorXd h = (l.w1 * input + l.b1).array().tanh().matrix();
  const Eigen::VectorXd o = l.wo * h + l.bo;

  Eigen::Matrix<double, kOutputs, 1> d_o = Eigen::Matrix<double, kOutputs, 1>::Zero();
  const double sig_w = sigmoid(o[0]);
  const double p = kProbFloor + (1.0 - 2.0 * kProbFloor) * sig_w;
  const double dp_do = (1.0 - 2.0 * kProbFloor) * sig_w * (1.0 - sig_w);
  double logq = 0.0;
  if (!u.use_waypoint) {
    logq = std::log1p(-p);
    d_o[0] = -dp_do / (1.0 - p);
  } else {
    logq = std::log(p);
    d_o[0] = dp_do / p;
    for (int c = 0; c < 2; ++c) {
      const double mu = sigmoid(o[1 + c]);
      const double s = kStdFloor + std::exp(o[3 + c]);
      const double x = u.waypoint[c];
      const double a = -mu / s;
      const double b = (1.0 - mu) / s;
      const double z = unit_mass(mu, s);
      const double r = (x - mu) / s;
      logq += truncated_normal_logpdf(x, mu, s);
      const double dz_dmu = (std_normal_pdf(a) - std_normal_pdf(b)) / s;
      const double dz_ds = (a * std_normal_pdf(a) - b * std_normal_pdf(b)) / s;
      const double dl_dmu = r / s - dz_dmu / z;
      const double dl_ds = r * r / s - 1.0 / s - dz_ds / z;
      d_o[1 + c] = dl_dmu * mu * (1.0 - mu);
      d_o[3 + c] = dl_ds * (s - kStdFloor);
    }
  }

  const Eigen::Index hid = hidden_;
  const Eigen::Index in = input_dim_;
  const Eigen::VectorXd d_h = l.wo.transpose() * d_o;
  const Eigen::VectorXd d_a = d_h.array() * (1.0 - h.array().square());
  Eigen::Map<Eigen::MatrixXd>(grad.data(), hid, in) += d_a * input.transpose();
  grad.segment(hid * in, hid) += d_a;
  Eigen::Map<Eigen::MatrixXd>(grad.data() + hid * in + hid, kOutputs, hid) += d_o * h.transpose();
  grad.segment(hid * in + hid + kOutputs * hid, kOutputs) += d_o;
  return logq;
}

WaypointChoice ProposalNet::sample(const Eigen::VectorXd& input, RandomStream& rng) const {
  const Output out = forward(input);
  WaypointChoice u;
  u.use_waypoint = rng.bernoulli(out.p_use);
  if (!u.use_waypoint) {
    u.waypoint = rng.unit_square();
    return u;
  }
  for (int c = 0; c < 2; ++c) {
    // Inverse CDF restricted to [0, 1].
    const double lo = std_normal_cdf(-out.mean[c] / out.scale[c]);
    const double hi = std_normal_cdf((1.0 - out.mean[c]) / out.scale[c]);
    const double q = std::clamp(lo + (hi - lo) * rng.uniform(), 1e-300, 1.0 - 1e-16);
    u.waypoint[c] = std::clamp(out.mean[c] + out.scale[c] * std_normal_quantile(q), 0.0, 1.0);
  }
  return u;
}

Eigen::VectorXd net_input(const Point& goal, const LocationSeries& observed) {
  Eigen::VectorXd x(2 + observed.size());
  x.head<2>() = goal;
  x.tail(observed.size()) = observed.reshaped();
  return x.array() - 0.5;
}

double net_logdensity(const ProposalNet& net, const Point& goal, const LocationSeries& observed,
                      const WaypointChoice& u) {
  return net.log_density(net_input(goal, observed), u);
}

TrainingSet generate_training_data(const WorldMap& m, const Point& start, const TimeGrid& t,
                                   const PlannerParams& params, double noise_std, int count,
                                   RandomStream& rng) {
  if (count < 1) throw std::invalid_argument("generate_training_data: count must be >= 1");
  TrainingSet data;
  data.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    TrainingExample ex;
    ex.goal = rng.unit_square();
    NoisyWaypointRun run = agent_waypoint_path(m, start, ex.goal, t, params, noise_std, rng);
    ex.observed = std::move(run.observed);
    ex.choice = run.trace.choice;
    data.push_back(std::move(ex));
  }
  return data;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be positive");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("train: validation_fraction must lie in (0, 1)");
  }
}

double mean_nll(const ProposalNet& net, std::span<const TrainingExample> examples) {
  if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const auto& ex : examples) total -= net_logdensity(net, ex.goal, ex.observed, ex.choice);
  return total / static_cast<double>(examples.size());
}

double nll_and_gradient(const ProposalNet& net, std::span<const TrainingExample> batch,
                        Eigen::VectorXd& grad) {
  grad.setZero(net.num_params());
  double total = 0.0;
  for (const auto& ex : batch) {
    total -= net.log_density_accumulate(net_input(ex.goal, ex.observed), ex.choice, grad);
  }
  const double n = static_cast<double>(batch.size());
  grad /= -n;
  return total / n;
}

TrainResult train(ProposalNet net, const TrainingSet& data, const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("train: empty training set");
  cfg.validate();
  RandomStream rng(cfg.seed);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const auto n_val = static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(data.size()));
  TrainingSet validation;
  TrainingSet training;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_val ? validation : training).push_back(data[order[k]]);
  if (training.empty()) throw std::invalid_argument("train: no training examples after validation split");

  TrainResult result{std::move(net), {}};
  auto report = [&](int epoch) {
    EpochReport r{epoch, mean_nll(result.net, training), mean_nll(result.net, validation)};
    if (!std::isfinite(r.train_nll)) {
      throw std::runtime_error("train: non-finite training loss at epoch " + std::to_string(epoch));
    }
    result.curve.push_back(r);
  };
  report(0);

  std::vector<std::size_t> idx(training.size());
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::VectorXd grad;
  TrainingSet batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
    for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(idx.size(), at + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t k = at; k < end; ++k) batch.push_back(training[idx[k]]);
      const double loss = nll_and_gradient(result.net, batch, grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw std::runtime_error("train: non-finite loss or gradient at epoch " + std::to_string(epoch) +
                                 ", batch starting at " + std::to_string(at));
      }
      result.net.params() -= cfg.learning_rate * grad;
    }
    report(epoch);
  }
  return result;
}

std::string net_to_json(const ProposalNet& net) {
  nlohmann::json j;
  j["format"] = "goalinfer.proposal_net";
  j["version"] = 1;
  j["input_dim"] = net.input_dim();
  j["hidden"] = net.hidden();
  j["params"] = std::vector<double>(net.params().begin(), net.params().end());
  return j.dump();
}

ProposalNet net_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != "goalinfer.proposal_net") throw std::runtime_error("not a proposal net file");
  if (j.value("version", 0) != 1) throw std::runtime_error("unsupported proposal net version");
  ProposalNet net(j.at("input_dim").get<int>(), j.at("hidden").get<int>());
  const auto params = j.at("params").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(params.size()) != net.num_params()) {
    throw std::runtime_error("proposal net file has the wrong parameter count");
  }
  net.params() = Eigen::Map<const Eigen::VectorXd>(params.data(), net.num_params());
  return net;
}

void save_net(const ProposalNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << net_to_json(net) << '\n';
}

ProposalNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return net_from_json(ss.str());
}

namespace {

LocationSeries as_series(const Value& z) {
  return Eigen::Map<const LocationSeries>(z.data(), 2, z.size() / 2);
}

}  // namespace

NestedInference neural_nested_algorithm(ProposalNet net, WaypointWorld world, int samples) {
  struct Draw {
    WaypointChoice choice;
    LocationSeries walked;
    double log_q;
  };
  auto shared_world = std::make_shared<const WaypointWorld>(std::move(world));
  auto shared_net = std::make_shared<const ProposalNet>(std::move(net));
  return make_nested_inference<Draw>(
      [shared_world, shared_net](const Args& x, const Value& z, RandomStream& rng) {
        const WaypointWorld& w = *shared_world;
        const Point goal = x.head<2>();
        const Eigen::VectorXd input = net_input(goal, as_series(z));
        Draw d;
        d.choice = shared_net->sample(input, rng);
        d.log_q = shared_net->log_density(input, d.choice);
        d.walked = waypoint_path_given(w.map, w.start, goal, w.times, w.planner, d.choice, rng).walked;
        return d;
      },
      [shared_world](const Draw& d, const Value& z, const Args&) {
        // p(u1; x) is Bernoulli(0.5) times a unit uniform density.
        return noise_log_density(as_series(z), d.walked, shared_world->noise_std) + std::log(0.5) - d.log_q;
      },
      samples);
}

NestedInference resimulation_nested_algorithm(WaypointWorld world, int samples) {
  auto shared_world = std::make_shared<const WaypointWorld>(std::move(world));
  return make_nested_inference<LocationSeries>(
      [shared_world](const Args& x, const Value&, RandomStream& rng) {
        const WaypointWorld& w = *shared_world;
        return sample_waypoint_path(w.map, w.start, x.head<2>(), w.times, w.planner, rng).walked;
      },
      [shared_world](const LocationSeries& walked, const Value& z, const Args&) {
        return noise_log_density(as_series(z), walked, shared_world->noise_std);
      },
      samples);
}

}  // namespace goalinfer
