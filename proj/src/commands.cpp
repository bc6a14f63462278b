#include "goalinfer/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "goalinfer/eval.hpp"
#include "goalinfer/models.hpp"
#include "goalinfer/neural.hpp"
#include "goalinfer/svg.hpp"

namespace goalinfer {

namespace {

class CsvWriter {
 public:
  CsvWriter(std::vector<std::string> header, std::string hash, std::uint64_t seed)
      : hash_(std::move(hash)), seed_(std::to_string(seed)) {
    header.emplace_back("scenario_hash");
    header.emplace_back("seed");
    emit(header);
  }

  /// Appends the scenario hash and seed columns.
  void row(std::vector<std::string> cells) {
    cells.push_back(hash_);
    cells.push_back(seed_);
    emit(cells);
  }

  std::string str() const { return out_.str(); }

 private:
  void emit(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::string hash_;
  std::string seed_;
  std::ostringstream out_;
};

std::string str(double v) { return format_number(v); }

bool inside(const Region& r, const Point& p) { return r.polygon.contains(p); }

std::string resolve(const Scenario& s, const std::string& path) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute() || s.base_dir.empty()) return p.string();
  return (std::filesystem::path(s.base_dir) / p).string();
}

std::optional<ProposalNet> load_net_if_needed(const Scenario& s, const StrategySpec& strategy,
                                              const RunOptions& opts) {
  if (strategy.kind != "nni") return std::nullopt;
  const std::string path = !opts.net_path.empty() ? opts.net_path : resolve(s, s.neural.net_file);
  if (path.empty()) throw std::invalid_argument("neural strategy requires a network file (neural.net_file)");
  return load_net(path);
}

Scenario with_planner(Scenario s, bool full) {
  s.planner = effective_planner(s, full);
  return s;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double RunOutput::summary_value(const std::string& key) const {
  for (const auto& [k, v] : summary) {
    if (k == key) return v;
  }
  throw std::out_of_range("no summary value '" + key + "'");
}

PlannerParams effective_planner(const Scenario& s, bool full) {
  return full && s.full_planner ? *s.full_planner : s.planner;
}

InferenceConfig effective_inference(const Scenario& s, bool full) {
  return full && s.full_inference ? *s.full_inference : s.inference;
}

EvalConfig effective_eval(const Scenario& s, bool full) {
  return full && s.full_eval ? *s.full_eval : s.eval;
}

RunOutput cmd_plan(const Scenario& s, const RunOptions& opts) {
  validate_scenario(s);
  const std::uint64_t seed = opts.seed.value_or(s.seed);
  const int count = opts.count >= 0 ? opts.count : s.plan.count;
  const std::string hash = scenario_hash(s);
  const Point start = s.starts.front();
  if (!s.map.valid_state(s.plan.goal)) throw ScenarioError("/plan/goal", "goal is not a valid state on the map");

  std::vector<PlanSetting> settings = s.plan.settings;
  if (settings.empty()) {
    const PlannerParams base = effective_planner(s, opts.full);
    settings.push_back({base.refinement_iters, base.restarts});
  }

  RunOutput out;
  CsvWriter csv({"setting", "refinement_iters", "restarts", "run", "found", "length", "point", "x", "y"}, hash, seed);
  for (std::size_t k = 0; k < settings.size(); ++k) {
    PlannerParams params = effective_planner(s, opts.full);
    params.refinement_iters = settings[k].refinement_iters;
    params.restarts = settings[k].restarts;
    params.validate();
    const std::string tag = "N" + std::to_string(params.refinement_iters) + "_R" + std::to_string(params.restarts);
    SceneSvg svg;
    svg.map(s.map);
    double total = 0.0;
    int found = 0;
    for (int r = 0; r < count; ++r) {
      RandomStream rng(derive_seed(derive_seed(seed, k), static_cast<std::uint64_t>(r)));
      const PlanResult path = plan_path(s.map, start, s.plan.goal, params, rng);
      std::vector<std::string> lead{std::to_string(k), std::to_string(params.refinement_iters),
                                    std::to_string(params.restarts), std::to_string(r)};
      if (!path) {
        auto cells = lead;
        cells.insert(cells.end(), {"0", "nan", "-1", "nan", "nan"});
        csv.row(cells);
        continue;
      }
      const double len = path_length(*path);
      total += len;
      ++found;
      for (std::size_t i = 0; i < path->size(); ++i) {
        auto cells = lead;
        cells.insert(cells.end(), {"1", str(len), std::to_string(i), str((*path)[i][0]), str((*path)[i][1])});
        csv.row(cells);
      }
      svg.path(*path, "#1f4e9c", 1.2, 0.5);
    }
    svg.start(start);
    svg.sample(s.plan.goal, "goal", "#2ca02c");
    svg.title("N=" + std::to_string(params.refinement_iters) + ", R=" + std::to_string(params.restarts));
    out.files["plan_" + tag + ".svg"] = svg.str();
    out.summary.emplace_back("mean_length_" + tag, found > 0 ? total / found : std::nan(""));
    out.summary.emplace_back("found_" + tag, found);
  }
  out.files["samples.csv"] = csv.str();
  return out;
}

RunOutput cmd_infer(const Scenario& scenario, const RunOptions& opts) {
  validate_scenario(scenario);
  const Scenario s = with_planner(scenario, opts.full);
  const InferenceConfig cfg = effective_inference(s, opts.full);
  const std::uint64_t seed = opts.seed.value_or(s.seed);
  const std::string hash = scenario_hash(scenario);
  if (s.observations.empty()) throw ScenarioError("/observations", "inference needs observations");

  const std::optional<ProposalNet> net = load_net_if_needed(s, cfg.strategy, opts);
  const BuiltModel model = build_model(s, cfg.strategy, net ? &*net : nullptr);
  ChainSpec spec;
  spec.model = model.graph;
  spec.schedule = make_schedule(model, cfg.strategy, cfg.kernels);
  spec.num_transitions = cfg.transitions;
  spec.num_replicates = cfg.replicates;
  spec.seed = seed;
  const ChainRun run = run_chains(spec);
  const ModelGraph& g = model.graph;

  RunOutput out;
  CsvWriter samples({"replicate", "choice", "component", "value"}, hash, seed);
  std::vector<NodeId> latents;
  for (NodeId id : g.order()) {
    if (!g.fixed(id) && !g.likelihood_free(id)) latents.push_back(id);
  }
  for (std::size_t r = 0; r < run.finals.size(); ++r) {
    for (NodeId id : latents) {
      const Value& v = run.finals[r].values[id];
      for (Eigen::Index c = 0; c < v.size(); ++c) {
        samples.row({std::to_string(r), g.name(id), std::to_string(c), str(v[c])});
      }
    }
  }
  out.files["samples.csv"] = samples.str();

  SceneSvg svg;
  svg.map(s.map);
  if (s.model == ModelKind::belief_goal) {
    for (const auto& st : run.finals) {
      const Point post = st.values[g.id("obstacle_post")];
      const Polygon rect = obstacle_rectangle(post, st.values[g.id("obstacle_angle")][0],
                                              st.values[g.id("obstacle_length")][0], s.belief.width);
      svg.polygon(rect, "fill:#8b4513;fill-opacity:0.15;stroke:none");
    }
  }
  for (const auto& z : s.observations) svg.series(z, "#ffffff");
  for (const auto& st : s.starts) svg.start(st);

  const double n = static_cast<double>(run.finals.size());
  if (s.model == ModelKind::common_goal) {
    const NodeId flag = g.id("is_common_goal");
    const NodeId ga = g.id("goal_a");
    const NodeId gb = g.id("goal_b");
    double common = 0.0;
    for (const auto& st : run.finals) {
      if (st.values[flag][0] == 1.0) {
        common += 1.0;
        svg.sample(st.values[ga], "sample-common", "#f2c40f");
      } else {
        svg.sample(st.values[ga], "sample-a", "#c2188b");
        svg.sample(st.values[gb], "sample-b", "#1f6fd1");
      }
    }
    out.summary.emplace_back("p_common_goal", n > 0 ? common / n : std::nan(""));
  } else {
    const std::vector<Point> goals = collect_points(g, run.finals, "goal");
    for (const auto& p : goals) svg.sample(p, "sample", "#d62728");
    for (const auto& region : s.regions) {
      double hits = 0.0;
      for (const auto& p : goals) hits += inside(region, p) ? 1.0 : 0.0;
      out.summary.emplace_back("fraction_in_" + region.name, n > 0 ? hits / n : std::nan(""));
    }
  }
  svg.title(s.name + " (" + cfg.strategy.label() + ", " + std::to_string(cfg.transitions) + " transitions)");
  out.files["samples.svg"] = svg.str();

  CsvWriter diag({"metric", "kernel", "value"}, hash, seed);
  for (const auto& k : acceptance_stats(run.log)) {
    diag.row({"acceptance", k.name, str(k.acceptance)});
    diag.row({"ms_per_transition", k.name, str(k.ms_per_transition)});
  }
  for (const auto& [key, value] : out.summary) diag.row({key, "", str(value)});
  diag.row({"seconds_total", "", str(run.log.seconds)});
  out.files["diagnostics.csv"] = diag.str();
  return out;
}

RunOutput cmd_train(const Scenario& scenario, const RunOptions& opts) {
  validate_scenario(scenario);
  if (scenario.model != ModelKind::waypoint) {
    throw ScenarioError("/model", "training needs a waypoint scenario");
  }
  const Scenario s = with_planner(scenario, opts.full);
  const std::uint64_t seed = opts.seed.value_or(s.seed);
  const std::string hash = scenario_hash(scenario);

  RandomStream data_rng(derive_seed(seed, 1));
  const TrainingSet data = generate_training_data(s.map, s.starts.front(), s.times, s.planner, s.obs_noise,
                                                  s.neural.examples, data_rng);
  RandomStream init_rng(derive_seed(seed, 2));
  const int input_dim = 2 + 2 * static_cast<int>(s.times.size());
  TrainConfig cfg = s.neural.train;
  cfg.seed = derive_seed(seed, 3);
  const TrainResult result = train(ProposalNet::random(input_dim, s.neural.hidden, init_rng), data, cfg);

  RunOutput out;
  const std::string net_name = s.neural.net_file.empty()
                                   ? std::string("proposal_net.json")
                                   : std::filesystem::path(s.neural.net_file).filename().string();
  out.files[net_name] = net_to_json(result.net);
  CsvWriter curve({"epoch", "train_nll", "validation_nll"}, hash, seed);
  for (const auto& e : result.curve) {
    curve.row({std::to_string(e.epoch), str(e.train_nll), str(e.validation_nll)});
  }
  out.files["training_curve.csv"] = curve.str();
  out.summary.emplace_back("initial_validation_nll", result.curve.front().validation_nll);
  out.summary.emplace_back("final_validation_nll", result.curve.back().validation_nll);
  return out;
}

RunOutput cmd_eval(const Scenario& scenario, const RunOptions& opts) {
  validate_scenario(scenario);
  const Scenario s = with_planner(scenario, opts.full);
  const EvalConfig cfg = effective_eval(s, opts.full);
  if (cfg.transition_counts.empty()) throw ScenarioError("/eval/transition_counts", "no transition counts");
  const std::uint64_t seed = opts.seed.value_or(s.seed);
  const std::string hash = scenario_hash(scenario);

  std::optional<ProposalNet> net;
  for (const auto& st : cfg.strategies) {
    if (!net) net = load_net_if_needed(s, st, opts);
  }
  const ConvergenceCurve curve = convergence_study(s, cfg, seed, net ? &*net : nullptr);

  RunOutput out;
  CsvWriter csv({"strategy", "transitions", "kl", "ms_per_sample", "samples", "acceptance"}, hash, seed);
  for (const auto& p : curve.points) {
    csv.row({p.strategy, std::to_string(p.transitions), str(p.kl), str(p.ms_per_sample),
             std::to_string(p.samples), str(p.acceptance)});
  }
  out.files["curve.csv"] = csv.str();
  out.files["curve.svg"] = render_curve_svg(curve, cfg.strategies, cfg.marked_transitions);
  for (const auto& p : curve.points) {
    out.summary.emplace_back("kl_" + p.strategy + "_" + std::to_string(p.transitions), p.kl);
  }
  return out;
}

void write_run_output(const RunOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, contents] : out.files) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << contents;
  }
}

}  // namespace goalinfer
