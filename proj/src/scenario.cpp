#include "goalinfer/scenario.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace goalinfer {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

/// A JSON value together with its pointer path, for error reporting.
struct Node {
  const json& j;
  std::string path;

  [[noreturn]] void fail(const std::string& msg) const { throw ScenarioError(path.empty() ? "/" : path, msg); }

  bool has(const char* key) const { return j.is_object() && j.contains(key); }

  Node at(const char* key) const {
    if (!j.is_object()) fail("expected an object");
    if (!j.contains(key)) throw ScenarioError(path + "/" + key, "required field is missing");
    return {j.at(key), path + "/" + key};
  }

  Node at(std::size_t i) const { return {j.at(i), path + "/" + std::to_string(i)}; }

  std::size_t size() const {
    if (!j.is_array()) fail("expected an array");
    return j.size();
  }

  double number() const {
    if (!j.is_number()) fail("expected a number");
    return j.get<double>();
  }

  int integer() const {
    if (!j.is_number_integer()) fail("expected an integer");
    return j.get<int>();
  }

  std::uint64_t u64() const {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
      fail("expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
  }

  std::string string() const {
    if (!j.is_string()) fail("expected a string");
    return j.get<std::string>();
  }

  Point point() const {
    if (size() != 2) fail("expected an [x, y] pair");
    return {at(std::size_t{0}).number(), at(std::size_t{1}).number()};
  }

  std::vector<Point> points() const {
    std::vector<Point> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).point());
    return out;
  }

  std::vector<int> integers() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).integer());
    return out;
  }

  template <class T, class F>
  void optional(const char* key, T& field, F read) const {
    if (has(key)) field = read(at(key));
  }
};

Polygon read_polygon(const Node& n) {
  try {
    return Polygon(n.points());
  } catch (const std::invalid_argument& e) {
    n.fail(e.what());
  }
}

LocationSeries read_series(const Node& n) {
  const std::vector<Point> pts = n.points();
  LocationSeries z(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) z.col(static_cast<Eigen::Index>(k)) = pts[k];
  return z;
}

StrategySpec read_strategy(const Node& n) {
  StrategySpec s;
  s.kind = n.at("kind").string();
  if (s.kind != "cr" && s.kind != "nni" && s.kind != "rni") n.at("kind").fail("unknown strategy '" + s.kind + "'");
  n.optional("samples", s.samples, [](const Node& v) { return v.integer(); });
  if (s.samples < 1) n.at("samples").fail("must be >= 1");
  return s;
}

InferenceConfig read_inference(const Node& n) {
  InferenceConfig c;
  if (n.has("strategy")) c.strategy = read_strategy(n.at("strategy"));
  n.optional("transitions", c.transitions, [](const Node& v) { return v.integer(); });
  n.optional("replicates", c.replicates, [](const Node& v) { return v.integer(); });
  if (n.has("kernels")) {
    const Node k = n.at("kernels");
    for (std::size_t i = 0; i < k.size(); ++i) c.kernels.push_back(k.at(i).string());
  }
  if (c.transitions < 0) n.at("transitions").fail("must be >= 0");
  if (c.replicates < 0) n.at("replicates").fail("must be >= 0");
  return c;
}

EvalConfig read_eval(const Node& n) {
  EvalConfig c;
  if (n.has("strategies")) {
    const Node s = n.at("strategies");
    for (std::size_t i = 0; i < s.size(); ++i) c.strategies.push_back(read_strategy(s.at(i)));
  }
  n.optional("transition_counts", c.transition_counts, [](const Node& v) { return v.integers(); });
  n.optional("replicates", c.replicates, [](const Node& v) { return v.integer(); });
  n.optional("reference_transitions", c.reference_transitions, [](const Node& v) { return v.integer(); });
  n.optional("reference_replicates", c.reference_replicates, [](const Node& v) { return v.integer(); });
  n.optional("grid", c.grid, [](const Node& v) { return v.integer(); });
  n.optional("pseudocount", c.pseudocount, [](const Node& v) { return v.number(); });
  n.optional("marked_transitions", c.marked_transitions, [](const Node& v) { return v.integers(); });
  for (int t : c.transition_counts) {
    if (t < 0) n.at("transition_counts").fail("counts must be >= 0");
  }
  if (c.grid < 1) n.at("grid").fail("must be >= 1");
  if (!(c.pseudocount > 0.0)) n.at("pseudocount").fail("must be positive");
  return c;
}

PlannerParams read_planner(const Node& n) {
  PlannerParams p;
  n.optional("refinement_iters", p.refinement_iters, [](const Node& v) { return v.integer(); });
  n.optional("restarts", p.restarts, [](const Node& v) { return v.integer(); });
  n.optional("max_tree_nodes", p.max_tree_nodes, [](const Node& v) { return v.integer(); });
  n.optional("min_tree_nodes", p.min_tree_nodes, [](const Node& v) { return v.integer(); });
  n.optional("refine_std", p.refine_std, [](const Node& v) { return v.number(); });
  n.optional("agent_speed", p.agent_speed, [](const Node& v) { return v.number(); });
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    n.fail(e.what());
  }
  return p;
}

TrainConfig read_train(const Node& n) {
  TrainConfig c;
  n.optional("learning_rate", c.learning_rate, [](const Node& v) { return v.number(); });
  n.optional("batch_size", c.batch_size, [](const Node& v) { return v.integer(); });
  n.optional("epochs", c.epochs, [](const Node& v) { return v.integer(); });
  n.optional("validation_fraction", c.validation_fraction, [](const Node& v) { return v.number(); });
  n.optional("seed", c.seed, [](const Node& v) { return v.u64(); });
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    n.fail(e.what());
  }
  return c;
}

json point_json(const Point& p) { return json::array({p[0], p[1]}); }

json points_json(std::span<const Point> pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(point_json(p));
  return a;
}

json series_json(const LocationSeries& z) {
  json a = json::array();
  for (Eigen::Index k = 0; k < z.cols(); ++k) a.push_back(point_json(z.col(k)));
  return a;
}

json strategy_json(const StrategySpec& s) { return {{"kind", s.kind}, {"samples", s.samples}}; }

json inference_json(const InferenceConfig& c) {
  return {{"strategy", strategy_json(c.strategy)},
          {"transitions", c.transitions},
          {"replicates", c.replicates},
          {"kernels", c.kernels}};
}

json eval_json(const EvalConfig& c) {
  json strategies = json::array();
  for (const auto& s : c.strategies) strategies.push_back(strategy_json(s));
  return {{"strategies", strategies},
          {"transition_counts", c.transition_counts},
          {"replicates", c.replicates},
          {"reference_transitions", c.reference_transitions},
          {"reference_replicates", c.reference_replicates},
          {"grid", c.grid},
          {"pseudocount", c.pseudocount},
          {"marked_transitions", c.marked_transitions}};
}

json planner_json(const PlannerParams& p) {
  return {{"refinement_iters", p.refinement_iters}, {"restarts", p.restarts},
          {"max_tree_nodes", p.max_tree_nodes},     {"min_tree_nodes", p.min_tree_nodes},
          {"refine_std", p.refine_std},             {"agent_speed", p.agent_speed}};
}

}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::drone: return "drone";
    case ModelKind::waypoint: return "waypoint";
    case ModelKind::common_goal: return "common_goal";
    case ModelKind::belief_goal: return "belief_goal";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "drone") return ModelKind::drone;
  if (s == "waypoint") return ModelKind::waypoint;
  if (s == "common_goal") return ModelKind::common_goal;
  if (s == "belief_goal") return ModelKind::belief_goal;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

std::string StrategySpec::label() const {
  if (kind == "cr") return "CR";
  std::string name = kind == "nni" ? "NNI" : kind == "rni" ? "RNI" : kind;
  return name + " K=" + std::to_string(samples);
}

void validate_scenario(const Scenario& s) {
  auto need = [](bool ok, const char* field, const char* msg) {
    if (!ok) throw ScenarioError(field, msg);
  };
  const std::size_t agents = s.model == ModelKind::common_goal ? 2 : 1;
  need(s.starts.size() == agents, "/starts", "wrong number of starts for the model kind");
  for (std::size_t a = 0; a < s.starts.size(); ++a) {
    if (!s.map.valid_state(s.starts[a])) {
      throw ScenarioError("/starts/" + std::to_string(a), "start is not a valid state on the map");
    }
  }
  need(s.obs_noise > 0.0, "/obs_noise", "must be positive");
  if (!s.observations.empty()) {
    need(s.observations.size() == agents, "/observations", "wrong number of observation series");
    for (std::size_t a = 0; a < s.observations.size(); ++a) {
      if (static_cast<std::size_t>(s.observations[a].cols()) != s.times.size()) {
        throw ScenarioError("/observations/" + std::to_string(a),
                            "series length does not match the time grid");
      }
    }
  }
  need(s.plan.count >= 0, "/plan/count", "must be >= 0");
}

Scenario parse_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("/", std::string("invalid JSON: ") + e.what());
  }
  const Node root{doc, ""};
  if (!doc.is_object()) root.fail("expected an object");

  Scenario s;
  s.schema_version = root.at("schema_version").integer();
  if (s.schema_version != kSchemaVersion) {
    root.at("schema_version").fail("unsupported schema version " + std::to_string(s.schema_version));
  }
  root.optional("name", s.name, [](const Node& v) { return v.string(); });
  try {
    s.model = model_kind_from_string(root.at("model").string());
  } catch (const std::invalid_argument& e) {
    root.at("model").fail(e.what());
  }
  s.seed = root.at("seed").u64();

  if (root.has("map")) {
    const Node obstacles = root.at("map").at("obstacles");
    std::vector<Polygon> polys;
    for (std::size_t i = 0; i < obstacles.size(); ++i) polys.push_back(read_polygon(obstacles.at(i)));
    s.map = WorldMap(std::move(polys));
  }
  s.starts = root.at("starts").points();
  if (root.has("times")) {
    const Node t = root.at("times");
    std::vector<double> ts;
    for (std::size_t i = 0; i < t.size(); ++i) ts.push_back(t.at(i).number());
    try {
      s.times = TimeGrid(std::move(ts));
    } catch (const std::invalid_argument& e) {
      t.fail(e.what());
    }
  }
  if (root.has("observations")) {
    const Node obs = root.at("observations");
    for (std::size_t a = 0; a < obs.size(); ++a) s.observations.push_back(read_series(obs.at(a)));
  }
  if (root.has("planner")) s.planner = read_planner(root.at("planner"));
  if (root.has("full_planner")) s.full_planner = read_planner(root.at("full_planner"));
  root.optional("obs_noise", s.obs_noise, [](const Node& v) { return v.number(); });
  if (root.has("inference")) s.inference = read_inference(root.at("inference"));
  if (root.has("full_inference")) s.full_inference = read_inference(root.at("full_inference"));
  if (root.has("eval")) s.eval = read_eval(root.at("eval"));
  if (root.has("full_eval")) s.full_eval = read_eval(root.at("full_eval"));

  if (root.has("plan")) {
    const Node p = root.at("plan");
    p.optional("goal", s.plan.goal, [](const Node& v) { return v.point(); });
    p.optional("count", s.plan.count, [](const Node& v) { return v.integer(); });
    if (p.has("settings")) {
      const Node list = p.at("settings");
      for (std::size_t i = 0; i < list.size(); ++i) {
        PlanSetting ps;
        ps.refinement_iters = list.at(i).at("refinement_iters").integer();
        ps.restarts = list.at(i).at("restarts").integer();
        s.plan.settings.push_back(ps);
      }
    }
  }
  if (root.has("neural")) {
    const Node n = root.at("neural");
    n.optional("net_file", s.neural.net_file, [](const Node& v) { return v.string(); });
    n.optional("examples", s.neural.examples, [](const Node& v) { return v.integer(); });
    n.optional("hidden", s.neural.hidden, [](const Node& v) { return v.integer(); });
    if (n.has("train")) s.neural.train = read_train(n.at("train"));
  }
  if (root.has("belief")) {
    const Node b = root.at("belief");
    BeliefConfig& c = s.belief;
    b.optional("post_lo", c.post_lo, [](const Node& v) { return v.point(); });
    b.optional("post_hi", c.post_hi, [](const Node& v) { return v.point(); });
    b.optional("angle_lo", c.angle_lo, [](const Node& v) { return v.number(); });
    b.optional("angle_hi", c.angle_hi, [](const Node& v) { return v.number(); });
    b.optional("length_lo", c.length_lo, [](const Node& v) { return v.number(); });
    b.optional("length_hi", c.length_hi, [](const Node& v) { return v.number(); });
    b.optional("width", c.width, [](const Node& v) { return v.number(); });
  }
  if (root.has("regions")) {
    const Node r = root.at("regions");
    for (std::size_t i = 0; i < r.size(); ++i) {
      s.regions.push_back({r.at(i).at("name").string(), read_polygon(r.at(i).at("polygon"))});
    }
  }
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("/", "cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str());
  s.base_dir = std::filesystem::path(path).parent_path().string();
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  json obstacles = json::array();
  for (const auto& p : s.map.obstacles()) obstacles.push_back(points_json(p.vertices()));
  json observations = json::array();
  for (const auto& z : s.observations) observations.push_back(series_json(z));
  json times = json::array();
  for (std::size_t i = 0; i < s.times.size(); ++i) times.push_back(s.times[i]);
  json settings = json::array();
  for (const auto& ps : s.plan.settings) {
    settings.push_back({{"refinement_iters", ps.refinement_iters}, {"restarts", ps.restarts}});
  }
  json regions = json::array();
  for (const auto& r : s.regions) regions.push_back({{"name", r.name}, {"polygon", points_json(r.polygon.vertices())}});
  const TrainConfig& t = s.neural.train;
  const BeliefConfig& b = s.belief;

  json doc = {
      {"schema_version", s.schema_version},
      {"name", s.name},
      {"model", to_string(s.model)},
      {"seed", s.seed},
      {"map", {{"obstacles", obstacles}}},
      {"starts", points_json(s.starts)},
      {"planner", planner_json(s.planner)},
      {"obs_noise", s.obs_noise},
      {"inference", inference_json(s.inference)},
      {"eval", eval_json(s.eval)},
      {"plan", {{"goal", point_json(s.plan.goal)}, {"count", s.plan.count}, {"settings", settings}}},
      {"neural",
       {{"net_file", s.neural.net_file},
        {"examples", s.neural.examples},
        {"hidden", s.neural.hidden},
        {"train",
         {{"learning_rate", t.learning_rate},
          {"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"validation_fraction", t.validation_fraction},
          {"seed", t.seed}}}}},
      {"belief",
       {{"post_lo", point_json(b.post_lo)},
        {"post_hi", point_json(b.post_hi)},
        {"angle_lo", b.angle_lo},
        {"angle_hi", b.angle_hi},
        {"length_lo", b.length_lo},
        {"length_hi", b.length_hi},
        {"width", b.width}}},
      {"regions", regions},
  };
  if (s.times.size() > 0) doc["times"] = times;
  if (!s.observations.empty()) doc["observations"] = observations;
  if (s.full_planner) doc["full_planner"] = planner_json(*s.full_planner);
  if (s.full_inference) doc["full_inference"] = inference_json(*s.full_inference);
  if (s.full_eval) doc["full_eval"] = eval_json(*s.full_eval);
  return doc.dump(2);
}

std::string scenario_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : scenario_to_json(s)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace goalinfer
