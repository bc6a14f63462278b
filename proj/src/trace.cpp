#include "goalinfer/trace.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

namespace goalinfer {

Args concat_args(std::span<const Value> parents) {
  Eigen::Index total = 0;
  for (const auto& v : parents) total += v.size();
  Args out(total);
  Eigen::Index at = 0;
  for (const auto& v : parents) {
    out.segment(at, v.size()) = v;
    at += v.size();
  }
  return out;
}

ModelGraph::Builder& ModelGraph::Builder::add(std::string name, PrimitiveType type,
                                              std::vector<std::string> parents, ArgFn args) {
  if (!type.simulate) throw std::invalid_argument("node '" + name + "' has no simulator");
  nodes_.push_back({std::move(name), std::move(type), std::move(parents), std::move(args)});
  return *this;
}

ModelGraph::Builder& ModelGraph::Builder::constrain(const std::string& name, Value value) {
  constrained_.emplace_back(name, std::move(value));
  return *this;
}

ModelGraph::Builder& ModelGraph::Builder::observe(const std::string& name, Value value) {
  observed_.emplace_back(name, std::move(value));
  return *this;
}

ModelGraph ModelGraph::Builder::build() const {
  auto impl = std::make_shared<Impl>();
  for (const auto& p : nodes_) {
    if (!impl->index.emplace(p.name, impl->nodes.size()).second) {
      throw std::invalid_argument("duplicate node name '" + p.name + "'");
    }
    Node n;
    n.name = p.name;
    n.type = p.type;
    n.args = p.args ? p.args : ArgFn(concat_args);
    impl->nodes.push_back(std::move(n));
  }
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    for (const auto& parent : nodes_[i].parents) {
      auto it = impl->index.find(parent);
      if (it == impl->index.end()) {
        throw std::invalid_argument("node '" + nodes_[i].name + "' has unknown parent '" + parent + "'");
      }
      impl->nodes[i].parents.push_back(it->second);
      impl->nodes[it->second].children.push_back(i);
      edges.emplace_back(it->second, i);
    }
  }
  for (auto& n : impl->nodes) {
    std::sort(n.children.begin(), n.children.end());
    n.children.erase(std::unique(n.children.begin(), n.children.end()), n.children.end());
  }
  impl->order = topological_sort(impl->nodes.size(), edges);
  for (std::size_t r = 0; r < impl->order.size(); ++r) impl->nodes[impl->order[r]].rank = r;

  auto fix = [&](const std::string& name, const Value& value, bool want_likelihood_free) {
    auto it = impl->index.find(name);
    if (it == impl->index.end()) throw std::invalid_argument("unknown node '" + name + "'");
    Node& n = impl->nodes[it->second];
    if (n.type.likelihood_free() != want_likelihood_free) {
      throw std::invalid_argument(want_likelihood_free
                                      ? "observe() needs a likelihood-free node: '" + name + "'"
                                      : "constrained node '" + name + "' must have a tractable density");
    }
    n.fixed = value;
  };
  for (const auto& [name, value] : constrained_) fix(name, value, false);
  for (const auto& [name, value] : observed_) fix(name, value, true);
  return ModelGraph(std::move(impl));
}

NodeId ModelGraph::id(const std::string& name) const {
  auto it = impl_->index.find(name);
  if (it == impl_->index.end()) throw std::out_of_range("unknown node '" + name + "'");
  return it->second;
}

Args ModelGraph::args(NodeId i, std::span<const Value> values) const {
  const Node& n = impl_->nodes[i];
  std::vector<Value> parent_values;
  parent_values.reserve(n.parents.size());
  for (NodeId p : n.parents) parent_values.push_back(values[p]);
  return n.args(parent_values);
}

std::vector<NodeId> topological_sort(std::size_t node_count,
                                     std::span<const std::pair<NodeId, NodeId>> edges) {
  std::vector<std::size_t> indegree(node_count, 0);
  std::vector<std::vector<NodeId>> out(node_count);
  for (const auto& [from, to] : edges) {
    out[from].push_back(to);
    ++indegree[to];
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId i = 0; i < node_count; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<NodeId> order;
  order.reserve(node_count);
  while (!ready.empty()) {
    const NodeId i = ready.top();
    ready.pop();
    order.push_back(i);
    for (NodeId j : out[i]) {
      if (--indegree[j] == 0) ready.push(j);
    }
  }
  if (order.size() != node_count) throw CycleError("dependency graph contains a cycle");
  return order;
}

std::vector<NodeId> topological_order(const ModelGraph& g, std::span<const NodeId> frontier) {
  std::vector<char> seen(g.size(), 0);
  std::vector<NodeId> stack(frontier.begin(), frontier.end());
  std::vector<NodeId> reached;
  while (!stack.empty()) {
    const NodeId i = stack.back();
    stack.pop_back();
    if (i >= g.size()) throw std::out_of_range("topological_order: unknown node id");
    if (seen[i]) continue;
    seen[i] = 1;
    reached.push_back(i);
    for (NodeId c : g.children(i)) stack.push_back(c);
  }
  std::sort(reached.begin(), reached.end(),
            [&](NodeId a, NodeId b) { return g.rank(a) < g.rank(b); });
  return reached;
}

bool TraceState::operator==(const TraceState& other) const {
  if (values.size() != other.values.size() || log_estimates != other.log_estimates) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != other.values[i].size() || values[i] != other.values[i]) return false;
  }
  return true;
}

TraceState simulate_trace(const ModelGraph& g, RandomStream& rng) {
  TraceState state;
  state.values.resize(g.size());
  state.log_estimates.resize(g.size());
  for (NodeId i : g.order()) {
    if (g.fixed(i)) {
      state.values[i] = g.fixed_value(i);
    } else {
      state.values[i] = g.type(i).simulate(g.args(i, state.values), rng);
    }
  }
  return state;
}

double log_joint_tractable(const ModelGraph& g, std::span<const Value> values) {
  double total = 0.0;
  for (NodeId i : g.order()) {
    if (g.likelihood_free(i)) continue;
    total += g.type(i).log_density(values[i], g.args(i, values));
  }
  return total;
}

double joint_density_tractable_part(const ModelGraph& g, std::span<const Value> values) {
  return std::exp(log_joint_tractable(g, values));
}

}  // namespace goalinfer
