#pragma once

// Fixed-structure probabilistic programs: named random choices, a dependency
// DAG, execution traces, and the tractable part of the joint log density.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "goalinfer/random.hpp"

namespace goalinfer {

/// Every random-choice output and every argument tuple is a dense vector:
/// booleans and discrete states are stored as a single entry, points as two,
/// location series as 2T (column-major x,y pairs).
using Value = Eigen::VectorXd;
using Args = Eigen::VectorXd;
using NodeId = std::size_t;

/// A kind of random choice. A primitive without a log density is
/// likelihood-free.
struct PrimitiveType {
  std::string name;
  std::function<Value(const Args&, RandomStream&)> simulate;
  std::function<double(const Value&, const Args&)> log_density;

  bool likelihood_free() const { return !static_cast<bool>(log_density); }
};

/// Maps the values of a node's parents (in declaration order) to its args.
using ArgFn = std::function<Args(std::span<const Value>)>;

/// Concatenates all parent values; the default ArgFn.
Args concat_args(std::span<const Value> parents);

class ModelGraph {
 public:
  class Builder {
   public:
    /// Parents may be named before they are added; names resolve at build().
    Builder& add(std::string name, PrimitiveType type, std::vector<std::string> parents = {},
                 ArgFn args = concat_args);
    /// Constrain a tractable choice to observed data (the set C).
    Builder& constrain(const std::string& name, Value value);
    /// Fix the output of a likelihood-free choice to observed data. Such a
    /// choice is scored by nested inference and never resimulated.
    Builder& observe(const std::string& name, Value value);

    /// Rejects duplicate names and cycles. Constrained choices need a density.
    ModelGraph build() const;

   private:
    struct Pending {
      std::string name;
      PrimitiveType type;
      std::vector<std::string> parents;
      ArgFn args;
    };
    std::vector<Pending> nodes_;
    std::vector<std::pair<std::string, Value>> constrained_;
    std::vector<std::pair<std::string, Value>> observed_;
  };

  /// Empty graph.
  ModelGraph() : impl_(std::make_shared<Impl>()) {}

  std::size_t size() const { return impl_->nodes.size(); }
  NodeId id(const std::string& name) const;
  bool contains(const std::string& name) const { return impl_->index.count(name) > 0; }
  const std::string& name(NodeId i) const { return impl_->nodes[i].name; }
  const PrimitiveType& type(NodeId i) const { return impl_->nodes[i].type; }
  const std::vector<NodeId>& parents(NodeId i) const { return impl_->nodes[i].parents; }
  const std::vector<NodeId>& children(NodeId i) const { return impl_->nodes[i].children; }
  /// Position in the full topological order.
  std::size_t rank(NodeId i) const { return impl_->nodes[i].rank; }
  const std::vector<NodeId>& order() const { return impl_->order; }

  bool likelihood_free(NodeId i) const { return type(i).likelihood_free(); }
  bool constrained(NodeId i) const { return impl_->nodes[i].fixed && !likelihood_free(i); }
  bool observed_likelihood_free(NodeId i) const { return impl_->nodes[i].fixed && likelihood_free(i); }
  /// Constrained or observed: the value never changes during inference.
  bool fixed(NodeId i) const { return impl_->nodes[i].fixed.has_value(); }
  const Value& fixed_value(NodeId i) const { return *impl_->nodes[i].fixed; }

  /// x_i = f_i(z_parents), reading only the declared parents.
  Args args(NodeId i, std::span<const Value> values) const;

 private:
  struct Node {
    std::string name;
    PrimitiveType type;
    std::vector<NodeId> parents;
    std::vector<NodeId> children;
    ArgFn args;
    std::optional<Value> fixed;
    std::size_t rank = 0;
  };
  struct Impl {
    std::vector<Node> nodes;
    std::vector<NodeId> order;
    std::unordered_map<std::string, NodeId> index;
  };
  explicit ModelGraph(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<const Impl> impl_;
};

/// Thrown when a dependency graph contains a cycle.
class CycleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Kahn's algorithm over an edge list, lowest id first among ready nodes.
std::vector<NodeId> topological_sort(std::size_t node_count,
                                     std::span<const std::pair<NodeId, NodeId>> edges);

/// All nodes reachable from the frontier (inclusive), in topological order.
std::vector<NodeId> topological_order(const ModelGraph& g, std::span<const NodeId> frontier);

/// Values of every choice plus the nested-inference estimate database, stored
/// as log estimates (one slot per node, used only for likelihood-free ones).
struct TraceState {
  std::vector<Value> values;
  std::vector<std::optional<double>> log_estimates;

  bool operator==(const TraceState& other) const;
};

/// Forward simulation in topological order; fixed choices take their data.
TraceState simulate_trace(const ModelGraph& g, RandomStream& rng);

/// Sum of log p_{t_i}(z_i; x_i) over choices with tractable densities.
double log_joint_tractable(const ModelGraph& g, std::span<const Value> values);

/// exp of log_joint_tractable.
double joint_density_tractable_part(const ModelGraph& g, std::span<const Value> values);

}  // namespace goalinfer
