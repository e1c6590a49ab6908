#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evo/eval/globals.hpp"
#include "evo/expr/deps.hpp"
#include "evo/expr/parser.hpp"

namespace evo {

enum class NodeKind : std::uint8_t {
  Callable, Intermediate, Output, RidgeW, RidgeG,
};

inline NodeKind node_kind_for(const std::string& name) {
  if (!name.empty() && name[0] == '@') return NodeKind::Callable;
  if (name == "output") return NodeKind::Output;
  if (name == "ridge_w") return NodeKind::RidgeW;
  if (name == "ridge_g") return NodeKind::RidgeG;
  return NodeKind::Intermediate;
}

/// Per-alternative accumulated history across the evaluations it joined.
struct AltStats {
  long age = 0;
  long n_evals = 0;
  double best_config_score = -std::numeric_limits<double>::infinity();
  double score_sum = 0.0;
  long score_count = 0;
  long n_runtime_failures = 0;
  // consecutive scored evaluations where every column of this output
  // alternative had normalized importance below the pruning threshold
  int low_importance_streak = 0;

  bool has_scores() const { return score_count > 0; }
  double mean_config_score() const {
    return score_count ? score_sum / static_cast<double>(score_count) : 0.0;
  }
};

struct Alternative {
  std::uint64_t id = 0;
  std::string source;
  ExprAst ast;
  AltStats stats;
};

struct Node {
  NodeKind kind{};
  std::vector<Alternative> alts;

  const Alternative* find_alt(std::uint64_t id) const {
    for (const auto& a : alts)
      if (a.id == id) return &a;
    return nullptr;
  }
};

/// One alternative choice per reachable multi-alternative node.
/// Single-alternative nodes are implicit.
using Configuration = std::map<std::string, std::uint64_t>;

/// Monotone source of alternative ids; ids are never reused within a run.
struct IdAllocator {
  std::uint64_t next = 1;
  std::uint64_t alloc() { return next++; }
};

class GraphError : public std::runtime_error {
public:
  explicit GraphError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The evolution graph: named nodes holding alternative implementations,
/// plus the append-only globals store. Treated as an immutable snapshot;
/// mutation and maintenance copy it and bump `version`.
struct Graph {
  std::map<std::string, Node> nodes;
  GlobalsStore globals;
  long version = 0;
  std::optional<Configuration> incumbent_config;

  bool has_node(const std::string& name) const { return nodes.count(name) > 0; }

  const Node& node(const std::string& name) const {
    auto it = nodes.find(name);
    if (it == nodes.end()) throw GraphError("unknown node '" + name + "'");
    return it->second;
  }

  Node& node(const std::string& name) {
    auto it = nodes.find(name);
    if (it == nodes.end()) throw GraphError("unknown node '" + name + "'");
    return it->second;
  }

  void add_node(const std::string& name) {
    if (name == "@globals")
      throw GraphError("'@globals' is the parameter store, not a node");
    if (name.empty()) throw GraphError("empty node name");
    nodes.emplace(name, Node{node_kind_for(name), {}});
  }

  std::uint64_t add_alternative(const std::string& node_name,
                                const std::string& source, IdAllocator& ids) {
    if (!has_node(node_name)) add_node(node_name);
    Alternative alt;
    alt.id = ids.alloc();
    alt.source = source;
    alt.ast = parse(source);
    nodes[node_name].alts.push_back(std::move(alt));
    return nodes[node_name].alts.back().id;
  }

  const Alternative* find_alternative(std::uint64_t id,
                                      std::string* node_name = nullptr) const {
    for (const auto& [name, n] : nodes)
      for (const auto& a : n.alts)
        if (a.id == id) {
          if (node_name) *node_name = name;
          return &a;
        }
    return nullptr;
  }

  std::size_t total_alternatives() const {
    std::size_t n = 0;
    for (const auto& [_, node] : nodes) n += node.alts.size();
    return n;
  }

  /// Direct node/callable dependencies of one alternative, restricted to
  /// names that actually exist as nodes in this graph.
  std::set<std::string> alt_node_deps(const Alternative& alt) const {
    DependencySet d = dependencies(alt.ast, {});
    std::set<std::string> out;
    for (const auto& n : d.nodes)
      if (has_node(n)) out.insert(n);
    for (const auto& c : d.callables)
      if (has_node(c)) out.insert(c);
    return out;
  }

  /// Union of alternative dependencies per node.
  std::set<std::string> node_deps(const std::string& name) const {
    std::set<std::string> out;
    for (const auto& alt : node(name).alts) {
      auto d = alt_node_deps(alt);
      out.insert(d.begin(), d.end());
    }
    return out;
  }

  /// Fixed point of the dependency closure starting from output, ridge_w
  /// and ridge_g.
  std::set<std::string> reachable() const {
    std::set<std::string> seen;
    std::vector<std::string> stack;
    for (const char* root : {"output", "ridge_w", "ridge_g"})
      if (has_node(root)) {
        seen.insert(root);
        stack.push_back(root);
      }
    while (!stack.empty()) {
      const std::string cur = stack.back();
      stack.pop_back();
      for (const auto& dep : node_deps(cur))
        if (seen.insert(dep).second) stack.push_back(dep);
    }
    return seen;
  }

  /// Reachable nodes with >= 2 alternatives, sorted by name. These are the
  /// axes of the configuration space.
  std::vector<std::string> multi_alt_reachable() const {
    std::vector<std::string> out;
    for (const auto& name : reachable())
      if (node(name).alts.size() >= 2) out.push_back(name);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Topological order of the reachable subgraph (dependencies first).
  /// Throws GraphError naming a cycle if one exists.
  std::vector<std::string> topo_order() const {
    const std::set<std::string> reach = reachable();
    std::map<std::string, int> state;  // 0 new, 1 visiting, 2 done
    std::vector<std::string> order;
    std::vector<std::string> path;

    auto visit = [&](auto&& self, const std::string& cur) -> void {
      state[cur] = 1;
      path.push_back(cur);
      for (const auto& dep : node_deps(cur)) {
        if (state[dep] == 1) {
          std::string cycle;
          auto it = std::find(path.begin(), path.end(), dep);
          for (; it != path.end(); ++it) cycle += *it + " -> ";
          throw GraphError("dependency cycle: " + cycle + dep);
        }
        if (state[dep] == 0) self(self, dep);
      }
      path.pop_back();
      state[cur] = 2;
      order.push_back(cur);
    };
    for (const auto& name : reach)
      if (state[name] == 0) visit(visit, name);
    return order;
  }

  bool is_acyclic() const {
    try {
      topo_order();
      return true;
    } catch (const GraphError&) {
      return false;
    }
  }

  /// Longest dependency chain below a node (leaves have depth 0). Callables
  /// and intermediates both count as steps.
  std::map<std::string, long> node_depths() const {
    std::map<std::string, long> depth;
    for (const auto& name : topo_order()) {
      long d = 0;
      for (const auto& dep : node_deps(name))
        d = std::max(d, depth[dep] + 1);
      depth[name] = d;
    }
    return depth;
  }

  /// Structural validation: required/unique special nodes, resolvable
  /// references, acyclicity. `input_names` may be empty when the dataset is
  /// not known yet, in which case unresolved identifiers are assumed to be
  /// inputs.
  void validate(const std::set<std::string>& input_names = {}) const {
    if (!has_node("output")) throw GraphError("graph has no 'output' node");
    for (const auto& [name, n] : nodes) {
      if (n.kind == NodeKind::RidgeG) {
        for (const auto& alt : n.alts)
          if (alt.ast.params.size() != 1)
            throw GraphError("ridge_g alternatives take exactly one "
                             "parameter (the residual)");
      }
      for (const auto& alt : n.alts) {
        DependencySet d = dependencies(alt.ast, input_names);
        for (const auto& g : d.globals)
          if (!globals.has(g))
            throw GraphError("alternative " + std::to_string(alt.id) +
                             " references unknown globals entry '" + g + "'");
        for (const auto& c : d.callables) {
          if (!has_node(c))
            throw GraphError("alternative " + std::to_string(alt.id) +
                             " invokes unknown callable '" + c + "'");
          if (node(c).kind != NodeKind::Callable)
            throw GraphError("'" + c + "' is not a callable node");
        }
        if (!input_names.empty()) {
          for (const auto& ref : d.nodes)
            if (!has_node(ref) && !input_names.count(ref))
              throw GraphError("alternative " + std::to_string(alt.id) +
                               " references unresolvable identifier '" + ref +
                               "'");
        }
      }
    }
    topo_order();  // throws on cycles
  }

  /// Drops incumbent selections that no longer point at an existing
  /// alternative of a multi-alternative reachable node.
  void repair_incumbent() {
    if (!incumbent_config) return;
    Configuration fixed;
    for (const auto& [name, alt_id] : *incumbent_config) {
      if (!has_node(name)) continue;
      if (node(name).alts.size() < 2) continue;
      if (node(name).find_alt(alt_id)) fixed[name] = alt_id;
    }
    const auto axes = multi_alt_reachable();
    for (const auto& name : axes)
      if (!fixed.count(name)) fixed[name] = node(name).alts.front().id;
    // drop selections for nodes that are no longer axes
    Configuration pruned;
    for (const auto& name : axes) pruned[name] = fixed[name];
    incumbent_config = pruned;
  }
};

}  // namespace evo
