#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "evo/eval/builtin_ops.hpp"
#include "evo/eval/cache.hpp"
#include "evo/eval/dataset.hpp"
#include "evo/graph/graph.hpp"

namespace evo {

/// Runtime failure attributed to the alternative that raised it (the root
/// cause, not the consumers it poisoned), for maintenance.
struct FailureRecord {
  std::uint64_t alt_id = 0;
  std::string node;
  std::string message;
};

class NodeEvalError : public EvalError {
public:
  NodeEvalError(std::uint64_t alt_id, const std::string& node,
                const std::string& msg)
      : EvalError("node '" + node + "' (alternative " +
                  std::to_string(alt_id) + "): " + msg),
        alt_id_(alt_id),
        node_(node) {}
  std::uint64_t alt_id() const { return alt_id_; }
  const std::string& node_name() const { return node_; }

private:
  std::uint64_t alt_id_;
  std::string node_;
};

using TensorPtr = std::shared_ptr<const Tensor>;

/// Evaluates nodes of one graph under one configuration, float32 forward
/// only. An optional EvalCache shares values across configurations at the
/// granularity of selected-ancestor subpaths. A cache must not outlive the
/// graph and dataset it was filled from.
class ConfigEval {
public:
  ConfigEval(const Graph& graph, const Configuration& config,
             const Dataset& dataset, EvalCache* cache = nullptr,
             long* eval_counter = nullptr)
      : graph_(graph), config_(config), dataset_(dataset), cache_(cache),
        eval_counter_(eval_counter) {}

  /// The selected alternative of a node (single-alternative nodes are
  /// implicit; multi-alternative nodes consult the configuration).
  const Alternative& selected(const std::string& name) const {
    const Node& n = graph_.node(name);
    if (n.alts.empty()) throw EvalError("node '" + name + "' is empty");
    if (n.alts.size() == 1) return n.alts.front();
    auto it = config_.find(name);
    if (it == config_.end())
      throw EvalError("configuration does not select an alternative for '" +
                      name + "'");
    const Alternative* alt = n.find_alt(it->second);
    if (!alt)
      throw EvalError("configuration selects missing alternative " +
                      std::to_string(it->second) + " of '" + name + "'");
    return *alt;
  }

  /// Tensor value of a non-callable node. Cache hits return the stored
  /// value; results are identical with and without caching.
  TensorPtr node_value(const std::string& name) {
    auto memo = local_.find(name);
    if (memo != local_.end()) {
      if (!memo->second.ok) rethrow(memo->second);
      return memo->second.value;
    }
    const Node& n = graph_.node(name);
    if (n.kind == NodeKind::Callable)
      throw EvalError("callable '" + name + "' cannot be used as a value");

    Result result;
    if (cache_) {
      const std::string key = cache_key(name);
      auto hit = cache_->lookup_or_claim(key);
      if (!hit) {
        result = compute_node(name);
        cache_->publish(key, to_entry(result));
      } else {
        result = from_entry(*hit);
      }
    } else {
      result = compute_node(name);
    }
    local_[name] = result;
    if (!result.ok) rethrow(result);
    return result.value;
  }

  /// Evaluates an alternative body with positionally bound parameters (the
  /// entry point for ridge_g residual mappings and similar engine calls).
  TensorPtr eval_with_args(const ExprAst& ast,
                           const std::vector<TensorPtr>& args) {
    if (args.size() != ast.params.size())
      throw EvalError("expected " + std::to_string(ast.params.size()) +
                      " argument(s), got " + std::to_string(args.size()));
    Frame frame;
    frame.values = args;
    return eval_expr(*ast.root, frame);
  }

  /// Evaluates one output alternative body, cached under the alternative id
  /// plus the selected sub-configuration of its ancestors. Output
  /// alternatives are all evaluated per configuration, so the cache key is
  /// the alternative itself rather than a node selection.
  TensorPtr eval_output_alt(const Alternative& alt) {
    auto memo = alt_local_.find(alt.id);
    if (memo != alt_local_.end()) {
      if (!memo->second.ok) rethrow(memo->second);
      return memo->second.value;
    }
    Result result;
    if (cache_) {
      std::string key = "output#" + std::to_string(alt.id);
      std::set<std::string> anc;
      for (const auto& dep : graph_.alt_node_deps(alt)) {
        anc.insert(dep);
        const auto& sub = selected_ancestors(dep);
        anc.insert(sub.begin(), sub.end());
      }
      for (const auto& a : anc)
        if (graph_.node(a).alts.size() >= 2)
          key += "|" + a + "=" + std::to_string(selected(a).id);
      auto hit = cache_->lookup_or_claim(key);
      if (!hit) {
        result = compute_body(alt, "output");
        cache_->publish(key, to_entry(result));
      } else {
        result = from_entry(*hit);
      }
    } else {
      result = compute_body(alt, "output");
    }
    alt_local_[alt.id] = result;
    if (!result.ok) rethrow(result);
    return result.value;
  }

  const Graph& graph() const { return graph_; }
  const Configuration& config() const { return config_; }
  const Dataset& dataset() const { return dataset_; }

  /// Multi-alt nodes on the selected dependency path of `name`, including
  /// `name` itself: the identity of the cached value. Configurations that
  /// agree on this restriction share the cache slot.
  std::string cache_key(const std::string& name) {
    std::string key = name;
    std::set<std::string> anc = selected_ancestors(name);
    anc.insert(name);
    for (const auto& a : anc)
      if (graph_.node(a).alts.size() >= 2)
        key += "|" + a + "=" + std::to_string(selected(a).id);
    return key;
  }

private:
  struct Frame {
    std::vector<TensorPtr> values;  // by parameter index
  };

  struct Result {
    bool ok = false;
    TensorPtr value;
    std::string error;
    std::uint64_t fail_alt = 0;
    std::string fail_node;
  };

  static EvalCache::Entry to_entry(const Result& r) {
    EvalCache::Entry e;
    e.ok = r.ok;
    e.value = r.value;
    e.error = r.ok ? "" : r.fail_node + "\x1f" + std::to_string(r.fail_alt) +
                              "\x1f" + r.error;
    return e;
  }

  static Result from_entry(const EvalCache::Entry& e) {
    Result r;
    r.ok = e.ok;
    r.value = e.value;
    if (!e.ok) {
      const auto a = e.error.find('\x1f');
      const auto b = e.error.find('\x1f', a + 1);
      r.fail_node = e.error.substr(0, a);
      r.fail_alt = std::stoull(e.error.substr(a + 1, b - a - 1));
      r.error = e.error.substr(b + 1);
    }
    return r;
  }

  [[noreturn]] static void rethrow(const Result& r) {
    throw NodeEvalError(r.fail_alt, r.fail_node, r.error);
  }

  Result compute_node(const std::string& name) {
    return compute_body(selected(name), name);
  }

  Result compute_body(const Alternative& alt, const std::string& name) {
    if (eval_counter_) ++*eval_counter_;
    Result r;
    try {
      Frame frame = bind_node_params(alt.ast);
      r.value = eval_expr(*alt.ast.root, frame);
      r.ok = true;
    } catch (const NodeEvalError& dep_err) {
      // a dependency already failed; keep the root attribution
      r.ok = false;
      r.fail_alt = dep_err.alt_id();
      r.fail_node = dep_err.node_name();
      r.error = strip_prefix(dep_err.what());
    } catch (const EvalError& err) {
      r.ok = false;
      r.fail_alt = alt.id;
      r.fail_node = name;
      r.error = err.what();
    }
    return r;
  }

  static std::string strip_prefix(const std::string& what) {
    const auto pos = what.find("): ");
    return pos == std::string::npos ? what : what.substr(pos + 3);
  }

  /// Parameters of non-callable alternatives bind dataset inputs by name
  /// ("globals" is allowed as a conventional parameter; the store is always
  /// addressed via globals["..."], so the slot is never read).
  Frame bind_node_params(const ExprAst& ast) {
    Frame frame;
    frame.values.resize(ast.params.size());
    for (std::size_t i = 0; i < ast.params.size(); ++i) {
      const std::string& p = ast.params[i];
      if (p == "globals") continue;
      if (!dataset_.has(p))
        throw EvalError("parameter '" + p + "' does not name a dataset input");
      frame.values[i] = borrow(dataset_.tensor(p));
    }
    return frame;
  }

  static TensorPtr borrow(const Tensor& t) {
    // non-owning: dataset, globals and cache all outlive the evaluation
    return TensorPtr(std::shared_ptr<void>(), &t);
  }

  TensorPtr eval_expr(const Expr& e, const Frame& frame) {
    switch (e.kind) {
      case ExprKind::Literal:
        return std::make_shared<Tensor>(
            Tensor::scalar(static_cast<float>(e.literal)));
      case ExprKind::Param: {
        const TensorPtr& v = frame.values.at(e.param_index);
        if (!v) throw EvalError("parameter '" + e.name + "' is not bound");
        return v;
      }
      case ExprKind::Ident: {
        // node names shadow dataset inputs
        if (graph_.has_node(e.name)) return node_value(e.name);
        if (dataset_.has(e.name)) return borrow(dataset_.tensor(e.name));
        throw EvalError("unknown identifier '" + e.name + "'");
      }
      case ExprKind::GlobalsRef:
        return borrow(graph_.globals.value(e.name));
      case ExprKind::Call: {
        if (!graph_.has_node(e.name))
          throw EvalError("unknown callable '" + e.name + "'");
        const Alternative& fn = selected(e.name);
        if (fn.ast.params.size() != e.children.size())
          throw EvalError("callable '" + e.name + "' takes " +
                          std::to_string(fn.ast.params.size()) +
                          " argument(s), got " +
                          std::to_string(e.children.size()));
        Frame inner;
        inner.values.reserve(e.children.size());
        for (const auto& c : e.children)
          inner.values.push_back(eval_expr(*c, frame));
        try {
          return eval_expr(*fn.ast.root, inner);
        } catch (const NodeEvalError&) {
          throw;
        } catch (const EvalError& err) {
          // attribute failures inside a callable body to that alternative
          throw NodeEvalError(fn.id, e.name, err.what());
        }
      }
      case ExprKind::Unary: {
        TensorPtr x = eval_expr(*e.children[0], frame);
        return std::make_shared<Tensor>(
            kern::ew_unary(*x, [](float v) { return -v; }));
      }
      case ExprKind::Binary: {
        TensorPtr a = eval_expr(*e.children[0], frame);
        TensorPtr b = eval_expr(*e.children[1], frame);
        return std::make_shared<Tensor>(kern::binary_op(e.op, *a, *b));
      }
      case ExprKind::BuiltinCall: {
        std::vector<Tensor> args;
        args.reserve(e.children.size());
        for (const auto& c : e.children) args.push_back(*eval_expr(*c, frame));
        return std::make_shared<Tensor>(
            kern::apply_builtin(e.builtin, args, e.axis));
      }
    }
    throw EvalError("bad expression node");
  }

  /// Multi-alt nodes among the transitive dependencies of the *selected*
  /// alternatives (exact subpath identity, not the union over alternatives).
  const std::set<std::string>& selected_ancestors(const std::string& name) {
    auto it = anc_.find(name);
    if (it != anc_.end()) return it->second;
    std::set<std::string> acc;
    const Alternative& alt = selected(name);
    for (const auto& dep : graph_.alt_node_deps(alt)) {
      acc.insert(dep);
      const auto& sub = selected_ancestors(dep);
      acc.insert(sub.begin(), sub.end());
    }
    return anc_.emplace(name, std::move(acc)).first->second;
  }

  const Graph& graph_;
  const Configuration& config_;
  const Dataset& dataset_;
  EvalCache* cache_;
  long* eval_counter_;
  std::map<std::string, Result> local_;
  std::map<std::uint64_t, Result> alt_local_;
  std::map<std::string, std::set<std::string>> anc_;
};

}  // namespace evo
