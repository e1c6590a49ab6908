#pragma once

#include <map>
#include <string>
#include <vector>

#include "evo/eval/autodiff.hpp"
#include "evo/eval/dataset.hpp"
#include "evo/graph/graph.hpp"

namespace evo {

/// Evaluates graph expressions onto a Tape under one configuration, in
/// float64, with globals entries as gradient leaves. Node values are
/// memoized per name so shared subgraphs appear once and adjoints
/// accumulate through them.
class TapeEval {
public:
  TapeEval(Tape& tape, const Graph& graph, const Configuration& config,
           const Dataset& dataset,
           const std::map<std::string, DTensor>* globals_override = nullptr)
      : tape_(tape), graph_(graph), config_(config), dataset_(dataset),
        override_(globals_override) {}

  /// Tape id of the globals leaf (creating it on first use).
  int globals_leaf(const std::string& name) {
    auto it = globals_slots_.find(name);
    if (it != globals_slots_.end()) return it->second;
    DTensor v;
    if (override_ && override_->count(name)) {
      v = override_->at(name);
    } else {
      v = DTensor::from(graph_.globals.value(name));
    }
    const int id = tape_.leaf(std::move(v), /*needs_grad=*/true);
    globals_slots_[name] = id;
    return id;
  }

  const std::map<std::string, int>& globals_slots() const {
    return globals_slots_;
  }

  int eval_node(const std::string& name) {
    auto it = node_memo_.find(name);
    if (it != node_memo_.end()) return it->second;
    const Node& n = graph_.node(name);
    if (n.kind == NodeKind::Callable)
      throw EvalError("callable '" + name + "' cannot be used as a value");
    const Alternative& alt = selected(name);
    const int id = eval_body(alt.ast);
    node_memo_[name] = id;
    return id;
  }

  int eval_output_alt(const Alternative& alt) { return eval_body(alt.ast); }

  /// Body evaluation with by-name parameter binding (non-callable nodes).
  int eval_body(const ExprAst& ast) {
    std::vector<int> frame(ast.params.size(), -1);
    for (std::size_t i = 0; i < ast.params.size(); ++i) {
      const std::string& p = ast.params[i];
      if (p == "globals") continue;
      if (!dataset_.has(p))
        throw EvalError("parameter '" + p + "' does not name a dataset input");
      frame[i] = input_leaf(p);
    }
    return eval_expr(*ast.root, frame);
  }

  int input_leaf(const std::string& name) {
    auto it = input_memo_.find(name);
    if (it != input_memo_.end()) return it->second;
    const int id =
        tape_.leaf(DTensor::from(dataset_.tensor(name)), /*needs_grad=*/false);
    input_memo_[name] = id;
    return id;
  }

  int eval_expr(const Expr& e, const std::vector<int>& frame) {
    switch (e.kind) {
      case ExprKind::Literal:
        return tape_.leaf(DTensor::scalar(e.literal), false);
      case ExprKind::Param: {
        const int id = frame.at(e.param_index);
        if (id < 0)
          throw EvalError("parameter '" + e.name + "' is not bound");
        return id;
      }
      case ExprKind::Ident:
        if (graph_.has_node(e.name)) return eval_node(e.name);
        if (dataset_.has(e.name)) return input_leaf(e.name);
        throw EvalError("unknown identifier '" + e.name + "'");
      case ExprKind::GlobalsRef:
        return globals_leaf(e.name);
      case ExprKind::Call: {
        if (!graph_.has_node(e.name))
          throw EvalError("unknown callable '" + e.name + "'");
        const Alternative& fn = selected(e.name);
        if (fn.ast.params.size() != e.children.size())
          throw EvalError("callable '" + e.name + "' takes " +
                          std::to_string(fn.ast.params.size()) +
                          " argument(s), got " +
                          std::to_string(e.children.size()));
        std::vector<int> inner;
        inner.reserve(e.children.size());
        for (const auto& c : e.children)
          inner.push_back(eval_expr(*c, frame));
        return eval_expr(*fn.ast.root, inner);
      }
      case ExprKind::Unary:
        return tape_.unary_neg(eval_expr(*e.children[0], frame));
      case ExprKind::Binary:
        return tape_.binary(e.op, eval_expr(*e.children[0], frame),
                            eval_expr(*e.children[1], frame));
      case ExprKind::BuiltinCall: {
        std::vector<int> args;
        args.reserve(e.children.size());
        for (const auto& c : e.children)
          args.push_back(eval_expr(*c, frame));
        return tape_.builtin(e.builtin, std::move(args), e.axis);
      }
    }
    throw EvalError("bad expression node");
  }

private:
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
      throw EvalError("configuration selects missing alternative of '" +
                      name + "'");
    return *alt;
  }

  Tape& tape_;
  const Graph& graph_;
  const Configuration& config_;
  const Dataset& dataset_;
  const std::map<std::string, DTensor>* override_;
  std::map<std::string, int> globals_slots_;
  std::map<std::string, int> node_memo_;
  std::map<std::string, int> input_memo_;
};

/// d(loss)/d(entry) for every globals entry, evaluated along the selected
/// path. The loss is a scalar-valued expression over inputs, nodes, labels
/// and globals. Entries the path never touches map to zero arrays of the
/// entry's shape.
inline std::map<std::string, DTensor> grad_globals(const Graph& graph,
                                                   const Configuration& config,
                                                   const Dataset& dataset,
                                                   const ExprAst& loss) {
  Tape tape;
  TapeEval ev(tape, graph, config, dataset);
  const int loss_id = ev.eval_body(loss);
  if (tape.value(loss_id).size() != 1)
    throw EvalError("loss expression must evaluate to a scalar");
  const auto adj = tape.backward(loss_id);
  std::map<std::string, DTensor> grads;
  for (const auto& name : graph.globals.names()) {
    auto it = ev.globals_slots().find(name);
    if (it != ev.globals_slots().end() && adj[it->second].size() != 0) {
      grads[name] = adj[it->second];
    } else {
      grads[name] = DTensor(DTensor::from(graph.globals.value(name)).shape(), 0.0);
    }
  }
  return grads;
}

}  // namespace evo
