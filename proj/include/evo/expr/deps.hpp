#pragma once

#include <set>
#include <string>

#include "evo/expr/ast.hpp"

namespace evo {

/// Identifiers appearing in an AST, classified and deduplicated. Bound
/// parameters are not dependencies.
struct DependencySet {
  std::set<std::string> inputs;
  std::set<std::string> nodes;      // free identifiers that are not inputs
  std::set<std::string> globals;    // keys of globals["..."] subscripts
  std::set<std::string> callables;  // @-prefixed invocation targets

  bool empty() const {
    return inputs.empty() && nodes.empty() && globals.empty() &&
           callables.empty();
  }
};

namespace detail {

inline void collect_deps(const Expr& e, const std::set<std::string>& inputs,
                         DependencySet& out) {
  switch (e.kind) {
    case ExprKind::Ident:
      if (inputs.count(e.name))
        out.inputs.insert(e.name);
      else
        out.nodes.insert(e.name);
      break;
    case ExprKind::GlobalsRef:
      out.globals.insert(e.name);
      break;
    case ExprKind::Call:
      out.callables.insert(e.name);
      break;
    default:
      break;
  }
  for (const auto& c : e.children) collect_deps(*c, inputs, out);
}

}  // namespace detail

/// Classifies every free identifier in the AST against the declared input
/// names; anything else is assumed to name a node (existence is checked
/// during graph validation).
inline DependencySet dependencies(const ExprAst& ast,
                                  const std::set<std::string>& declared_inputs) {
  DependencySet out;
  detail::collect_deps(*ast.root, declared_inputs, out);
  return out;
}

inline DependencySet dependencies(const ExprPtr& root,
                                  const std::set<std::string>& declared_inputs) {
  DependencySet out;
  detail::collect_deps(*root, declared_inputs, out);
  return out;
}

}  // namespace evo
