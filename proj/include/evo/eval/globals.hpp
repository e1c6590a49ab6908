#pragma once

#include <map>
#include <string>
#include <vector>

#include "evo/eval/builtin_ops.hpp"
#include "evo/expr/parser.hpp"
#include "evo/rng.hpp"
#include "evo/tensor.hpp"

namespace evo {

struct GlobalsEntry {
  std::string init_source;
  Tensor value;
  bool initialized = false;
  bool trained = false;
};

/// Append-only store of persistent trainable tensors. Mutation may add
/// entries; only training (phase 1) rewrites values.
class GlobalsStore {
public:
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t size() const { return order_.size(); }
  const std::vector<std::string>& names() const { return order_; }

  const GlobalsEntry& entry(const std::string& name) const {
    return entries_.at(checked(name));
  }

  const Tensor& value(const std::string& name) const {
    const GlobalsEntry& e = entries_.at(checked(name));
    if (!e.initialized)
      throw EvalError("globals entry '" + name + "' used before initialization");
    return e.value;
  }

  void append(const std::string& name, const std::string& init_source) {
    if (has(name))
      throw std::invalid_argument("append-only violation: globals entry '" +
                                  name + "' already exists");
    parse_init_expr(init_source);  // validate eagerly
    index_[name] = entries_.size();
    order_.push_back(name);
    entries_.push_back(GlobalsEntry{init_source, Tensor{}, false, false});
  }

  void remove(const std::string& name) {
    const std::size_t i = checked(name);
    entries_.erase(entries_.begin() + static_cast<long>(i));
    order_.erase(order_.begin() + static_cast<long>(i));
    index_.clear();
    for (std::size_t k = 0; k < order_.size(); ++k) index_[order_[k]] = k;
  }

  /// Training writes values in place; the trained flag survives migration.
  void set_value(const std::string& name, Tensor v, bool trained = true) {
    GlobalsEntry& e = entries_[checked(name)];
    e.value = std::move(v);
    e.initialized = true;
    e.trained = e.trained || trained;
  }

  /// Evaluates init expressions for entries that do not have a value yet.
  /// Each entry draws from its own stream seeded by (run_seed, name), so
  /// initialization is independent of append order.
  void ensure_initialized(std::uint64_t run_seed) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].initialized) continue;
      Rng rng(run_seed ^ fnv1a64(order_[i]));
      entries_[i].value =
          eval_init(*parse_init_expr(entries_[i].init_source), rng);
      entries_[i].initialized = true;
    }
  }

  static Tensor eval_init(const Expr& e, Rng& rng) {
    switch (e.kind) {
      case ExprKind::Literal:
        return Tensor::scalar(static_cast<float>(e.literal));
      case ExprKind::Unary: {
        Tensor x = eval_init(*e.children[0], rng);
        for (std::size_t i = 0; i < x.size(); ++i) x.at(i) = -x.at(i);
        return x;
      }
      case ExprKind::Binary: {
        Tensor a = eval_init(*e.children[0], rng);
        Tensor b = eval_init(*e.children[1], rng);
        return kern::binary_op(e.op, a, b);
      }
      case ExprKind::BuiltinCall: {
        const BuiltinInfo& info = builtin_info(e.builtin);
        if (info.init_only) {
          std::vector<std::size_t> dims;
          std::size_t first_dim_arg = e.builtin == Builtin::Full ? 1 : 0;
          float fill = 0.0f;
          if (e.builtin == Builtin::Full) {
            Tensor v = eval_init(*e.children[0], rng);
            if (!v.is_scalar())
              throw EvalError("full() fill value must be a scalar");
            fill = v.at(0);
          }
          for (std::size_t i = first_dim_arg; i < e.children.size(); ++i) {
            if (e.children[i]->kind != ExprKind::Literal ||
                e.children[i]->literal < 0 ||
                e.children[i]->literal !=
                    static_cast<long>(e.children[i]->literal))
              throw EvalError("constructor dimensions must be non-negative "
                              "integer literals");
            dims.push_back(static_cast<std::size_t>(e.children[i]->literal));
          }
          Tensor t(dims);
          switch (e.builtin) {
            case Builtin::Randn:
              for (std::size_t i = 0; i < t.size(); ++i)
                t.at(i) = static_cast<float>(rng.next_gaussian());
              break;
            case Builtin::Zeros:
              break;
            case Builtin::Ones:
              for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = 1.0f;
              break;
            case Builtin::Full:
              for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = fill;
              break;
            default:
              break;
          }
          return t;
        }
        std::vector<Tensor> args;
        args.reserve(e.children.size());
        for (const auto& c : e.children) args.push_back(eval_init(*c, rng));
        return kern::apply_builtin(e.builtin, args, e.axis);
      }
      case ExprKind::Ident:
        throw EvalError("unknown identifier '" + e.name +
                        "' in globals initializer");
      default:
        throw EvalError("expression not allowed in a globals initializer");
    }
  }

private:
  std::size_t checked(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw EvalError("unknown globals entry '" + name + "'");
    return it->second;
  }

  std::vector<std::string> order_;
  std::vector<GlobalsEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace evo
