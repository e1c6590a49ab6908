#pragma once

#include <vector>

#include "evo/eval/kernels.hpp"
#include "evo/expr/builtins.hpp"

namespace evo::kern {

/// Forward application of a non-constructor builtin to already-evaluated
/// arguments. Throws EvalError for domain violations so failures attach to
/// the offending alternative.
template <typename T>
TensorT<T> apply_builtin(Builtin b, const std::vector<TensorT<T>>& args,
                         std::optional<long> axis,
                         std::vector<double>* saved_re = nullptr,
                         std::vector<double>* saved_im = nullptr) {
  using TT = TensorT<T>;
  switch (b) {
    case Builtin::Abs:
      return ew_unary(args[0], [](T v) { return std::abs(v); });
    case Builtin::Exp:
      return ew_unary(args[0], [](T v) { return std::exp(v); });
    case Builtin::Log:
      for (std::size_t i = 0; i < args[0].size(); ++i)
        if (args[0].at(i) <= T(0))
          throw EvalError("log of non-positive value");
      return ew_unary(args[0], [](T v) { return std::log(v); });
    case Builtin::Sqrt:
      for (std::size_t i = 0; i < args[0].size(); ++i)
        if (args[0].at(i) < T(0)) throw EvalError("sqrt of negative value");
      return ew_unary(args[0], [](T v) { return std::sqrt(v); });
    case Builtin::Tanh:
      return ew_unary(args[0], [](T v) { return std::tanh(v); });
    case Builtin::Sigmoid:
      return ew_unary(args[0], [](T v) {
        return static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
      });
    case Builtin::Relu:
      return ew_unary(args[0], [](T v) { return v > T(0) ? v : T(0); });
    case Builtin::Silu:
      return ew_unary(args[0], [](T v) {
        return static_cast<T>(static_cast<double>(v) /
                              (1.0 + std::exp(-static_cast<double>(v))));
      });
    case Builtin::Sign:
      return ew_unary(args[0], [](T v) {
        return v > T(0) ? T(1) : v < T(0) ? T(-1) : T(0);
      });
    case Builtin::Clamp: {
      TT lo_clamped = ew_binary(args[0], args[1],
                                [](T v, T lo) { return v < lo ? lo : v; });
      if (args.size() == 2) return lo_clamped;
      return ew_binary(lo_clamped, args[2],
                       [](T v, T hi) { return v > hi ? hi : v; });
    }
    case Builtin::Where: {
      auto shape = broadcast_shape(
          args[0].shape(), broadcast_shape(args[1].shape(), args[2].shape()));
      TT y(shape);
      BroadcastIndexer ic(args[0].shape(), shape), ia(args[1].shape(), shape),
          ib(args[2].shape(), shape);
      for (std::size_t i = 0; i < y.size(); ++i)
        y.at(i) = args[0].at(ic.map(i)) != T(0) ? args[1].at(ia.map(i))
                                                : args[2].at(ib.map(i));
      return y;
    }
    case Builtin::OnesLike:
      return TT(args[0].shape(), T(1));
    case Builtin::ZerosLike:
      return TT(args[0].shape(), T(0));
    case Builtin::Min2:
      return ew_binary(args[0], args[1],
                       [](T a, T bb) { return a < bb ? a : bb; });
    case Builtin::Max2:
      return ew_binary(args[0], args[1],
                       [](T a, T bb) { return a > bb ? a : bb; });
    case Builtin::Sum: return reduce(Reduce::Sum, args[0], *axis);
    case Builtin::Mean: return reduce(Reduce::Mean, args[0], *axis);
    case Builtin::Var: return reduce(Reduce::Var, args[0], *axis);
    case Builtin::Std: return reduce(Reduce::Std, args[0], *axis);
    case Builtin::Max: return reduce(Reduce::Max, args[0], *axis);
    case Builtin::Min: return reduce(Reduce::Min, args[0], *axis);
    case Builtin::Median: return reduce(Reduce::Median, args[0], *axis);
    case Builtin::Quantile: {
      if (!args[1].is_scalar())
        throw EvalError("quantile q must be a scalar");
      return quantile(args[0], static_cast<double>(args[1].at(0)), *axis);
    }
    case Builtin::Matmul: return matmul(args[0], args[1]);
    case Builtin::Concat: return concat(args, *axis);
    case Builtin::Slice: {
      if (!args[1].is_scalar() || !args[2].is_scalar())
        throw EvalError("slice bounds must be scalar literals");
      return slice(args[0], static_cast<long>(args[1].at(0)),
                   static_cast<long>(args[2].at(0)), *axis);
    }
    case Builtin::Diff: return diff(args[0], *axis);
    case Builtin::Cumsum: return cumsum(args[0], *axis);
    case Builtin::RfftPower:
      return rfft_power(args[0], *axis, saved_re, saved_im);
    case Builtin::Randn:
    case Builtin::Zeros:
    case Builtin::Ones:
    case Builtin::Full:
      throw EvalError("constructor builtin outside globals initializer");
  }
  throw EvalError("bad builtin");
}

}  // namespace evo::kern
