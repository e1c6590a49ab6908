#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace evo {

enum class Builtin : std::uint8_t {
  // elementwise
  Abs, Exp, Log, Sqrt, Tanh, Sigmoid, Relu, Silu, Sign,
  Clamp, Where, OnesLike, ZerosLike, Min2, Max2,
  // reductions over a named axis
  Sum, Mean, Var, Std, Max, Min, Median, Quantile,
  // structural
  Matmul, Concat, Slice, Diff, Cumsum, RfftPower,
  // globals-initializer constructors (rejected in node alternatives)
  Randn, Zeros, Ones, Full,
};

enum class AxisRule : std::uint8_t { Forbidden, Required };

struct BuiltinInfo {
  std::string_view name;
  Builtin id;
  int min_args;
  int max_args;  // -1 = unbounded
  AxisRule axis;
  bool init_only;
};

inline constexpr std::array<BuiltinInfo, 33> kBuiltins{{
    {"abs", Builtin::Abs, 1, 1, AxisRule::Forbidden, false},
    {"exp", Builtin::Exp, 1, 1, AxisRule::Forbidden, false},
    {"log", Builtin::Log, 1, 1, AxisRule::Forbidden, false},
    {"sqrt", Builtin::Sqrt, 1, 1, AxisRule::Forbidden, false},
    {"tanh", Builtin::Tanh, 1, 1, AxisRule::Forbidden, false},
    {"sigmoid", Builtin::Sigmoid, 1, 1, AxisRule::Forbidden, false},
    {"relu", Builtin::Relu, 1, 1, AxisRule::Forbidden, false},
    {"silu", Builtin::Silu, 1, 1, AxisRule::Forbidden, false},
    {"sign", Builtin::Sign, 1, 1, AxisRule::Forbidden, false},
    {"clamp", Builtin::Clamp, 2, 3, AxisRule::Forbidden, false},
    {"where", Builtin::Where, 3, 3, AxisRule::Forbidden, false},
    {"ones_like", Builtin::OnesLike, 1, 1, AxisRule::Forbidden, false},
    {"zeros_like", Builtin::ZerosLike, 1, 1, AxisRule::Forbidden, false},
    {"min2", Builtin::Min2, 2, 2, AxisRule::Forbidden, false},
    {"max2", Builtin::Max2, 2, 2, AxisRule::Forbidden, false},
    {"sum", Builtin::Sum, 1, 1, AxisRule::Required, false},
    {"mean", Builtin::Mean, 1, 1, AxisRule::Required, false},
    {"var", Builtin::Var, 1, 1, AxisRule::Required, false},
    {"std", Builtin::Std, 1, 1, AxisRule::Required, false},
    {"max", Builtin::Max, 1, 1, AxisRule::Required, false},
    {"min", Builtin::Min, 1, 1, AxisRule::Required, false},
    {"median", Builtin::Median, 1, 1, AxisRule::Required, false},
    {"quantile", Builtin::Quantile, 2, 2, AxisRule::Required, false},
    {"matmul", Builtin::Matmul, 2, 2, AxisRule::Forbidden, false},
    {"concat", Builtin::Concat, 1, -1, AxisRule::Required, false},
    {"slice", Builtin::Slice, 3, 3, AxisRule::Required, false},
    {"diff", Builtin::Diff, 1, 1, AxisRule::Required, false},
    {"cumsum", Builtin::Cumsum, 1, 1, AxisRule::Required, false},
    {"rfft_power", Builtin::RfftPower, 1, 1, AxisRule::Required, false},
    {"randn", Builtin::Randn, 1, -1, AxisRule::Forbidden, true},
    {"zeros", Builtin::Zeros, 1, -1, AxisRule::Forbidden, true},
    {"ones", Builtin::Ones, 1, -1, AxisRule::Forbidden, true},
    {"full", Builtin::Full, 2, -1, AxisRule::Forbidden, true},
}};

inline const BuiltinInfo* find_builtin(std::string_view name) {
  for (const auto& b : kBuiltins)
    if (b.name == name) return &b;
  return nullptr;
}

inline const BuiltinInfo& builtin_info(Builtin id) {
  for (const auto& b : kBuiltins)
    if (b.id == id) return b;
  return kBuiltins[0];  // unreachable
}

}  // namespace evo
