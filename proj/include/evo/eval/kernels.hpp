#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "evo/expr/ast.hpp"
#include "evo/tensor.hpp"

namespace evo::kern {

template <typename T, typename F>
TensorT<T> ew_unary(const TensorT<T>& x, F f) {
  TensorT<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y.at(i) = f(x.at(i));
  return y;
}

template <typename T, typename F>
TensorT<T> ew_binary(const TensorT<T>& a, const TensorT<T>& b, F f) {
  auto shape = broadcast_shape(a.shape(), b.shape());
  TensorT<T> y(shape);
  BroadcastIndexer ia(a.shape(), shape), ib(b.shape(), shape);
  for (std::size_t i = 0; i < y.size(); ++i)
    y.at(i) = f(a.at(ia.map(i)), b.at(ib.map(i)));
  return y;
}

template <typename T>
TensorT<T> binary_op(BinOp op, const TensorT<T>& a, const TensorT<T>& b) {
  switch (op) {
    case BinOp::Add: return ew_binary(a, b, [](T x, T y) { return x + y; });
    case BinOp::Sub: return ew_binary(a, b, [](T x, T y) { return x - y; });
    case BinOp::Mul: return ew_binary(a, b, [](T x, T y) { return x * y; });
    case BinOp::Div: return ew_binary(a, b, [](T x, T y) { return x / y; });
    case BinOp::Pow:
      return ew_binary(a, b, [](T x, T y) { return std::pow(x, y); });
    case BinOp::Eq:
      return ew_binary(a, b, [](T x, T y) { return T(x == y ? 1 : 0); });
    case BinOp::Ne:
      return ew_binary(a, b, [](T x, T y) { return T(x != y ? 1 : 0); });
    case BinOp::Lt:
      return ew_binary(a, b, [](T x, T y) { return T(x < y ? 1 : 0); });
    case BinOp::Le:
      return ew_binary(a, b, [](T x, T y) { return T(x <= y ? 1 : 0); });
    case BinOp::Gt:
      return ew_binary(a, b, [](T x, T y) { return T(x > y ? 1 : 0); });
    case BinOp::Ge:
      return ew_binary(a, b, [](T x, T y) { return T(x >= y ? 1 : 0); });
  }
  throw EvalError("bad binary op");
}

/// Resolves a possibly negative axis against `rank`; throws if out of range.
inline std::size_t resolve_axis(long axis, std::size_t rank,
                                const char* what) {
  long a = axis;
  if (a < 0) a += static_cast<long>(rank);
  if (a < 0 || a >= static_cast<long>(rank))
    throw EvalError(std::string(what) + ": axis " + std::to_string(axis) +
                    " out of range for rank " + std::to_string(rank));
  return static_cast<std::size_t>(a);
}

namespace detail {

template <typename T>
std::vector<std::size_t> reduced_shape(const TensorT<T>& x, std::size_t ax) {
  std::vector<std::size_t> s = x.shape();
  s.erase(s.begin() + static_cast<long>(ax));
  return s;
}

}  // namespace detail

enum class Reduce { Sum, Mean, Var, Std, Max, Min, Median };

template <typename T>
TensorT<T> reduce(Reduce op, const TensorT<T>& x, long axis_raw) {
  if (x.rank() == 0) throw EvalError("cannot reduce a scalar");
  const std::size_t ax = resolve_axis(axis_raw, x.rank(), "reduce");
  const std::size_t n = x.dim(ax);
  if (n == 0) throw EvalError("cannot reduce over empty axis");
  const std::size_t outer = x.outer_count(ax);
  const std::size_t inner = x.inner_stride(ax);
  TensorT<T> y(detail::reduced_shape(x, ax));
  std::vector<T> lane(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      for (std::size_t k = 0; k < n; ++k) lane[k] = x.at(base + k * inner);
      T r;
      switch (op) {
        case Reduce::Sum: {
          double acc = 0;
          for (T v : lane) acc += v;
          r = static_cast<T>(acc);
          break;
        }
        case Reduce::Mean: {
          double acc = 0;
          for (T v : lane) acc += v;
          r = static_cast<T>(acc / static_cast<double>(n));
          break;
        }
        case Reduce::Var:
        case Reduce::Std: {
          double mean = 0;
          for (T v : lane) mean += v;
          mean /= static_cast<double>(n);
          double acc = 0;
          for (T v : lane) acc += (v - mean) * (v - mean);
          const double var = acc / static_cast<double>(n);
          r = static_cast<T>(op == Reduce::Var ? var : std::sqrt(var));
          break;
        }
        case Reduce::Max:
          r = *std::max_element(lane.begin(), lane.end());
          break;
        case Reduce::Min:
          r = *std::min_element(lane.begin(), lane.end());
          break;
        case Reduce::Median: {
          std::vector<T> s = lane;
          std::sort(s.begin(), s.end());
          r = n % 2 ? s[n / 2]
                    : static_cast<T>((static_cast<double>(s[n / 2 - 1]) +
                                      s[n / 2]) /
                                     2.0);
          break;
        }
      }
      y.at(o * inner + in) = r;
    }
  }
  return y;
}

/// Sort-based quantile with linear interpolation between order statistics.
template <typename T>
TensorT<T> quantile(const TensorT<T>& x, double q, long axis_raw) {
  if (q < 0.0 || q > 1.0) throw EvalError("quantile q must be in [0,1]");
  const std::size_t ax = resolve_axis(axis_raw, x.rank(), "quantile");
  const std::size_t n = x.dim(ax);
  if (n == 0) throw EvalError("cannot take quantile over empty axis");
  const std::size_t outer = x.outer_count(ax);
  const std::size_t inner = x.inner_stride(ax);
  TensorT<T> y(detail::reduced_shape(x, ax));
  const double pos = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  std::vector<T> lane(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      for (std::size_t k = 0; k < n; ++k) lane[k] = x.at(base + k * inner);
      std::sort(lane.begin(), lane.end());
      const double a = lane[lo];
      const double b = lane[std::min(lo + 1, n - 1)];
      y.at(o * inner + in) = static_cast<T>(a + frac * (b - a));
    }
  return y;
}

template <typename T>
TensorT<T> diff(const TensorT<T>& x, long axis_raw) {
  const std::size_t ax = resolve_axis(axis_raw, x.rank(), "diff");
  const std::size_t n = x.dim(ax);
  if (n < 2) throw EvalError("diff requires axis length >= 2");
  const std::size_t outer = x.outer_count(ax);
  const std::size_t inner = x.inner_stride(ax);
  auto shape = x.shape();
  shape[ax] = n - 1;
  TensorT<T> y(shape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k + 1 < n; ++k)
      for (std::size_t in = 0; in < inner; ++in)
        y.at(o * (n - 1) * inner + k * inner + in) =
            x.at(o * n * inner + (k + 1) * inner + in) -
            x.at(o * n * inner + k * inner + in);
  return y;
}

template <typename T>
TensorT<T> cumsum(const TensorT<T>& x, long axis_raw) {
  const std::size_t ax = resolve_axis(axis_raw, x.rank(), "cumsum");
  const std::size_t n = x.dim(ax);
  const std::size_t outer = x.outer_count(ax);
  const std::size_t inner = x.inner_stride(ax);
  TensorT<T> y(x.shape());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      double acc = 0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += x.at(o * n * inner + k * inner + in);
        y.at(o * n * inner + k * inner + in) = static_cast<T>(acc);
      }
    }
  return y;
}

/// Pythonic slice along one axis: negative indices count from the end,
/// out-of-range bounds are clamped.
template <typename T>
TensorT<T> slice(const TensorT<T>& x, long start, long stop, long axis_raw) {
  const std::size_t ax = resolve_axis(axis_raw, x.rank(), "slice");
  const long n = static_cast<long>(x.dim(ax));
  long s = start < 0 ? start + n : start;
  long e = stop < 0 ? stop + n : stop;
  s = std::clamp(s, 0l, n);
  e = std::clamp(e, 0l, n);
  if (e < s) e = s;
  const std::size_t len = static_cast<std::size_t>(e - s);
  if (len == 0) throw EvalError("slice produced an empty axis");
  const std::size_t outer = x.outer_count(ax);
  const std::size_t inner = x.inner_stride(ax);
  auto shape = x.shape();
  shape[ax] = len;
  TensorT<T> y(shape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < len; ++k)
      std::copy_n(
          x.data() + o * n * inner + (static_cast<std::size_t>(s) + k) * inner,
          inner, y.data() + o * len * inner + k * inner);
  return y;
}

template <typename T>
TensorT<T> concat(const std::vector<TensorT<T>>& parts, long axis_raw) {
  if (parts.empty()) throw EvalError("concat of nothing");
  const std::size_t rank = parts[0].rank();
  if (rank == 0) throw EvalError("cannot concat scalars");
  const std::size_t ax = resolve_axis(axis_raw, rank, "concat");
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != rank)
      throw EvalError("concat rank mismatch");
    for (std::size_t d = 0; d < rank; ++d)
      if (d != ax && p.dim(d) != parts[0].dim(d))
        throw EvalError("concat shape mismatch off the concat axis");
    total += p.dim(ax);
  }
  auto shape = parts[0].shape();
  shape[ax] = total;
  TensorT<T> y(shape);
  const std::size_t outer = parts[0].outer_count(ax);
  const std::size_t inner = parts[0].inner_stride(ax);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t pn = p.dim(ax);
      std::copy_n(p.data() + o * pn * inner, pn * inner,
                  y.data() + o * total * inner + off * inner);
      off += pn;
    }
  }
  return y;
}

/// General matmul for ranks 1..3 with numpy promotion rules: 1-D operands
/// are promoted to a row/column, batch dims broadcast, promoted dims are
/// squeezed from the result.
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() == 0 || b.rank() == 0)
    throw EvalError("matmul operands must have rank >= 1");
  if (a.rank() > 3 || b.rank() > 3)
    throw EvalError("matmul supports rank <= 3 operands");
  // promote to (batch, m, k) x (batch, k, p)
  auto as = a.shape();
  auto bs = b.shape();
  const bool a_vec = as.size() == 1, b_vec = bs.size() == 1;
  if (a_vec) as.insert(as.begin(), 1);                 // (1, k)
  if (b_vec) bs.push_back(1);                          // (k, 1)
  const std::size_t ab = as.size() == 3 ? as[0] : 1;
  const std::size_t bb = bs.size() == 3 ? bs[0] : 1;
  const std::size_t m = as[as.size() - 2], k = as[as.size() - 1];
  const std::size_t k2 = bs[bs.size() - 2], p = bs[bs.size() - 1];
  if (k != k2)
    throw EvalError("matmul inner dimension mismatch: " +
                    Tensor::shape_str(a.shape()) + " @ " +
                    Tensor::shape_str(b.shape()));
  if (ab != bb && ab != 1 && bb != 1)
    throw EvalError("matmul batch dimension mismatch");
  const std::size_t batch = ab > bb ? ab : bb;

  std::vector<std::size_t> out_shape;
  if (as.size() == 3 || bs.size() == 3) out_shape.push_back(batch);
  if (!a_vec) out_shape.push_back(m);
  if (!b_vec) out_shape.push_back(p);
  TensorT<T> y(out_shape);

  const T* ad = a.data();
  const T* bd = b.data();
  T* yd = y.data();
  for (std::size_t bi = 0; bi < batch; ++bi) {
    const T* ap = ad + (ab == 1 ? 0 : bi) * m * k;
    const T* bp = bd + (bb == 1 ? 0 : bi) * k * p;
    T* yp = yd + bi * m * p;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        double acc = 0;
        for (std::size_t t = 0; t < k; ++t)
          acc += static_cast<double>(ap[i * k + t]) * bp[t * p + j];
        yp[i * p + j] = static_cast<T>(acc);
      }
  }
  return y;
}

/// Power spectrum |DFT|^2 of the real signal along `axis`; emits the
/// floor(n/2)+1 non-redundant bins. Direct O(n^2) transform.
template <typename T>
TensorT<T> rfft_power(const TensorT<T>& x, long axis_raw,
                      std::vector<double>* saved_re = nullptr,
                      std::vector<double>* saved_im = nullptr) {
  const std::size_t ax = resolve_axis(axis_raw, x.rank(), "rfft_power");
  const std::size_t n = x.dim(ax);
  if (n == 0) throw EvalError("rfft_power over empty axis");
  const std::size_t bins = n / 2 + 1;
  const std::size_t outer = x.outer_count(ax);
  const std::size_t inner = x.inner_stride(ax);
  auto shape = x.shape();
  shape[ax] = bins;
  TensorT<T> y(shape);
  if (saved_re) saved_re->assign(outer * inner * bins, 0.0);
  if (saved_im) saved_im->assign(outer * inner * bins, 0.0);
  const double w = 2.0 * 3.14159265358979323846 / static_cast<double>(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in)
      for (std::size_t kk = 0; kk < bins; ++kk) {
        double re = 0, im = 0;
        for (std::size_t t = 0; t < n; ++t) {
          const double v = x.at(o * n * inner + t * inner + in);
          const double ang = w * static_cast<double>(kk) *
                             static_cast<double>(t);
          re += v * std::cos(ang);
          im -= v * std::sin(ang);
        }
        const std::size_t oi = o * bins * inner + kk * inner + in;
        if (saved_re) (*saved_re)[oi] = re;
        if (saved_im) (*saved_im)[oi] = im;
        y.at(oi) = static_cast<T>(re * re + im * im);
      }
  return y;
}

template <typename T>
bool all_finite(const TensorT<T>& x) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(static_cast<double>(x.at(i)))) return false;
  return true;
}

}  // namespace evo::kern
