#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace evo {

/// Dense row-major tensor. Rank 0 is a scalar (one element). Feature
/// evaluation runs in float32 (Tensor); gradient work and the solvers run in
/// float64 (DTensor).
template <typename T>
class TensorT {
public:
  TensorT() = default;

  explicit TensorT(std::vector<std::size_t> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(count_of(shape_), fill) {}

  TensorT(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count_of(shape_))
      throw std::invalid_argument("tensor data size does not match shape");
  }

  static TensorT scalar(T v) { return TensorT({}, {v}); }

  template <typename U>
  static TensorT from(const TensorT<U>& o) {
    TensorT t(o.shape());
    for (std::size_t i = 0; i < o.size(); ++i)
      t.at(i) = static_cast<T>(o.at(i));
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool is_scalar() const { return shape_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T& at(std::size_t i) { return data_[i]; }
  T at(std::size_t i) const { return data_[i]; }

  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  /// Product of dims after `axis`.
  std::size_t inner_stride(std::size_t axis) const {
    std::size_t s = 1;
    for (std::size_t i = axis + 1; i < shape_.size(); ++i) s *= shape_[i];
    return s;
  }

  /// Product of dims before `axis`.
  std::size_t outer_count(std::size_t axis) const {
    std::size_t s = 1;
    for (std::size_t i = 0; i < axis && i < shape_.size(); ++i) s *= shape_[i];
    return s;
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  static std::size_t count_of(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }

  static std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    s += ")";
    return s;
  }

private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using DTensor = TensorT<double>;

/// Evaluation-time failure: shape mismatch, domain error, unbound name.
/// Carries only the message; callers attach alternative attribution.
class EvalError : public std::runtime_error {
public:
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Trailing-axis broadcast of two shapes. Throws EvalError on mismatch.
inline std::vector<std::size_t> broadcast_shape(
    const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const std::size_t ra = a.size(), rb = b.size();
  const std::size_t r = ra > rb ? ra : rb;
  std::vector<std::size_t> out(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - ra ? 1 : a[i - (r - ra)];
    const std::size_t db = i < r - rb ? 1 : b[i - (r - rb)];
    if (da != db && da != 1 && db != 1)
      throw EvalError("shape mismatch: cannot broadcast " +
                      Tensor::shape_str(a) + " with " + Tensor::shape_str(b));
    out[i] = da > db ? da : db;
  }
  return out;
}

/// Maps flat indices in a broadcast result shape back to flat indices in a
/// (possibly lower-rank, size-1-padded) source tensor.
class BroadcastIndexer {
public:
  BroadcastIndexer(const std::vector<std::size_t>& src,
                   const std::vector<std::size_t>& dst) {
    const std::size_t r = dst.size();
    const std::size_t pad = r - src.size();
    dst_strides_.resize(r);
    src_strides_.resize(r);
    std::size_t ds = 1;
    for (std::size_t i = r; i-- > 0;) {
      dst_strides_[i] = ds;
      ds *= dst[i];
    }
    std::size_t ss = 1;
    for (std::size_t i = r; i-- > 0;) {
      const std::size_t sd = i < pad ? 1 : src[i - pad];
      src_strides_[i] = sd == 1 ? 0 : ss;
      ss *= sd;
    }
    trivial_ = src_strides_ == dst_strides_;
  }

  bool trivial() const { return trivial_; }

  std::size_t map(std::size_t flat) const {
    if (trivial_) return flat;
    std::size_t out = 0;
    for (std::size_t i = 0; i < dst_strides_.size(); ++i) {
      const std::size_t idx = flat / dst_strides_[i];
      flat -= idx * dst_strides_[i];
      out += idx * src_strides_[i];
    }
    return out;
  }

private:
  std::vector<std::size_t> dst_strides_;
  std::vector<std::size_t> src_strides_;
  bool trivial_ = false;
};

}  // namespace evo
