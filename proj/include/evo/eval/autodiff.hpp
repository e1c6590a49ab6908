#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evo/eval/builtin_ops.hpp"
#include "evo/eval/dataset.hpp"
#include "evo/graph/graph.hpp"

namespace evo {

/// Reverse-mode tape over float64 tensors. Gradient work (the refinement
/// phase and its probes) runs in double so finite-difference checks are
/// meaningful; frozen feature evaluation stays in float32 elsewhere.
class Tape {
public:
  struct Node {
    enum class Kind : std::uint8_t { Leaf, Unary, Binary, Builtin } kind;
    BinOp op{};
    Builtin builtin{};
    std::optional<long> axis;
    std::vector<int> in;
    DTensor value;
    bool needs_grad = false;
    // saved spectra for rfft_power backward
    std::shared_ptr<std::vector<double>> saved_re, saved_im;
  };

  int leaf(DTensor v, bool needs_grad) {
    Node n;
    n.kind = Node::Kind::Leaf;
    n.value = std::move(v);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int unary_neg(int x) {
    Node n;
    n.kind = Node::Kind::Unary;
    n.in = {x};
    n.value = kern::ew_unary(value(x), [](double v) { return -v; });
    n.needs_grad = nodes_[x].needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(BinOp op, int a, int b) {
    Node n;
    n.kind = Node::Kind::Binary;
    n.op = op;
    n.in = {a, b};
    n.value = kern::binary_op(op, value(a), value(b));
    const bool cmp = op == BinOp::Eq || op == BinOp::Ne || op == BinOp::Lt ||
                     op == BinOp::Le || op == BinOp::Gt || op == BinOp::Ge;
    n.needs_grad = !cmp && (nodes_[a].needs_grad || nodes_[b].needs_grad);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int builtin(Builtin b, std::vector<int> args, std::optional<long> axis) {
    Node n;
    n.kind = Node::Kind::Builtin;
    n.builtin = b;
    n.axis = axis;
    n.in = std::move(args);
    std::vector<DTensor> vals;
    vals.reserve(n.in.size());
    for (int id : n.in) vals.push_back(value(id));
    if (b == Builtin::RfftPower) {
      n.saved_re = std::make_shared<std::vector<double>>();
      n.saved_im = std::make_shared<std::vector<double>>();
      n.value = kern::apply_builtin(b, vals, axis, n.saved_re.get(),
                                    n.saved_im.get());
    } else {
      n.value = kern::apply_builtin(b, vals, axis);
    }
    n.needs_grad = false;
    if (b != Builtin::OnesLike && b != Builtin::ZerosLike &&
        b != Builtin::Sign)
      for (int id : n.in)
        n.needs_grad = n.needs_grad || nodes_[id].needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  const DTensor& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Adjoints of every node w.r.t. the scalar at loss_id. Nodes off the
  /// gradient path keep empty adjoints.
  std::vector<DTensor> backward(int loss_id) const {
    if (value(loss_id).size() != 1)
      throw EvalError("backward requires a scalar loss");
    std::vector<DTensor> adj(nodes_.size());
    adj[loss_id] = DTensor(value(loss_id).shape(), 1.0);
    for (int id = loss_id; id >= 0; --id) {
      const Node& n = nodes_[id];
      if (adj[id].size() == 0 || !n.needs_grad) continue;
      switch (n.kind) {
        case Node::Kind::Leaf:
          break;
        case Node::Kind::Unary:
          accumulate(adj, n.in[0],
                     kern::ew_unary(adj[id], [](double g) { return -g; }));
          break;
        case Node::Kind::Binary:
          backward_binary(n, adj[id], adj);
          break;
        case Node::Kind::Builtin:
          backward_builtin(n, adj[id], adj);
          break;
      }
    }
    return adj;
  }

private:
  /// Sums `g` over broadcast axes so it matches `shape`, then adds it to
  /// the destination adjoint.
  void accumulate(std::vector<DTensor>& adj, int dst, const DTensor& g) const {
    if (!nodes_[dst].needs_grad) return;
    const auto& shape = nodes_[dst].value.shape();
    DTensor reduced = reduce_to_shape(g, shape);
    if (adj[dst].size() == 0) {
      adj[dst] = std::move(reduced);
    } else {
      for (std::size_t i = 0; i < adj[dst].size(); ++i)
        adj[dst].at(i) += reduced.at(i);
    }
  }

  static DTensor reduce_to_shape(const DTensor& g,
                                 const std::vector<std::size_t>& shape) {
    if (g.shape() == shape) return g;
    DTensor out(shape, 0.0);
    BroadcastIndexer idx(shape, g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) out.at(idx.map(i)) += g.at(i);
    return out;
  }

  void backward_binary(const Node& n, const DTensor& g,
                       std::vector<DTensor>& adj) const {
    const DTensor& a = value(n.in[0]);
    const DTensor& b = value(n.in[1]);
    switch (n.op) {
      case BinOp::Add:
        accumulate(adj, n.in[0], g);
        accumulate(adj, n.in[1], g);
        break;
      case BinOp::Sub:
        accumulate(adj, n.in[0], g);
        accumulate(adj, n.in[1],
                   kern::ew_unary(g, [](double v) { return -v; }));
        break;
      case BinOp::Mul:
        accumulate(adj, n.in[0],
                   kern::binary_op(BinOp::Mul, g, b));
        accumulate(adj, n.in[1],
                   kern::binary_op(BinOp::Mul, g, a));
        break;
      case BinOp::Div: {
        accumulate(adj, n.in[0], kern::binary_op(BinOp::Div, g, b));
        DTensor gb = kern::ew_binary(
            kern::binary_op(BinOp::Mul, g, a), b,
            [](double ga_, double bv) { return -ga_ / (bv * bv); });
        accumulate(adj, n.in[1], gb);
        break;
      }
      case BinOp::Pow: {
        if (nodes_[n.in[0]].needs_grad) {
          DTensor da = kern::ew_binary(a, b, [](double av, double bv) {
            return bv * std::pow(av, bv - 1.0);
          });
          accumulate(adj, n.in[0], kern::binary_op(BinOp::Mul, g, da));
        }
        if (nodes_[n.in[1]].needs_grad) {
          for (std::size_t i = 0; i < a.size(); ++i)
            if (a.at(i) <= 0.0)
              throw EvalError(
                  "gradient of ** w.r.t. the exponent requires positive base");
          DTensor db = kern::ew_binary(n.value, a, [](double y, double av) {
            return y * std::log(av);
          });
          accumulate(adj, n.in[1], kern::binary_op(BinOp::Mul, g, db));
        }
        break;
      }
      default:
        break;  // comparisons: piecewise-constant selectors
    }
  }

  void backward_builtin(const Node& n, const DTensor& g,
                        std::vector<DTensor>& adj) const {
    const auto mul = [](const DTensor& x, const DTensor& y) {
      return kern::binary_op(BinOp::Mul, x, y);
    };
    switch (n.builtin) {
      case Builtin::Abs: {
        const DTensor& x = value(n.in[0]);
        accumulate(adj, n.in[0], mul(g, kern::ew_unary(x, [](double v) {
                     return v > 0 ? 1.0 : v < 0 ? -1.0 : 0.0;
                   })));
        break;
      }
      case Builtin::Exp:
        accumulate(adj, n.in[0], mul(g, n.value));
        break;
      case Builtin::Log:
        accumulate(adj, n.in[0], kern::binary_op(BinOp::Div, g, value(n.in[0])));
        break;
      case Builtin::Sqrt:
        accumulate(adj, n.in[0], kern::ew_binary(g, n.value, [](double gv, double y) {
                     return gv / (2.0 * y);
                   }));
        break;
      case Builtin::Tanh:
        accumulate(adj, n.in[0], kern::ew_binary(g, n.value, [](double gv, double y) {
                     return gv * (1.0 - y * y);
                   }));
        break;
      case Builtin::Sigmoid:
        accumulate(adj, n.in[0], kern::ew_binary(g, n.value, [](double gv, double y) {
                     return gv * y * (1.0 - y);
                   }));
        break;
      case Builtin::Relu:
        accumulate(adj, n.in[0],
                   kern::ew_binary(g, value(n.in[0]), [](double gv, double x) {
                     return x > 0 ? gv : 0.0;
                   }));
        break;
      case Builtin::Silu:
        accumulate(adj, n.in[0],
                   kern::ew_binary(g, value(n.in[0]), [](double gv, double x) {
                     const double s = 1.0 / (1.0 + std::exp(-x));
                     return gv * s * (1.0 + x * (1.0 - s));
                   }));
        break;
      case Builtin::Sign:
      case Builtin::OnesLike:
      case Builtin::ZerosLike:
        break;
      case Builtin::Clamp: {
        const DTensor& x = value(n.in[0]);
        const DTensor& lo = value(n.in[1]);
        // pass-through mask: strictly inside the clamp range
        // (subgradient 0 at exact boundaries)
        DTensor inside = kern::ew_binary(
            x, lo, [](double xv, double lov) { return xv > lov ? 1.0 : 0.0; });
        if (n.in.size() == 3) {
          const DTensor& hi = value(n.in[2]);
          inside = mul(inside, kern::ew_binary(x, hi, [](double xv, double hv) {
                         return xv < hv ? 1.0 : 0.0;
                       }));
          if (nodes_[n.in[2]].needs_grad)
            accumulate(adj, n.in[2],
                       mul(g, kern::ew_binary(x, hi, [](double xv, double hv) {
                             return xv > hv ? 1.0 : 0.0;
                           })));
        }
        accumulate(adj, n.in[0], mul(g, inside));
        if (nodes_[n.in[1]].needs_grad)
          accumulate(adj, n.in[1],
                     mul(g, kern::ew_binary(x, lo, [](double xv, double lov) {
                           return xv < lov ? 1.0 : 0.0;
                         })));
        break;
      }
      case Builtin::Where: {
        const DTensor& c = value(n.in[0]);
        accumulate(adj, n.in[1], mul(g, kern::ew_unary(c, [](double v) {
                     return v != 0.0 ? 1.0 : 0.0;
                   })));
        accumulate(adj, n.in[2], mul(g, kern::ew_unary(c, [](double v) {
                     return v == 0.0 ? 1.0 : 0.0;
                   })));
        break;
      }
      case Builtin::Min2:
        accumulate(adj, n.in[0],
                   mul(g, kern::binary_op(BinOp::Le, value(n.in[0]), value(n.in[1]))));
        accumulate(adj, n.in[1],
                   mul(g, kern::binary_op(BinOp::Lt, value(n.in[1]), value(n.in[0]))));
        break;
      case Builtin::Max2:
        accumulate(adj, n.in[0],
                   mul(g, kern::binary_op(BinOp::Ge, value(n.in[0]), value(n.in[1]))));
        accumulate(adj, n.in[1],
                   mul(g, kern::binary_op(BinOp::Gt, value(n.in[1]), value(n.in[0]))));
        break;
      case Builtin::Sum:
      case Builtin::Mean:
      case Builtin::Var:
      case Builtin::Std:
      case Builtin::Max:
      case Builtin::Min:
      case Builtin::Median:
      case Builtin::Quantile:
        backward_reduction(n, g, adj);
        break;
      case Builtin::Matmul:
        backward_matmul(n, g, adj);
        break;
      case Builtin::Concat: {
        const std::size_t ax =
            kern::resolve_axis(*n.axis, value(n.in[0]).rank(), "concat");
        std::size_t off = 0;
        for (int id : n.in) {
          const std::size_t len = value(id).dim(ax);
          accumulate(adj, id,
                     kern::slice(g, static_cast<long>(off),
                                 static_cast<long>(off + len),
                                 static_cast<long>(ax)));
          off += len;
        }
        break;
      }
      case Builtin::Slice: {
        const DTensor& x = value(n.in[0]);
        const std::size_t ax = kern::resolve_axis(*n.axis, x.rank(), "slice");
        const long nlen = static_cast<long>(x.dim(ax));
        long s = static_cast<long>(value(n.in[1]).at(0));
        if (s < 0) s += nlen;
        s = std::clamp(s, 0l, nlen);
        DTensor gx(x.shape(), 0.0);
        const std::size_t outer = x.outer_count(ax);
        const std::size_t inner = x.inner_stride(ax);
        const std::size_t len = g.dim(ax);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t k = 0; k < len; ++k)
            for (std::size_t in2 = 0; in2 < inner; ++in2)
              gx.at(o * x.dim(ax) * inner +
                    (static_cast<std::size_t>(s) + k) * inner + in2) =
                  g.at(o * len * inner + k * inner + in2);
        accumulate(adj, n.in[0], gx);
        break;
      }
      case Builtin::Diff: {
        const DTensor& x = value(n.in[0]);
        const std::size_t ax = kern::resolve_axis(*n.axis, x.rank(), "diff");
        const std::size_t nn = x.dim(ax);
        const std::size_t outer = x.outer_count(ax);
        const std::size_t inner = x.inner_stride(ax);
        DTensor gx(x.shape(), 0.0);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t k = 0; k + 1 < nn; ++k)
            for (std::size_t in2 = 0; in2 < inner; ++in2) {
              const double gv = g.at(o * (nn - 1) * inner + k * inner + in2);
              gx.at(o * nn * inner + (k + 1) * inner + in2) += gv;
              gx.at(o * nn * inner + k * inner + in2) -= gv;
            }
        accumulate(adj, n.in[0], gx);
        break;
      }
      case Builtin::Cumsum: {
        const DTensor& x = value(n.in[0]);
        const std::size_t ax = kern::resolve_axis(*n.axis, x.rank(), "cumsum");
        const std::size_t nn = x.dim(ax);
        const std::size_t outer = x.outer_count(ax);
        const std::size_t inner = x.inner_stride(ax);
        DTensor gx(x.shape(), 0.0);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t in2 = 0; in2 < inner; ++in2) {
            double acc = 0.0;
            for (std::size_t k = nn; k-- > 0;) {
              acc += g.at(o * nn * inner + k * inner + in2);
              gx.at(o * nn * inner + k * inner + in2) = acc;
            }
          }
        accumulate(adj, n.in[0], gx);
        break;
      }
      case Builtin::RfftPower: {
        const DTensor& x = value(n.in[0]);
        const std::size_t ax =
            kern::resolve_axis(*n.axis, x.rank(), "rfft_power");
        const std::size_t nn = x.dim(ax);
        const std::size_t bins = nn / 2 + 1;
        const std::size_t outer = x.outer_count(ax);
        const std::size_t inner = x.inner_stride(ax);
        const auto& re = *n.saved_re;
        const auto& im = *n.saved_im;
        DTensor gx(x.shape(), 0.0);
        const double w = 2.0 * 3.14159265358979323846 / static_cast<double>(nn);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t in2 = 0; in2 < inner; ++in2)
            for (std::size_t t = 0; t < nn; ++t) {
              double acc = 0.0;
              for (std::size_t k = 0; k < bins; ++k) {
                const std::size_t oi = o * bins * inner + k * inner + in2;
                const double ang =
                    w * static_cast<double>(k) * static_cast<double>(t);
                acc += g.at(oi) * 2.0 *
                       (re[oi] * std::cos(ang) - im[oi] * std::sin(ang));
              }
              gx.at(o * nn * inner + t * inner + in2) = acc;
            }
        accumulate(adj, n.in[0], gx);
        break;
      }
      default:
        break;
    }
  }

  void backward_reduction(const Node& n, const DTensor& g,
                          std::vector<DTensor>& adj) const {
    const DTensor& x = value(n.in[0]);
    const std::size_t ax = kern::resolve_axis(*n.axis, x.rank(), "reduce");
    const std::size_t nn = x.dim(ax);
    const std::size_t outer = x.outer_count(ax);
    const std::size_t inner = x.inner_stride(ax);
    DTensor gx(x.shape(), 0.0);
    std::vector<double> lane(nn);
    std::vector<std::size_t> idx(nn);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t in2 = 0; in2 < inner; ++in2) {
        const std::size_t base = o * nn * inner + in2;
        const double gv = g.at(o * inner + in2);
        if (gv == 0.0) continue;
        for (std::size_t k = 0; k < nn; ++k) lane[k] = x.at(base + k * inner);
        switch (n.builtin) {
          case Builtin::Sum:
            for (std::size_t k = 0; k < nn; ++k) gx.at(base + k * inner) = gv;
            break;
          case Builtin::Mean:
            for (std::size_t k = 0; k < nn; ++k)
              gx.at(base + k * inner) = gv / static_cast<double>(nn);
            break;
          case Builtin::Var:
          case Builtin::Std: {
            double mean = 0;
            for (double v : lane) mean += v;
            mean /= static_cast<double>(nn);
            if (n.builtin == Builtin::Var) {
              for (std::size_t k = 0; k < nn; ++k)
                gx.at(base + k * inner) =
                    gv * 2.0 * (lane[k] - mean) / static_cast<double>(nn);
            } else {
              const double s = n.value.at(o * inner + in2);
              if (s > 0)
                for (std::size_t k = 0; k < nn; ++k)
                  gx.at(base + k * inner) =
                      gv * (lane[k] - mean) / (static_cast<double>(nn) * s);
            }
            break;
          }
          case Builtin::Max: {
            std::size_t best = 0;
            for (std::size_t k = 1; k < nn; ++k)
              if (lane[k] > lane[best]) best = k;
            gx.at(base + best * inner) = gv;
            break;
          }
          case Builtin::Min: {
            std::size_t best = 0;
            for (std::size_t k = 1; k < nn; ++k)
              if (lane[k] < lane[best]) best = k;
            gx.at(base + best * inner) = gv;
            break;
          }
          case Builtin::Median:
          case Builtin::Quantile: {
            for (std::size_t k = 0; k < nn; ++k) idx[k] = k;
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t a, std::size_t b) {
                               return lane[a] < lane[b];
                             });
            if (n.builtin == Builtin::Median) {
              if (nn % 2) {
                gx.at(base + idx[nn / 2] * inner) = gv;
              } else {
                gx.at(base + idx[nn / 2 - 1] * inner) = gv * 0.5;
                gx.at(base + idx[nn / 2] * inner) += gv * 0.5;
              }
            } else {
              const double q = value(n.in[1]).at(0);
              const double pos = q * static_cast<double>(nn - 1);
              const std::size_t lo = static_cast<std::size_t>(pos);
              const double frac = pos - static_cast<double>(lo);
              gx.at(base + idx[lo] * inner) += gv * (1.0 - frac);
              if (frac > 0.0)
                gx.at(base + idx[std::min(lo + 1, nn - 1)] * inner) +=
                    gv * frac;
            }
            break;
          }
          default:
            break;
        }
      }
    accumulate(adj, n.in[0], gx);
  }

  void backward_matmul(const Node& n, const DTensor& g,
                       std::vector<DTensor>& adj) const {
    const DTensor& a = value(n.in[0]);
    const DTensor& b = value(n.in[1]);
    auto as = a.shape();
    auto bs = b.shape();
    const bool a_vec = as.size() == 1, b_vec = bs.size() == 1;
    if (a_vec) as.insert(as.begin(), 1);
    if (b_vec) bs.push_back(1);
    const std::size_t ab = as.size() == 3 ? as[0] : 1;
    const std::size_t bb = bs.size() == 3 ? bs[0] : 1;
    const std::size_t m = as[as.size() - 2], k = as[as.size() - 1];
    const std::size_t p = bs[bs.size() - 1];
    const std::size_t batch = ab > bb ? ab : bb;

    DTensor ga(a.shape(), 0.0), gb(b.shape(), 0.0);
    const double* gd = g.data();
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* ap = a.data() + (ab == 1 ? 0 : bi) * m * k;
      const double* bp = b.data() + (bb == 1 ? 0 : bi) * k * p;
      double* gap = ga.data() + (ab == 1 ? 0 : bi) * m * k;
      double* gbp = gb.data() + (bb == 1 ? 0 : bi) * k * p;
      const double* gp = gd + bi * m * p;
      if (nodes_[n.in[0]].needs_grad)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t t = 0; t < k; ++t) {
            double acc = 0;
            for (std::size_t j = 0; j < p; ++j)
              acc += gp[i * p + j] * bp[t * p + j];
            gap[i * k + t] += acc;
          }
      if (nodes_[n.in[1]].needs_grad)
        for (std::size_t t = 0; t < k; ++t)
          for (std::size_t j = 0; j < p; ++j) {
            double acc = 0;
            for (std::size_t i = 0; i < m; ++i)
              acc += ap[i * k + t] * gp[i * p + j];
            gbp[t * p + j] += acc;
          }
    }
    if (nodes_[n.in[0]].needs_grad) accumulate(adj, n.in[0], ga);
    if (nodes_[n.in[1]].needs_grad) accumulate(adj, n.in[1], gb);
  }

  std::vector<Node> nodes_;
};

}  // namespace evo
