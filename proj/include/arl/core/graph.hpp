#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "arl/core/scalar_ops.hpp"
#include "arl/core/types.hpp"

namespace arl {

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

template <typename Scalar>
class GraphT;

/// Lightweight handle into a graph; free functions below build expressions
/// out of these, e.g. y = gelu(matmul(x, w) + b).
template <typename Scalar>
struct VarT {
  GraphT<Scalar>* g = nullptr;
  int id = -1;
};

/// Append-only reverse-mode tape over dense Eigen values.
///
/// Nodes are created in topological order by construction, so the backward
/// pass is a single reverse sweep that visits each node exactly once. Leaves
/// are flagged trainable or frozen; frozen leaves (and constants) never
/// accumulate gradient, so their grad reads back as exactly zero.
template <typename Scalar>
class GraphT {
 public:
  using Mat = typename Dense<Scalar>::Mat;
  using Vec = typename Dense<Scalar>::Vec;
  using Var = VarT<Scalar>;

  Var constant(Mat v) { return Var{this, emit(std::move(v), false, nullptr)}; }

  Var leaf(Mat v, bool trainable = true) {
    return Var{this, emit(std::move(v), trainable, nullptr)};
  }

  /// Backpropagate from a 1x1 loss node.
  void backward(Var loss) {
    require(loss.g == this, "backward: var from another graph");
    require(val_at(loss.id).size() == 1, "backward: loss must be scalar");
    nodes_[loss.id].grad = Mat::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.back && n.needs_grad && n.grad.size() > 0) n.back(*this);
    }
  }

  const Mat& val_at(int id) const { return nodes_[id].val; }
  const Mat& val(Var v) const { return nodes_[v.id].val; }

  /// Gradient with zero-fill for untouched nodes (frozen leaves included).
  Mat grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.size() == 0) return Mat::Zero(n.val.rows(), n.val.cols());
    return n.grad;
  }

  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  int next_id() const { return int(nodes_.size()); }

  int emit(Mat val, bool needs_grad, std::function<void(GraphT&)> back) {
    nodes_.push_back(Node{std::move(val), Mat(), std::move(back), needs_grad});
    return int(nodes_.size()) - 1;
  }

  template <typename Derived>
  void add_grad(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  const Mat& grad_at(int id) const { return nodes_[id].grad; }

  size_t size() const { return nodes_.size(); }
  int64_t degenerate_count() const { return degenerate_; }
  void count_degenerate(int64_t k) { degenerate_ += k; }

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void(GraphT&)> back;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  int64_t degenerate_ = 0;
};

using Graph = GraphT<double>;
using Var = VarT<double>;

namespace detail {

template <typename Scalar>
GraphT<Scalar>& same_graph(VarT<Scalar> a, VarT<Scalar> b) {
  require(a.g && a.g == b.g, "op: vars from different graphs");
  return *a.g;
}

}  // namespace detail

// ---- elementwise binary ----------------------------------------------------

template <typename S>
VarT<S> operator+(VarT<S> a, VarT<S> b) {
  auto& g = detail::same_graph(a, b);
  require(g.val_at(a.id).rows() == g.val_at(b.id).rows() &&
              g.val_at(a.id).cols() == g.val_at(b.id).cols(),
          "add: shape mismatch");
  const bool ng = g.needs_grad(a.id) || g.needs_grad(b.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, bi = b.id, out](GraphT<S>& g) {
      g.add_grad(ai, g.grad_at(out));
      g.add_grad(bi, g.grad_at(out));
    };
  g.emit(g.val_at(a.id) + g.val_at(b.id), ng, std::move(back));
  return {&g, out};
}

template <typename S>
VarT<S> operator-(VarT<S> a, VarT<S> b) {
  auto& g = detail::same_graph(a, b);
  require(g.val_at(a.id).rows() == g.val_at(b.id).rows() &&
              g.val_at(a.id).cols() == g.val_at(b.id).cols(),
          "sub: shape mismatch");
  const bool ng = g.needs_grad(a.id) || g.needs_grad(b.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, bi = b.id, out](GraphT<S>& g) {
      g.add_grad(ai, g.grad_at(out));
      g.add_grad(bi, -g.grad_at(out));
    };
  g.emit(g.val_at(a.id) - g.val_at(b.id), ng, std::move(back));
  return {&g, out};
}

/// Elementwise (Hadamard) product.
template <typename S>
VarT<S> operator*(VarT<S> a, VarT<S> b) {
  auto& g = detail::same_graph(a, b);
  require(g.val_at(a.id).rows() == g.val_at(b.id).rows() &&
              g.val_at(a.id).cols() == g.val_at(b.id).cols(),
          "mul: shape mismatch");
  const bool ng = g.needs_grad(a.id) || g.needs_grad(b.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, bi = b.id, out](GraphT<S>& g) {
      g.add_grad(ai, g.grad_at(out).cwiseProduct(g.val_at(bi)));
      g.add_grad(bi, g.grad_at(out).cwiseProduct(g.val_at(ai)));
    };
  g.emit(g.val_at(a.id).cwiseProduct(g.val_at(b.id)), ng, std::move(back));
  return {&g, out};
}

template <typename S>
VarT<S> matmul(VarT<S> a, VarT<S> b) {
  auto& g = detail::same_graph(a, b);
  require(g.val_at(a.id).cols() == g.val_at(b.id).rows(), "matmul: inner dims differ");
  const bool ng = g.needs_grad(a.id) || g.needs_grad(b.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, bi = b.id, out](GraphT<S>& g) {
      g.add_grad(ai, g.grad_at(out) * g.val_at(bi).transpose());
      g.add_grad(bi, g.val_at(ai).transpose() * g.grad_at(out));
    };
  g.emit(g.val_at(a.id) * g.val_at(b.id), ng, std::move(back));
  return {&g, out};
}

// ---- scalar and broadcast --------------------------------------------------

template <typename S>
VarT<S> operator*(double c, VarT<S> a) {
  auto& g = *a.g;
  const bool ng = g.needs_grad(a.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, c, out](GraphT<S>& g) { g.add_grad(ai, c * g.grad_at(out)); };
  g.emit(c * g.val_at(a.id), ng, std::move(back));
  return {&g, out};
}

template <typename S>
VarT<S> operator-(VarT<S> a) {
  return -1.0 * a;
}

/// Add a 1 x k row vector to every row of a B x k matrix (bias add).
template <typename S>
VarT<S> add_rowvec(VarT<S> a, VarT<S> r) {
  auto& g = detail::same_graph(a, r);
  require(g.val_at(r.id).rows() == 1 && g.val_at(a.id).cols() == g.val_at(r.id).cols(),
          "add_rowvec: want 1 x k row matching a's cols");
  const bool ng = g.needs_grad(a.id) || g.needs_grad(r.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, ri = r.id, out](GraphT<S>& g) {
      g.add_grad(ai, g.grad_at(out));
      g.add_grad(ri, g.grad_at(out).colwise().sum());
    };
  g.emit(g.val_at(a.id).rowwise() + g.val_at(r.id).row(0), ng, std::move(back));
  return {&g, out};
}

/// Multiply every row of a B x k matrix by a 1 x k row vector.
template <typename S>
VarT<S> mul_rowvec(VarT<S> a, VarT<S> r) {
  auto& g = detail::same_graph(a, r);
  require(g.val_at(r.id).rows() == 1 && g.val_at(a.id).cols() == g.val_at(r.id).cols(),
          "mul_rowvec: want 1 x k row matching a's cols");
  const bool ng = g.needs_grad(a.id) || g.needs_grad(r.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, ri = r.id, out](GraphT<S>& g) {
      g.add_grad(ai, (g.grad_at(out).array().rowwise() * g.val_at(ri).row(0).array()).matrix());
      g.add_grad(ri, (g.grad_at(out).array() * g.val_at(ai).array()).colwise().sum().matrix());
    };
  g.emit((g.val_at(a.id).array().rowwise() * g.val_at(r.id).row(0).array()).matrix(), ng,
         std::move(back));
  return {&g, out};
}

/// Add a 1x1 var to every entry.
template <typename S>
VarT<S> add_scalar_bcast(VarT<S> a, VarT<S> s) {
  auto& g = detail::same_graph(a, s);
  require(g.val_at(s.id).size() == 1, "add_scalar_bcast: s must be 1x1");
  const bool ng = g.needs_grad(a.id) || g.needs_grad(s.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, si = s.id, out](GraphT<S>& g) {
      g.add_grad(ai, g.grad_at(out));
      typename GraphT<S>::Mat acc(1, 1);
      acc(0, 0) = g.grad_at(out).sum();
      g.add_grad(si, acc);
    };
  g.emit((g.val_at(a.id).array() + g.val_at(s.id)(0, 0)).matrix(), ng, std::move(back));
  return {&g, out};
}

// ---- elementwise unary -----------------------------------------------------

namespace detail {

/// Shared scaffolding for elementwise unary ops: fwd maps the value array,
/// dfn maps (input array, output array) to the local derivative array.
template <typename S, typename F, typename D>
VarT<S> unary(VarT<S> a, F fwd, D dfn) {
  auto& g = *a.g;
  const bool ng = g.needs_grad(a.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, out, dfn](GraphT<S>& g) {
      g.add_grad(ai, (g.grad_at(out).array() *
                      dfn(g.val_at(ai).array(), g.val_at(out).array()))
                         .matrix());
    };
  g.emit(fwd(g.val_at(a.id).array()).matrix(), ng, std::move(back));
  return {&g, out};
}

}  // namespace detail

template <typename S>
VarT<S> square(VarT<S> a) {
  return detail::unary(
      a, [](const auto& x) { return x.square(); },
      [](const auto& x, const auto&) { return 2.0 * x; });
}

template <typename S>
VarT<S> exp_(VarT<S> a) {
  return detail::unary(
      a, [](const auto& x) { return x.exp(); },
      [](const auto&, const auto& y) { return y; });
}

template <typename S>
VarT<S> log_(VarT<S> a) {
  return detail::unary(
      a, [](const auto& x) { return x.log(); },
      [](const auto& x, const auto&) { return x.inverse(); });
}

template <typename S>
VarT<S> tanh_(VarT<S> a) {
  return detail::unary(
      a, [](const auto& x) { return x.tanh(); },
      [](const auto&, const auto& y) { return 1.0 - y.square(); });
}

template <typename S>
VarT<S> gelu_(VarT<S> a) {
  return detail::unary(
      a, [](const auto& x) { return x.unaryExpr([](S v) { return S(gelu(v)); }); },
      [](const auto& x, const auto&) {
        return x.unaryExpr([](S v) { return S(gelu_grad(v)); });
      });
}

/// Clamp with pass-through gradient strictly inside [lo, hi], zero outside.
template <typename S>
VarT<S> clamp_(VarT<S> a, double lo, double hi) {
  return detail::unary(
      a,
      [lo, hi](const auto& x) { return x.min(S(hi)).max(S(lo)); },
      [lo, hi](const auto& x, const auto&) {
        return (x >= S(lo)).template cast<S>() * (x <= S(hi)).template cast<S>();
      });
}

/// Elementwise asymmetric squared loss |tau - 1(x<0)| x^2.
template <typename S>
VarT<S> expectile_(VarT<S> a, double tau) {
  return detail::unary(
      a,
      [tau](const auto& x) {
        return x.unaryExpr([tau](S v) { return S(expectile_loss(v, tau)); });
      },
      [tau](const auto& x, const auto&) {
        return x.unaryExpr([tau](S v) { return S(expectile_grad(v, tau)); });
      });
}

// ---- reductions ------------------------------------------------------------

template <typename S>
VarT<S> sum_all(VarT<S> a) {
  auto& g = *a.g;
  const bool ng = g.needs_grad(a.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, out](GraphT<S>& g) {
      using M = typename GraphT<S>::Mat;
      const auto& v = g.val_at(ai);
      g.add_grad(ai, M::Constant(v.rows(), v.cols(), g.grad_at(out)(0, 0)));
    };
  typename GraphT<S>::Mat y(1, 1);
  y(0, 0) = g.val_at(a.id).sum();
  g.emit(std::move(y), ng, std::move(back));
  return {&g, out};
}

template <typename S>
VarT<S> mean_all(VarT<S> a) {
  auto& g = *a.g;
  const double inv = 1.0 / double(g.val_at(a.id).size());
  return inv * sum_all(a);
}

/// Row sums: B x k -> B x 1.
template <typename S>
VarT<S> rowwise_sum(VarT<S> a) {
  auto& g = *a.g;
  const bool ng = g.needs_grad(a.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, out](GraphT<S>& g) {
      using M = typename GraphT<S>::Mat;
      g.add_grad(ai, g.grad_at(out) * M::Ones(1, g.val_at(ai).cols()));
    };
  g.emit(g.val_at(a.id).rowwise().sum(), ng, std::move(back));
  return {&g, out};
}

// ---- structure -------------------------------------------------------------

template <typename S>
VarT<S> concat_cols(VarT<S> a, VarT<S> b) {
  auto& g = detail::same_graph(a, b);
  require(g.val_at(a.id).rows() == g.val_at(b.id).rows(), "concat_cols: row mismatch");
  const bool ng = g.needs_grad(a.id) || g.needs_grad(b.id);
  const int out = g.next_id();
  const int ca = int(g.val_at(a.id).cols());
  const int cb = int(g.val_at(b.id).cols());
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, bi = b.id, ca, cb, out](GraphT<S>& g) {
      g.add_grad(ai, g.grad_at(out).leftCols(ca));
      g.add_grad(bi, g.grad_at(out).rightCols(cb));
    };
  typename GraphT<S>::Mat y(g.val_at(a.id).rows(), ca + cb);
  y << g.val_at(a.id), g.val_at(b.id);
  g.emit(std::move(y), ng, std::move(back));
  return {&g, out};
}

template <typename S>
VarT<S> concat_cols(VarT<S> a, VarT<S> b, VarT<S> c) {
  return concat_cols(concat_cols(a, b), c);
}

template <typename S>
VarT<S> stopgrad(VarT<S> a) {
  auto& g = *a.g;
  return g.constant(g.val(a));
}

// ---- normalization ---------------------------------------------------------

/// Row-wise layer normalization (x - mean) / sqrt(var + eps), no affine part.
template <typename S>
VarT<S> layer_norm_rows(VarT<S> a, double eps = 1e-5) {
  auto& g = *a.g;
  const auto& x = g.val_at(a.id);
  const int k = int(x.cols());
  typename GraphT<S>::Mat y(x.rows(), x.cols());
  typename GraphT<S>::Vec inv_sd(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().sum() / k;
    inv_sd(i) = 1.0 / std::sqrt(var + eps);
    y.row(i) = ((x.row(i).array() - mu) * inv_sd(i)).matrix();
  }
  const bool ng = g.needs_grad(a.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, out, inv_sd, k](GraphT<S>& g) {
      const auto& go = g.grad_at(out);
      const auto& y = g.val_at(out);
      typename GraphT<S>::Mat gx(go.rows(), go.cols());
      for (int i = 0; i < go.rows(); ++i) {
        const double gm = go.row(i).mean();
        const double gy = (go.row(i).array() * y.row(i).array()).sum() / k;
        gx.row(i) = (((go.row(i).array() - gm) - y.row(i).array() * gy) * inv_sd(i)).matrix();
      }
      g.add_grad(ai, gx);
    };
  g.emit(std::move(y), ng, std::move(back));
  return {&g, out};
}

/// Row-wise v / ||v|| * sqrt(k); rows with ||v|| < 1e-8 become zero rows and
/// bump the graph's degenerate counter. Gradient through a zero row is zero.
template <typename S>
VarT<S> length_normalize_rows(VarT<S> a) {
  auto& g = *a.g;
  const auto& x = g.val_at(a.id);
  const double rk = std::sqrt(double(x.cols()));
  typename GraphT<S>::Mat y(x.rows(), x.cols());
  typename GraphT<S>::Vec rn(x.rows());
  int64_t degen = 0;
  for (int i = 0; i < x.rows(); ++i) {
    rn(i) = x.row(i).norm();
    if (rn(i) < kNormFloor) {
      y.row(i).setZero();
      ++degen;
    } else {
      y.row(i) = x.row(i) * (rk / rn(i));
    }
  }
  g.count_degenerate(degen);
  const bool ng = g.needs_grad(a.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, out, rn, rk](GraphT<S>& g) {
      using M = typename GraphT<S>::Mat;
      const auto& go = g.grad_at(out);
      const auto& x = g.val_at(ai);
      M gx = M::Zero(go.rows(), go.cols());
      for (int i = 0; i < go.rows(); ++i) {
        const double r = rn(i);
        if (r < kNormFloor) continue;
        const double dot = go.row(i).dot(x.row(i));
        gx.row(i) = (rk / r) * go.row(i) - (rk * dot / (r * r * r)) * x.row(i);
      }
      g.add_grad(ai, gx);
    };
  g.emit(std::move(y), ng, std::move(back));
  return {&g, out};
}

/// Row-wise v * tanh(||v||) / ||v|| * sqrt(k); smooth through v = 0.
template <typename S>
VarT<S> soft_normalize_rows(VarT<S> a) {
  auto& g = *a.g;
  const auto& x = g.val_at(a.id);
  const double rk = std::sqrt(double(x.cols()));
  typename GraphT<S>::Mat y(x.rows(), x.cols());
  typename GraphT<S>::Vec rn(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    rn(i) = x.row(i).norm();
    y.row(i) = x.row(i) * (rk * tanh_over_r(rn(i)));
  }
  const bool ng = g.needs_grad(a.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, out, rn, rk](GraphT<S>& g) {
      const auto& go = g.grad_at(out);
      const auto& x = g.val_at(ai);
      typename GraphT<S>::Mat gx(go.rows(), go.cols());
      for (int i = 0; i < go.rows(); ++i) {
        const double s = rk * tanh_over_r(rn(i));
        const double c = rk * tanh_over_r_grad_over_r(rn(i));
        const double dot = go.row(i).dot(x.row(i));
        gx.row(i) = s * go.row(i) + (c * dot) * x.row(i);
      }
      g.add_grad(ai, gx);
    };
  g.emit(std::move(y), ng, std::move(back));
  return {&g, out};
}

// ---- categorical -----------------------------------------------------------

/// Row-wise log-softmax (numerically stable).
template <typename S>
VarT<S> log_softmax_rows(VarT<S> a) {
  auto& g = *a.g;
  const auto& x = g.val_at(a.id);
  typename GraphT<S>::Mat y(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    y.row(i) = (x.row(i).array() - lse).matrix();
  }
  const bool ng = g.needs_grad(a.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, out](GraphT<S>& g) {
      const auto& go = g.grad_at(out);
      const auto& y = g.val_at(out);
      typename GraphT<S>::Mat gx(go.rows(), go.cols());
      for (int i = 0; i < go.rows(); ++i) {
        const double gs = go.row(i).sum();
        gx.row(i) = (go.row(i).array() - y.row(i).array().exp() * gs).matrix();
      }
      g.add_grad(ai, gx);
    };
  g.emit(std::move(y), ng, std::move(back));
  return {&g, out};
}

/// Pick one column per row: out(i, 0) = a(i, idx[i]).
template <typename S>
VarT<S> gather_cols(VarT<S> a, const std::vector<int>& idx) {
  auto& g = *a.g;
  const auto& x = g.val_at(a.id);
  require(int(idx.size()) == int(x.rows()), "gather_cols: one index per row");
  typename GraphT<S>::Mat y(x.rows(), 1);
  for (int i = 0; i < x.rows(); ++i) {
    require(idx[i] >= 0 && idx[i] < x.cols(), "gather_cols: index out of range");
    y(i, 0) = x(i, idx[i]);
  }
  const bool ng = g.needs_grad(a.id);
  const int out = g.next_id();
  std::function<void(GraphT<S>&)> back;
  if (ng)
    back = [ai = a.id, out, idx](GraphT<S>& g) {
      using M = typename GraphT<S>::Mat;
      const auto& go = g.grad_at(out);
      M gx = M::Zero(go.rows(), g.val_at(ai).cols());
      for (int i = 0; i < go.rows(); ++i) gx(i, idx[i]) = go(i, 0);
      g.add_grad(ai, gx);
    };
  g.emit(std::move(y), ng, std::move(back));
  return {&g, out};
}

}  // namespace arl
