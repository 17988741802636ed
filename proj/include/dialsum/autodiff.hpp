#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records each operation's output together with a closure that
// propagates the output gradient to its inputs. Parameter leaves write their
// gradients straight into caller-owned buffers, so gradients of several
// examples accumulate in a fixed order without an extra reduction pass.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dialsum/error.hpp"
#include "dialsum/rng.hpp"

namespace dialsum {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using NodeId = int;

template <typename T>
class Tape {
 public:
  using Mat = Matrix<T>;
  using Backward = std::function<void(const Mat& grad_out)>;

  // With record == false no backward closures are kept (inference).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  NodeId constant(Mat value) {
    Node n;
    n.value = std::move(value);
    return add(std::move(n));
  }

  // Leaf referencing `value` without copying. `grad` may be null.
  NodeId parameter(const Mat& value, Mat* grad) {
    Node n;
    n.ref = &value;
    n.ext_grad = record_ ? grad : nullptr;
    n.needs_grad = n.ext_grad != nullptr;
    return add(std::move(n));
  }

  NodeId push(Mat value, bool needs_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = record_ && needs_grad;
    if (n.needs_grad) n.backward = std::move(backward);
    return add(std::move(n));
  }

  const Mat& value(NodeId id) const {
    const Node& n = node(id);
    return n.ref ? *n.ref : n.value;
  }

  bool needs_grad(NodeId id) const { return node(id).needs_grad; }

  // Gradient buffer of a node; zero-initialized on first access.
  Mat& grad(NodeId id) {
    Node& n = node(id);
    if (n.ext_grad) return *n.ext_grad;
    if (n.grad.size() == 0) {
      const Mat& v = value(id);
      n.grad = Mat::Zero(v.rows(), v.cols());
    }
    return n.grad;
  }

  void seed(NodeId id, T g) {
    if (!needs_grad(id)) return;
    grad(id).array() += g;
  }

  // Runs every recorded closure whose node received gradient, newest first.
  void backward() {
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.size() != 0) n.backward(n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* ref = nullptr;
    Mat grad;
    Mat* ext_grad = nullptr;
    bool needs_grad = false;
    Backward backward;
  };

  Node& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }

  NodeId add(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  bool record_;
  std::vector<Node> nodes_;
};

namespace nn {

// x W + b with W (in, out) and b (1, out).
template <typename T>
NodeId linear(Tape<T>& t, NodeId x, NodeId w, NodeId b) {
  Matrix<T> out = t.value(x) * t.value(w);
  out.rowwise() += t.value(b).row(0);
  const bool ng = t.needs_grad(x) || t.needs_grad(w) || t.needs_grad(b);
  return t.push(std::move(out), ng, [&t, x, w, b](const Matrix<T>& g) {
    if (t.needs_grad(x)) t.grad(x).noalias() += g * t.value(w).transpose();
    if (t.needs_grad(w)) t.grad(w).noalias() += t.value(x).transpose() * g;
    if (t.needs_grad(b)) t.grad(b).row(0) += g.colwise().sum();
  });
}

template <typename T>
NodeId add(Tape<T>& t, NodeId a, NodeId b) {
  Matrix<T> out = t.value(a) + t.value(b);
  return t.push(std::move(out), t.needs_grad(a) || t.needs_grad(b), [&t, a, b](const Matrix<T>& g) {
    if (t.needs_grad(a)) t.grad(a) += g;
    if (t.needs_grad(b)) t.grad(b) += g;
  });
}

// x * Phi(x) with the exact normal cdf. Smooth everywhere, unlike relu.
template <typename T>
NodeId gelu(Tape<T>& t, NodeId x) {
  const Matrix<T>& v = t.value(x);
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  Matrix<T> cdf = v.unaryExpr([inv_sqrt2](T a) { return T(0.5) * (T(1) + std::erf(a * inv_sqrt2)); });
  Matrix<T> out = v.cwiseProduct(cdf);
  return t.push(std::move(out), t.needs_grad(x), [&t, x, cdf = std::move(cdf)](const Matrix<T>& g) {
    const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * T(std::numbers::pi));
    const auto& a = t.value(x).array();
    t.grad(x).array() += g.array() * (cdf.array() + a * (T(-0.5) * a.square()).exp() * inv_sqrt_2pi);
  });
}

// Inverted dropout; identity when rate is zero or rng is null.
template <typename T>
NodeId dropout(Tape<T>& t, NodeId x, double rate, Rng* rng) {
  if (rate <= 0.0 || rng == nullptr) return x;
  const Matrix<T>& v = t.value(x);
  Matrix<T> mask(v.rows(), v.cols());
  const T keep_scale = T(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng->uniform() < rate ? T(0) : keep_scale;
  }
  Matrix<T> out = v.cwiseProduct(mask);
  return t.push(std::move(out), t.needs_grad(x), [&t, x, mask](const Matrix<T>& g) {
    t.grad(x) += g.cwiseProduct(mask);
  });
}

// Row-wise layer normalization with learned gain and bias, both (1, d).
template <typename T>
NodeId layer_norm(Tape<T>& t, NodeId x, NodeId gain, NodeId bias, T eps = T(1e-5)) {
  const Matrix<T>& v = t.value(x);
  const Eigen::Index n = v.rows(), d = v.cols();
  Matrix<T> normalized(n, d);
  std::vector<T> inv_std(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = v.row(i).mean();
    const T var = (v.row(i).array() - mean).square().mean();
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(i)] = inv;
    normalized.row(i) = (v.row(i).array() - mean) * inv;
  }
  Matrix<T> out = normalized.array().rowwise() * t.value(gain).row(0).array();
  out.rowwise() += t.value(bias).row(0);
  const bool ng = t.needs_grad(x) || t.needs_grad(gain) || t.needs_grad(bias);
  return t.push(std::move(out), ng,
                [&t, x, gain, bias, normalized = std::move(normalized),
                 inv_std = std::move(inv_std)](const Matrix<T>& g) {
                  if (t.needs_grad(gain)) t.grad(gain).row(0) += g.cwiseProduct(normalized).colwise().sum();
                  if (t.needs_grad(bias)) t.grad(bias).row(0) += g.colwise().sum();
                  if (!t.needs_grad(x)) return;
                  Matrix<T> gn = g.array().rowwise() * t.value(gain).row(0).array();
                  auto& gx = t.grad(x);
                  for (Eigen::Index i = 0; i < gn.rows(); ++i) {
                    const T m1 = gn.row(i).mean();
                    const T m2 = gn.row(i).cwiseProduct(normalized.row(i)).mean();
                    gx.row(i).array() += inv_std[static_cast<std::size_t>(i)] *
                                         (gn.row(i).array() - m1 - normalized.row(i).array() * m2);
                  }
                });
}

// Rows of the token table selected by `ids` plus positional rows 0..n-1.
template <typename T>
NodeId embed(Tape<T>& t, NodeId table, NodeId positions, std::span<const int> ids) {
  const Matrix<T>& tab = t.value(table);
  const Matrix<T>& pos = t.value(positions);
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (n > pos.rows()) throw ArgumentError("sequence length exceeds positional table");
  Matrix<T> out(n, tab.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int id = ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= tab.rows()) throw ArgumentError("token id out of range");
    out.row(i) = tab.row(id) + pos.row(i);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  const bool ng = t.needs_grad(table) || t.needs_grad(positions);
  return t.push(std::move(out), ng, [&t, table, positions, idv = std::move(idv)](const Matrix<T>& g) {
    if (t.needs_grad(table)) {
      auto& gt = t.grad(table);
      for (std::size_t i = 0; i < idv.size(); ++i) gt.row(idv[i]) += g.row(static_cast<Eigen::Index>(i));
    }
    if (t.needs_grad(positions)) t.grad(positions).topRows(g.rows()) += g;
  });
}

// Multi-head scaled dot-product attention over already-projected q, k, v.
// key_valid[j] == 0 hides key j; with `causal` query i sees keys j <= i.
template <typename T>
NodeId attention(Tape<T>& t, NodeId q, NodeId k, NodeId v, int heads, std::span<const char> key_valid,
                 bool causal) {
  const Matrix<T>& Q = t.value(q);
  const Matrix<T>& K = t.value(k);
  const Matrix<T>& V = t.value(v);
  const Eigen::Index n = Q.rows(), m = K.rows(), d = Q.cols();
  const Eigen::Index dh = d / heads;
  if (static_cast<Eigen::Index>(key_valid.size()) != m) throw ArgumentError("attention: key mask size mismatch");
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const T neg_inf = -std::numeric_limits<T>::infinity();

  std::vector<Matrix<T>> probs(static_cast<std::size_t>(heads));
  Matrix<T> out(n, d);
  for (int h = 0; h < heads; ++h) {
    const Eigen::Index c0 = h * dh;
    Matrix<T> s = (Q.middleCols(c0, dh) * K.middleCols(c0, dh).transpose()) * scale;
    for (Eigen::Index i = 0; i < n; ++i) {
      T row_max = neg_inf;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (!key_valid[static_cast<std::size_t>(j)] || (causal && j > i)) s(i, j) = neg_inf;
        row_max = std::max(row_max, s(i, j));
      }
      if (row_max == neg_inf) {
        s.row(i).setZero();
        continue;
      }
      T sum = 0;
      for (Eigen::Index j = 0; j < m; ++j) {
        s(i, j) = s(i, j) == neg_inf ? T(0) : std::exp(s(i, j) - row_max);
        sum += s(i, j);
      }
      s.row(i) /= sum;
    }
    out.middleCols(c0, dh) = s * V.middleCols(c0, dh);
    probs[static_cast<std::size_t>(h)] = std::move(s);
  }
  const bool ng = t.needs_grad(q) || t.needs_grad(k) || t.needs_grad(v);
  return t.push(std::move(out), ng, [&t, q, k, v, heads, dh, scale, probs = std::move(probs)](const Matrix<T>& g) {
    const Matrix<T>& Q = t.value(q);
    const Matrix<T>& K = t.value(k);
    const Matrix<T>& V = t.value(v);
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index c0 = h * dh;
      const Matrix<T>& P = probs[static_cast<std::size_t>(h)];
      const Matrix<T> go = g.middleCols(c0, dh);
      if (t.needs_grad(v)) t.grad(v).middleCols(c0, dh).noalias() += P.transpose() * go;
      if (!t.needs_grad(q) && !t.needs_grad(k)) continue;
      Matrix<T> gp = go * V.middleCols(c0, dh).transpose();
      Matrix<T> gs = P.cwiseProduct(gp);
      const Eigen::Matrix<T, Eigen::Dynamic, 1> row_dot = gs.rowwise().sum();
      gs -= P.cwiseProduct(row_dot.replicate(1, P.cols()));
      gs *= scale;
      if (t.needs_grad(q)) t.grad(q).middleCols(c0, dh).noalias() += gs * K.middleCols(c0, dh);
      if (t.needs_grad(k)) t.grad(k).middleCols(c0, dh).noalias() += gs.transpose() * Q.middleCols(c0, dh);
    }
  });
}

// Numerically stable row softmax.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits) {
  Matrix<T> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

// Sum over rows with target >= 0 of -log softmax(logits)[row, target].
// Produces a 1x1 node; rows with a negative target are ignored.
template <typename T>
NodeId nll_sum(Tape<T>& t, NodeId logits, std::span<const int> targets) {
  const Matrix<T>& z = t.value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != z.rows()) {
    throw ArgumentError("nll_sum: " + std::to_string(targets.size()) + " targets for " +
                        std::to_string(z.rows()) + " rows");
  }
  Matrix<T> probs = softmax_rows(z);
  T total = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int y = targets[static_cast<std::size_t>(i)];
    if (y < 0) continue;
    if (y >= z.cols()) throw ArgumentError("nll_sum: target out of range");
    const T mx = z.row(i).maxCoeff();
    const T lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    total += lse - z(i, y);
  }
  Matrix<T> out(1, 1);
  out(0, 0) = total;
  std::vector<int> tv(targets.begin(), targets.end());
  return t.push(std::move(out), t.needs_grad(logits),
                [&t, logits, probs = std::move(probs), tv = std::move(tv)](const Matrix<T>& g) {
                  auto& gz = t.grad(logits);
                  const T s = g(0, 0);
                  for (std::size_t i = 0; i < tv.size(); ++i) {
                    if (tv[i] < 0) continue;
                    const auto r = static_cast<Eigen::Index>(i);
                    gz.row(r) += s * probs.row(r);
                    gz(r, tv[i]) -= s;
                  }
                });
}

}  // namespace nn

}  // namespace dialsum
