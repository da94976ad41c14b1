#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgcn/errors.hpp"

namespace cgcn {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

class Tape;

/// Dense row-major 2-D grid of doubles. Values are immutable once the
/// tensor is constructed; "mutation" always builds a new tensor. A tensor
/// recorded on a tape carries its node id so gradients can be looked up
/// after a backward pass.
class Tensor {
 public:
  Tensor() : rows_(0), cols_(0), values_(std::make_shared<std::vector<double>>()) {}

  Tensor(int rows, int cols)
      : rows_(rows), cols_(cols),
        values_(std::make_shared<std::vector<double>>(static_cast<std::size_t>(rows) * cols, 0.0)) {
    check_shape(rows, cols);
  }

  Tensor(int rows, int cols, std::vector<double> values)
      : rows_(rows), cols_(cols),
        values_(std::make_shared<std::vector<double>>(std::move(values))) {
    check_shape(rows, cols);
    if (values_->size() != static_cast<std::size_t>(rows) * cols) {
      throw DimensionError("value count " + std::to_string(values_->size()) +
                           " does not match shape " + shape_string(rows, cols));
    }
  }

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }

  static Tensor full(int rows, int cols, double v) {
    Tensor t(rows, cols);
    std::fill(t.values_->begin(), t.values_->end(), v);
    return t;
  }

  static Tensor identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) (*t.values_)[static_cast<std::size_t>(i) * n + i] = 1.0;
    return t;
  }

  static Tensor scalar(double v) { return Tensor(1, 1, {v}); }

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(r) * c);
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != c) throw DimensionError("ragged row in tensor literal");
      vals.insert(vals.end(), row.begin(), row.end());
    }
    return Tensor(r, c, std::move(vals));
  }

  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_->size(); }
  [[nodiscard]] bool is_scalar() const noexcept { return rows_ == 1 && cols_ == 1; }

  [[nodiscard]] double operator()(int r, int c) const {
    return (*values_)[static_cast<std::size_t>(r) * cols_ + c];
  }

  /// Scalar value of a 1x1 tensor.
  [[nodiscard]] double value() const {
    if (!is_scalar()) throw ContractError("value() requires a 1x1 tensor, got " + shape_string());
    return (*values_)[0];
  }

  [[nodiscard]] std::span<const double> data() const noexcept { return {values_->data(), values_->size()}; }

  [[nodiscard]] bool requires_grad() const noexcept { return node_ != kNoNode; }
  [[nodiscard]] NodeId node() const noexcept { return node_; }
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }

  /// Copy that shares the value buffer but is detached from any tape.
  [[nodiscard]] Tensor detach() const {
    Tensor t;
    t.rows_ = rows_;
    t.cols_ = cols_;
    t.values_ = values_;
    return t;
  }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(values_->begin(), values_->end(), [](double v) { return std::isfinite(v); });
  }

  [[nodiscard]] bool same_shape(const Tensor& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  [[nodiscard]] std::string shape_string() const { return shape_string(rows_, cols_); }

  static std::string shape_string(int r, int c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

 private:
  friend class Tape;

  static void check_shape(int rows, int cols) {
    if (rows < 0 || cols < 0) throw DimensionError("negative dimension in shape " + shape_string(rows, cols));
  }

  int rows_;
  int cols_;
  std::shared_ptr<std::vector<double>> values_;
  Tape* tape_ = nullptr;
  NodeId node_ = kNoNode;
};

/// Accumulates gradient contributions per tape node during a backward sweep.
class GradAccumulator {
 public:
  explicit GradAccumulator(std::size_t node_count) : grads_(node_count) {}

  void add(NodeId id, const Tensor& contribution) {
    auto& slot = grads_[static_cast<std::size_t>(id)];
    if (!slot.has_value()) {
      slot.emplace(contribution.data().begin(), contribution.data().end());
    } else {
      auto& acc = *slot;
      const auto src = contribution.data();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
    }
  }

  [[nodiscard]] bool has(NodeId id) const { return grads_[static_cast<std::size_t>(id)].has_value(); }

  [[nodiscard]] const std::vector<double>& at(NodeId id) const { return *grads_[static_cast<std::size_t>(id)]; }

 private:
  friend class GradientMap;
  std::vector<std::optional<std::vector<double>>> grads_;
};

class GradientMap;

using BackwardFn = std::function<void(const Tensor& out_grad, GradAccumulator& acc)>;

/// Define-by-run operation tape. Rebuilt for every forward pass; nodes are
/// appended in execution order, so node ids are already a topological order
/// (an operation's inputs always precede it).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a leaf variable. The returned tensor shares the value buffer
  /// of `init`, requires grad, and is owned by this tape for the lookup of
  /// its gradient after backward().
  Tensor leaf(const Tensor& init) {
    Tensor t = init.detach();
    t.tape_ = this;
    t.node_ = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(Node{t.rows_, t.cols_, nullptr});
    return t;
  }

  /// Records an operation whose output has the given values. `fn` routes the
  /// output gradient to the operation's inputs.
  Tensor record(Tensor out_values, BackwardFn fn) {
    Tensor t = out_values.detach();
    t.tape_ = this;
    t.node_ = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(Node{t.rows_, t.cols_, std::move(fn)});
    return t;
  }

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a scalar loss. Deterministic: the sweep visits nodes
  /// in strictly decreasing id order and accumulates contributions in the
  /// order the forward pass recorded them.
  [[nodiscard]] GradientMap backward(const Tensor& loss) const;

 private:
  struct Node {
    int rows;
    int cols;
    BackwardFn backward;  // null for leaves
  };
  std::vector<Node> nodes_;
};

/// Result of Tape::backward. Gradients are stored per node id; leaves the
/// loss does not depend on read back as zeros.
class GradientMap {
 public:
  GradientMap(const Tape* tape, GradAccumulator acc) : tape_(tape), acc_(std::move(acc)) {}

  [[nodiscard]] bool has(const Tensor& t) const {
    return t.node() != kNoNode && acc_.has(t.node());
  }

  /// Gradient of the loss with respect to `t` (zeros if the loss is
  /// independent of it).
  [[nodiscard]] Tensor get(const Tensor& t) const {
    if (t.tape() != tape_ || t.node() == kNoNode) {
      throw ContractError("gradient requested for a tensor not on this tape");
    }
    if (!acc_.has(t.node())) return Tensor::zeros(t.rows(), t.cols());
    return Tensor(t.rows(), t.cols(), acc_.at(t.node()));
  }

 private:
  const Tape* tape_;
  GradAccumulator acc_;
};

inline GradientMap Tape::backward(const Tensor& loss) const {
  if (!loss.is_scalar()) {
    throw ContractError("backward requires a 1x1 loss, got " + loss.shape_string());
  }
  if (loss.tape() != this || loss.node() == kNoNode) {
    throw ContractError("backward requires a loss recorded on this tape");
  }
  GradAccumulator acc(nodes_.size());
  acc.add(loss.node(), Tensor::scalar(1.0));
  for (NodeId id = loss.node(); id >= 0; --id) {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!acc.has(id) || !node.backward) continue;
    node.backward(Tensor(node.rows, node.cols, acc.at(id)), acc);
  }
  return GradientMap(this, std::move(acc));
}

// ---------------------------------------------------------------------------
// Operations. Each computes its value eagerly and records a backward rule on
// the inputs' tape when any input requires grad.
// ---------------------------------------------------------------------------

namespace detail {

inline Tape* tape_of(const Tensor& a) { return a.requires_grad() ? a.tape() : nullptr; }

inline Tape* tape_of(const Tensor& a, const Tensor& b) {
  Tape* ta = tape_of(a);
  Tape* tb = tape_of(b);
  if (ta && tb && ta != tb) throw ContractError("operands recorded on different tapes");
  return ta ? ta : tb;
}

inline std::vector<double> matmul_values(const Tensor& a, const Tensor& b) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
  const std::span<const double> av = a.data(), bv = b.data();
  for (int i = 0; i < n; ++i) {
    const double* arow = av.data() + static_cast<std::size_t>(i) * k;
    double* orow = out.data() + static_cast<std::size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

inline std::vector<double> transpose_values(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto av = a.data();
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out[static_cast<std::size_t>(j) * a.rows() + i] = av[static_cast<std::size_t>(i) * a.cols() + j];
  return out;
}

inline Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  return Tensor(a.rows(), b.cols(), matmul_values(a, b));
}

inline Tensor transpose_plain(const Tensor& a) {
  return Tensor(a.cols(), a.rows(), transpose_values(a));
}

}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " + a.shape_string() + " * " + b.shape_string());
  }
  Tensor out(a.rows(), b.cols(), detail::matmul_values(a, b));
  Tape* tape = detail::tape_of(a, b);
  if (!tape) return out;
  const Tensor ac = a, bc = b;
  return tape->record(std::move(out), [ac, bc](const Tensor& g, GradAccumulator& acc) {
    if (ac.requires_grad()) acc.add(ac.node(), detail::matmul_plain(g, detail::transpose_plain(bc)));
    if (bc.requires_grad()) acc.add(bc.node(), detail::matmul_plain(detail::transpose_plain(ac), g));
  });
}

inline Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows(), detail::transpose_values(a));
  Tape* tape = detail::tape_of(a);
  if (!tape) return out;
  const Tensor ac = a;
  return tape->record(std::move(out), [ac](const Tensor& g, GradAccumulator& acc) {
    acc.add(ac.node(), detail::transpose_plain(g));
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("add shape mismatch: " + a.shape_string() + " vs " + b.shape_string());
  }
  std::vector<double> vals(a.size());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = av[i] + bv[i];
  Tensor out(a.rows(), a.cols(), std::move(vals));
  Tape* tape = detail::tape_of(a, b);
  if (!tape) return out;
  const Tensor ac = a, bc = b;
  return tape->record(std::move(out), [ac, bc](const Tensor& g, GradAccumulator& acc) {
    if (ac.requires_grad()) acc.add(ac.node(), g);
    if (bc.requires_grad()) acc.add(bc.node(), g);
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("sub shape mismatch: " + a.shape_string() + " vs " + b.shape_string());
  }
  std::vector<double> vals(a.size());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = av[i] - bv[i];
  Tensor out(a.rows(), a.cols(), std::move(vals));
  Tape* tape = detail::tape_of(a, b);
  if (!tape) return out;
  const Tensor ac = a, bc = b;
  return tape->record(std::move(out), [ac, bc](const Tensor& g, GradAccumulator& acc) {
    if (ac.requires_grad()) acc.add(ac.node(), g);
    if (bc.requires_grad()) {
      std::vector<double> neg(g.size());
      const auto gv = g.data();
      for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -gv[i];
      acc.add(bc.node(), Tensor(g.rows(), g.cols(), std::move(neg)));
    }
  });
}

/// Multiply by a compile-time-known constant.
inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> vals(a.size());
  const auto av = a.data();
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = c * av[i];
  Tensor out(a.rows(), a.cols(), std::move(vals));
  Tape* tape = detail::tape_of(a);
  if (!tape) return out;
  const Tensor ac = a;
  return tape->record(std::move(out), [ac, c](const Tensor& g, GradAccumulator& acc) {
    std::vector<double> gv(g.size());
    const auto gd = g.data();
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = c * gd[i];
    acc.add(ac.node(), Tensor(g.rows(), g.cols(), std::move(gv)));
  });
}

/// Multiply by a learnable 1x1 scalar tensor; gradients flow to both sides.
inline Tensor scalar_mul(const Tensor& s, const Tensor& a) {
  if (!s.is_scalar()) throw DimensionError("scalar_mul needs a 1x1 scalar, got " + s.shape_string());
  const double sv = s.data()[0];
  std::vector<double> vals(a.size());
  const auto av = a.data();
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = sv * av[i];
  Tensor out(a.rows(), a.cols(), std::move(vals));
  Tape* tape = detail::tape_of(s, a);
  if (!tape) return out;
  const Tensor sc = s, ac = a;
  return tape->record(std::move(out), [sc, ac, sv](const Tensor& g, GradAccumulator& acc) {
    const auto gd = g.data();
    if (ac.requires_grad()) {
      std::vector<double> ga(g.size());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = sv * gd[i];
      acc.add(ac.node(), Tensor(g.rows(), g.cols(), std::move(ga)));
    }
    if (sc.requires_grad()) {
      double dot = 0.0;
      const auto ad = ac.data();
      for (std::size_t i = 0; i < gd.size(); ++i) dot += gd[i] * ad[i];
      acc.add(sc.node(), Tensor::scalar(dot));
    }
  });
}

/// Adds a 1xC row vector to every row of a (bias broadcast).
inline Tensor add_row_vector(const Tensor& a, const Tensor& v) {
  if (v.rows() != 1 || v.cols() != a.cols()) {
    throw DimensionError("add_row_vector needs 1x" + std::to_string(a.cols()) + ", got " + v.shape_string());
  }
  std::vector<double> vals(a.size());
  const auto av = a.data(), vv = v.data();
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * a.cols() + j;
      vals[idx] = av[idx] + vv[static_cast<std::size_t>(j)];
    }
  Tensor out(a.rows(), a.cols(), std::move(vals));
  Tape* tape = detail::tape_of(a, v);
  if (!tape) return out;
  const Tensor ac = a, vc = v;
  return tape->record(std::move(out), [ac, vc](const Tensor& g, GradAccumulator& acc) {
    if (ac.requires_grad()) acc.add(ac.node(), g);
    if (vc.requires_grad()) {
      std::vector<double> col(static_cast<std::size_t>(g.cols()), 0.0);
      const auto gd = g.data();
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) col[static_cast<std::size_t>(j)] += gd[static_cast<std::size_t>(i) * g.cols() + j];
      acc.add(vc.node(), Tensor(1, g.cols(), std::move(col)));
    }
  });
}

enum class Activation { kRelu, kTanh, kSigmoid, kLinear };

inline Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "linear") return Activation::kLinear;
  throw ConfigError("unknown activation kind: '" + name + "'");
}

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kLinear: return "linear";
  }
  return "linear";
}

inline Tensor activation(const Tensor& a, Activation kind) {
  if (kind == Activation::kLinear) return a;
  std::vector<double> vals(a.size());
  const auto av = a.data();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = av[i] > 0.0 ? av[i] : 0.0;
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::tanh(av[i]);
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 1.0 / (1.0 + std::exp(-av[i]));
      break;
    case Activation::kLinear:
      break;
  }
  Tensor out(a.rows(), a.cols(), std::move(vals));
  Tape* tape = detail::tape_of(a);
  if (!tape) return out;
  const Tensor ac = a, oc = out;
  return tape->record(std::move(out), [ac, oc, kind](const Tensor& g, GradAccumulator& acc) {
    std::vector<double> gv(g.size());
    const auto gd = g.data(), xd = ac.data(), yd = oc.data();
    switch (kind) {
      case Activation::kRelu:
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = xd[i] > 0.0 ? gd[i] : 0.0;
        break;
      case Activation::kTanh:
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = gd[i] * (1.0 - yd[i] * yd[i]);
        break;
      case Activation::kSigmoid:
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = gd[i] * yd[i] * (1.0 - yd[i]);
        break;
      case Activation::kLinear:
        break;
    }
    acc.add(ac.node(), Tensor(g.rows(), g.cols(), std::move(gv)));
  });
}

/// Row-wise softmax, stabilized by subtracting each row's maximum before
/// exponentiation so large inner products cannot overflow.
inline Tensor row_softmax(const Tensor& a) {
  std::vector<double> vals(a.size());
  const auto av = a.data();
  for (int i = 0; i < a.rows(); ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * a.cols();
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < a.cols(); ++j) mx = std::max(mx, av[off + j]);
    double sum = 0.0;
    for (int j = 0; j < a.cols(); ++j) {
      vals[off + j] = std::exp(av[off + j] - mx);
      sum += vals[off + j];
    }
    for (int j = 0; j < a.cols(); ++j) vals[off + j] /= sum;
  }
  Tensor out(a.rows(), a.cols(), std::move(vals));
  Tape* tape = detail::tape_of(a);
  if (!tape) return out;
  const Tensor ac = a, oc = out;
  return tape->record(std::move(out), [ac, oc](const Tensor& g, GradAccumulator& acc) {
    std::vector<double> gv(g.size());
    const auto gd = g.data(), yd = oc.data();
    for (int i = 0; i < g.rows(); ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * g.cols();
      double dot = 0.0;
      for (int j = 0; j < g.cols(); ++j) dot += gd[off + j] * yd[off + j];
      for (int j = 0; j < g.cols(); ++j) gv[off + j] = yd[off + j] * (gd[off + j] - dot);
    }
    acc.add(ac.node(), Tensor(g.rows(), g.cols(), std::move(gv)));
  });
}

/// Sum of squared elementwise differences, as a 1x1 tensor. Scale factors
/// such as 1/(2N) are applied by callers.
inline Tensor frobenius_sq(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("frobenius_sq shape mismatch: " + a.shape_string() + " vs " + b.shape_string());
  }
  double sum = 0.0;
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = av[i] - bv[i];
    sum += d * d;
  }
  Tensor out = Tensor::scalar(sum);
  Tape* tape = detail::tape_of(a, b);
  if (!tape) return out;
  const Tensor ac = a, bc = b;
  return tape->record(std::move(out), [ac, bc](const Tensor& g, GradAccumulator& acc) {
    const double g0 = g.data()[0];
    const auto av2 = ac.data(), bv2 = bc.data();
    if (ac.requires_grad()) {
      std::vector<double> ga(ac.size());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = 2.0 * g0 * (av2[i] - bv2[i]);
      acc.add(ac.node(), Tensor(ac.rows(), ac.cols(), std::move(ga)));
    }
    if (bc.requires_grad()) {
      std::vector<double> gb(bc.size());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = -2.0 * g0 * (av2[i] - bv2[i]);
      acc.add(bc.node(), Tensor(bc.rows(), bc.cols(), std::move(gb)));
    }
  });
}

}  // namespace cgcn
