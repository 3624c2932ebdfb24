#ifndef GABI_AUTODIFF_HPP
#define GABI_AUTODIFF_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gabi/kernels.hpp"
#include "gabi/tensor.hpp"

namespace gabi {

enum class Op {
  Leaf,
  MatMul,
  SpMatMul,  // sparse constant left operand, same contract as MatMul
  Add,
  Mul,
  Scale,
  Tanh,
  Relu,
  ReduceMean,
  Concat,
  BroadcastRow,
  GatherRows,
  SumSquare,
  Mmd2,  // squared MMD against a constant reference batch (see mmd.hpp)
};

const char* op_name(Op op);

/// Reverse-mode autodiff over an eagerly evaluated DAG. Node ids are issued
/// in topological order; values are computed at construction and can be
/// recomputed with forward() after mutating leaf values in place.
class Graph {
 public:
  using Id = int32_t;

  struct Node {
    Op op = Op::Leaf;
    Tensor value;
    Tensor grad;
    Id a = -1, b = -1;
    double alpha = 0.0;              // Scale factor
    int axis = 0;                    // ReduceMean / Concat
    int64_t nrows = 0;               // BroadcastRow target rows
    std::vector<int64_t> indices;    // GatherRows
    const Csr* sparse = nullptr;     // SpMatMul operand (not owned)
    Tensor aux;                      // Mmd2 reference batch
    double bandwidth = 1.0;          // Mmd2 kernel bandwidth
    std::string name;
    bool requires_grad = false;
  };

  Id leaf(Tensor v, std::string name = "", bool requires_grad = false);
  Id param(Tensor v, std::string name) { return leaf(std::move(v), std::move(name), true); }

  Id matmul(Id a, Id b);
  Id spmatmul(const Csr& s, Id x);
  Id add(Id a, Id b);
  Id mul(Id a, Id b);
  Id scale(Id a, double alpha);
  Id tanh(Id a);
  Id relu(Id a);
  Id reduce_mean(Id a, int axis);  // [m,n] -> axis 0: [1,n], axis 1: [m,1]
  Id concat(Id a, Id b, int axis);
  Id broadcast_row(Id v, int64_t nrows);  // [n] or [1,n] -> [nrows,n]
  Id gather_rows(Id a, std::vector<int64_t> indices);
  Id sum_square(Id a);  // scalar [1]
  Id mmd2(Id x, Tensor reference, double bandwidth);

  const Tensor& value(Id id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(Id id) const { return nodes_[static_cast<size_t>(id)].grad; }
  Tensor& leaf_value(Id id);
  const Node& node(Id id) const { return nodes_[static_cast<size_t>(id)]; }
  size_t size() const { return nodes_.size(); }

  /// Recompute every node reachable from root (ascending id order) and
  /// return the root value. Leaves keep their current values.
  Tensor forward(Id root);

  /// Reverse sweep from a scalar root, seeding d(root)/d(root) = 1.
  void backward(Id root);

  /// Reverse sweep from several roots with explicit output gradients.
  void backward_seeded(const std::vector<std::pair<Id, Tensor>>& seeds);

  /// Gradients of all named parameters (requires_grad leaves).
  std::map<std::string, Tensor> named_grads() const;

 private:
  Id push(Node n);
  void compute(Node& n);
  void accumulate(Id target, const Tensor& g);
  std::vector<char> reachable(const std::vector<Id>& roots) const;

  std::vector<Node> nodes_;
};

/// Gradient check report: per-parameter max relative error between
/// reverse-mode and central finite differences.
struct GradCheckReport {
  struct Entry {
    std::string name;
    double rel_err;
  };
  std::vector<Entry> entries;
  double max_rel_err = 0.0;
  bool pass = false;
  double tol = 0.0;
};

/// `eval` computes the scalar objective for the given parameter values and,
/// when `grads` is non-null, fills reverse-mode gradients. The relative
/// error per parameter is ||g_ad - g_fd||_inf / max(||g_ad||_inf,
/// ||g_fd||_inf, 1e-12).
GradCheckReport grad_check(
    const std::function<double(const std::map<std::string, Tensor>&,
                               std::map<std::string, Tensor>*)>& eval,
    std::map<std::string, Tensor> params, double h, double tol);

/// Adam with bias correction; state keyed by parameter name.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {});
  void step(std::map<std::string, Tensor>& params,
            const std::map<std::string, Tensor>& grads);
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  int64_t step_count() const { return step_; }

 private:
  AdamConfig cfg_;
  int64_t step_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

}  // namespace gabi

#endif  // GABI_AUTODIFF_HPP
