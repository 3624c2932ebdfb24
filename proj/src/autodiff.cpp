#include "gabi/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "gabi/errors.hpp"
#include "gabi/mmd.hpp"

namespace gabi {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::SpMatMul: return "spmatmul";
    case Op::Add: return "add";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Tanh: return "tanh";
    case Op::Relu: return "relu";
    case Op::ReduceMean: return "reduce-mean";
    case Op::Concat: return "concat";
    case Op::BroadcastRow: return "broadcast-row";
    case Op::GatherRows: return "gather-rows";
    case Op::SumSquare: return "sum-square";
    case Op::Mmd2: return "mmd2";
  }
  return "?";
}

namespace {
[[noreturn]] void shape_fail(Op op, const std::string& detail) {
  throw ShapeError(std::string("shape mismatch in ") + op_name(op) + ": " +
                   detail);
}
void require_rank2(Op op, const Tensor& t, const char* which) {
  if (t.rank() != 2)
    shape_fail(op, std::string(which) + " must be rank-2, got " +
                       Tensor::shape_str(t.shape()));
}
// Reuse the node's value buffer across forward() re-runs.
void ensure(Tensor& t, std::vector<int64_t> shape) {
  if (t.shape() != shape) t = Tensor(std::move(shape));
}
}  // namespace

Graph::Id Graph::push(Node n) {
  compute(n);
  if (!n.value.all_finite())
    throw ValueError(std::string("non-finite value produced by ") +
                     op_name(n.op) +
                     (n.name.empty() ? "" : " (" + n.name + ")"));
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Graph::Id Graph::leaf(Tensor v, std::string name, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(v);
  n.name = std::move(name);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Tensor& Graph::leaf_value(Id id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.op != Op::Leaf) throw ShapeError("leaf_value: node is not a leaf");
  return n.value;
}

Graph::Id Graph::matmul(Id a, Id b) {
  Node n;
  n.op = Op::MatMul;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

Graph::Id Graph::spmatmul(const Csr& s, Id x) {
  Node n;
  n.op = Op::SpMatMul;
  n.sparse = &s;
  n.a = x;
  return push(std::move(n));
}

Graph::Id Graph::add(Id a, Id b) {
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

Graph::Id Graph::mul(Id a, Id b) {
  Node n;
  n.op = Op::Mul;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

Graph::Id Graph::scale(Id a, double alpha) {
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.alpha = alpha;
  return push(std::move(n));
}

Graph::Id Graph::tanh(Id a) {
  Node n;
  n.op = Op::Tanh;
  n.a = a;
  return push(std::move(n));
}

Graph::Id Graph::relu(Id a) {
  Node n;
  n.op = Op::Relu;
  n.a = a;
  return push(std::move(n));
}

Graph::Id Graph::reduce_mean(Id a, int axis) {
  Node n;
  n.op = Op::ReduceMean;
  n.a = a;
  n.axis = axis;
  return push(std::move(n));
}

Graph::Id Graph::concat(Id a, Id b, int axis) {
  Node n;
  n.op = Op::Concat;
  n.a = a;
  n.b = b;
  n.axis = axis;
  return push(std::move(n));
}

Graph::Id Graph::broadcast_row(Id v, int64_t nrows) {
  Node n;
  n.op = Op::BroadcastRow;
  n.a = v;
  n.nrows = nrows;
  return push(std::move(n));
}

Graph::Id Graph::gather_rows(Id a, std::vector<int64_t> indices) {
  Node n;
  n.op = Op::GatherRows;
  n.a = a;
  n.indices = std::move(indices);
  return push(std::move(n));
}

Graph::Id Graph::sum_square(Id a) {
  Node n;
  n.op = Op::SumSquare;
  n.a = a;
  return push(std::move(n));
}

Graph::Id Graph::mmd2(Id x, Tensor reference, double bandwidth) {
  Node n;
  n.op = Op::Mmd2;
  n.a = x;
  n.aux = std::move(reference);
  n.bandwidth = bandwidth;
  return push(std::move(n));
}

void Graph::compute(Node& n) {
  auto A = [&]() -> const Tensor& { return nodes_[static_cast<size_t>(n.a)].value; };
  auto B = [&]() -> const Tensor& { return nodes_[static_cast<size_t>(n.b)].value; };
  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::MatMul: {
      const Tensor& a = A();
      const Tensor& b = B();
      require_rank2(n.op, a, "left");
      require_rank2(n.op, b, "right");
      if (a.dim(1) != b.dim(0))
        shape_fail(n.op, Tensor::shape_str(a.shape()) + " x " +
                             Tensor::shape_str(b.shape()));
      ensure(n.value, {a.dim(0), b.dim(1)});
      kernels::gemm_nn(a.data(), b.data(), n.value.data(), a.dim(0), a.dim(1),
                       b.dim(1));
      break;
    }
    case Op::SpMatMul: {
      const Tensor& x = A();
      require_rank2(n.op, x, "right");
      if (n.sparse->n != x.dim(0))
        shape_fail(n.op, "sparse operand is " + std::to_string(n.sparse->n) +
                             "x" + std::to_string(n.sparse->n) + ", right is " +
                             Tensor::shape_str(x.shape()));
      ensure(n.value, {x.dim(0), x.dim(1)});
      kernels::spmm(*n.sparse, x.data(), n.value.data(), x.dim(1));
      break;
    }
    case Op::Add: {
      const Tensor& a = A();
      const Tensor& b = B();
      if (!a.same_shape(b))
        shape_fail(n.op, Tensor::shape_str(a.shape()) + " vs " +
                             Tensor::shape_str(b.shape()));
      ensure(n.value, a.shape());
      for (int64_t i = 0; i < a.numel(); ++i) n.value[i] = a[i] + b[i];
      break;
    }
    case Op::Mul: {
      const Tensor& a = A();
      const Tensor& b = B();
      if (!a.same_shape(b))
        shape_fail(n.op, Tensor::shape_str(a.shape()) + " vs " +
                             Tensor::shape_str(b.shape()));
      ensure(n.value, a.shape());
      for (int64_t i = 0; i < a.numel(); ++i) n.value[i] = a[i] * b[i];
      break;
    }
    case Op::Scale: {
      const Tensor& a = A();
      ensure(n.value, a.shape());
      for (int64_t i = 0; i < a.numel(); ++i) n.value[i] = n.alpha * a[i];
      break;
    }
    case Op::Tanh: {
      const Tensor& a = A();
      ensure(n.value, a.shape());
      kernels::tanh_omp(a.data(), n.value.data(), a.numel());
      break;
    }
    case Op::Relu: {
      const Tensor& a = A();
      ensure(n.value, a.shape());
      for (int64_t i = 0; i < a.numel(); ++i)
        n.value[i] = a[i] > 0.0 ? a[i] : 0.0;
      break;
    }
    case Op::ReduceMean: {
      const Tensor& a = A();
      require_rank2(n.op, a, "input");
      const int64_t m = a.dim(0), c = a.dim(1);
      if (n.axis == 0) {
        ensure(n.value, {1, c});
        for (int64_t j = 0; j < c; ++j) n.value[j] = 0.0;
        for (int64_t i = 0; i < m; ++i)
          for (int64_t j = 0; j < c; ++j) n.value[j] += a(i, j);
        for (int64_t j = 0; j < c; ++j) n.value[j] /= static_cast<double>(m);
      } else if (n.axis == 1) {
        ensure(n.value, {m, 1});
        for (int64_t i = 0; i < m; ++i) {
          double s = 0.0;
          for (int64_t j = 0; j < c; ++j) s += a(i, j);
          n.value[i] = s / static_cast<double>(c);
        }
      } else {
        shape_fail(n.op, "axis must be 0 or 1");
      }
      break;
    }
    case Op::Concat: {
      const Tensor& a = A();
      const Tensor& b = B();
      if (a.rank() == 1 && b.rank() == 1 && n.axis == 0) {
        ensure(n.value, {a.dim(0) + b.dim(0)});
        std::copy(a.data(), a.data() + a.numel(), n.value.data());
        std::copy(b.data(), b.data() + b.numel(), n.value.data() + a.numel());
        break;
      }
      require_rank2(n.op, a, "left");
      require_rank2(n.op, b, "right");
      if (n.axis == 0) {
        if (a.dim(1) != b.dim(1)) shape_fail(n.op, "column counts differ");
        ensure(n.value, {a.dim(0) + b.dim(0), a.dim(1)});
        std::copy(a.data(), a.data() + a.numel(), n.value.data());
        std::copy(b.data(), b.data() + b.numel(), n.value.data() + a.numel());
      } else if (n.axis == 1) {
        if (a.dim(0) != b.dim(0)) shape_fail(n.op, "row counts differ");
        const int64_t m = a.dim(0), ca = a.dim(1), cb = b.dim(1);
        ensure(n.value, {m, ca + cb});
        for (int64_t i = 0; i < m; ++i) {
          std::copy(a.data() + i * ca, a.data() + (i + 1) * ca,
                    n.value.data() + i * (ca + cb));
          std::copy(b.data() + i * cb, b.data() + (i + 1) * cb,
                    n.value.data() + i * (ca + cb) + ca);
        }
      } else {
        shape_fail(n.op, "axis must be 0 or 1");
      }
      break;
    }
    case Op::BroadcastRow: {
      const Tensor& v = A();
      if (!(v.rank() == 1 || (v.rank() == 2 && v.dim(0) == 1)))
        shape_fail(n.op, "input must be a row vector, got " +
                             Tensor::shape_str(v.shape()));
      const int64_t c = v.numel();
      ensure(n.value, {n.nrows, c});
      for (int64_t i = 0; i < n.nrows; ++i)
        std::copy(v.data(), v.data() + c, n.value.data() + i * c);
      break;
    }
    case Op::GatherRows: {
      const Tensor& a = A();
      const int64_t len = static_cast<int64_t>(n.indices.size());
      if (len == 0) shape_fail(n.op, "empty index set");
      const int64_t m = a.dim(0);
      for (int64_t idx : n.indices)
        if (idx < 0 || idx >= m)
          throw ShapeError("gather-rows: index " + std::to_string(idx) +
                           " out of range [0," + std::to_string(m) + ")");
      if (a.rank() == 1) {
        ensure(n.value, {len});
        for (int64_t r = 0; r < len; ++r)
          n.value[r] = a[n.indices[static_cast<size_t>(r)]];
      } else {
        require_rank2(n.op, a, "input");
        const int64_t c = a.dim(1);
        ensure(n.value, {len, c});
        for (int64_t r = 0; r < len; ++r)
          std::copy(a.data() + n.indices[static_cast<size_t>(r)] * c,
                    a.data() + (n.indices[static_cast<size_t>(r)] + 1) * c,
                    n.value.data() + r * c);
      }
      break;
    }
    case Op::SumSquare: {
      const Tensor& a = A();
      double s = 0.0;
      for (int64_t i = 0; i < a.numel(); ++i) s += a[i] * a[i];
      ensure(n.value, {1});
      n.value[0] = s;
      break;
    }
    case Op::Mmd2: {
      ensure(n.value, {1});
      n.value[0] = gabi::mmd2(A(), n.aux, n.bandwidth);
      break;
    }
  }
}

std::vector<char> Graph::reachable(const std::vector<Id>& roots) const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<Id> stack(roots);
  while (!stack.empty()) {
    const Id id = stack.back();
    stack.pop_back();
    if (seen[static_cast<size_t>(id)]) continue;
    seen[static_cast<size_t>(id)] = 1;
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.a >= 0) stack.push_back(n.a);
    if (n.b >= 0) stack.push_back(n.b);
  }
  return seen;
}

Tensor Graph::forward(Id root) {
  const auto seen = reachable({root});
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (!seen[i]) continue;
    Node& n = nodes_[i];
    if (n.op == Op::Leaf) {
      if (!n.value.all_finite())
        throw ValueError("non-finite value in leaf" +
                         (n.name.empty() ? std::string() : " " + n.name));
      continue;
    }
    compute(n);
    if (!n.value.all_finite())
      throw ValueError(std::string("non-finite value produced by ") +
                       op_name(n.op));
  }
  return nodes_[static_cast<size_t>(root)].value;
}

void Graph::accumulate(Id target, const Tensor& g) {
  Tensor& dst = nodes_[static_cast<size_t>(target)].grad;
  for (int64_t i = 0; i < g.numel(); ++i) dst[i] += g[i];
}

void Graph::backward(Id root) {
  const Tensor& v = value(root);
  if (!v.is_scalar())
    throw ShapeError("backward: root must be scalar-shaped, got " +
                     Tensor::shape_str(v.shape()));
  Tensor seed = v;
  for (int64_t i = 0; i < seed.numel(); ++i) seed[i] = 1.0;
  backward_seeded({{root, seed}});
}

void Graph::backward_seeded(const std::vector<std::pair<Id, Tensor>>& seeds) {
  std::vector<Id> roots;
  roots.reserve(seeds.size());
  for (const auto& [id, g] : seeds) {
    if (!g.same_shape(value(id)))
      throw ShapeError("backward: seed shape does not match node value");
    roots.push_back(id);
  }
  const auto seen = reachable(roots);
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (!seen[i]) {
      nodes_[i].grad = Tensor();  // not part of this sweep
      continue;
    }
    ensure(nodes_[i].grad, nodes_[i].value.shape());
    std::fill(nodes_[i].grad.data(),
              nodes_[i].grad.data() + nodes_[i].grad.numel(), 0.0);
  }
  for (const auto& [id, g] : seeds) accumulate(id, g);

  for (int64_t id = static_cast<int64_t>(nodes_.size()) - 1; id >= 0; --id) {
    if (!seen[static_cast<size_t>(id)]) continue;
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.op == Op::Leaf) continue;
    const Tensor& dY = n.grad;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        const Tensor& a = value(n.a);
        const Tensor& b = value(n.b);
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        Tensor& db = nodes_[static_cast<size_t>(n.b)].grad;
        // dA += dY Bᵀ ; dB += Aᵀ dY
        kernels::gemm_nt(dY.data(), b.data(), da.data(), a.dim(0), b.dim(1),
                         a.dim(1), /*acc=*/true);
        kernels::gemm_tn(a.data(), dY.data(), db.data(), a.dim(1), a.dim(0),
                         b.dim(1), /*acc=*/true);
        break;
      }
      case Op::SpMatMul: {
        // Graph operators are symmetric, so Sᵀ dY = S dY. Enforced where
        // the Csr is built (geometry module).
        Tensor& dx = nodes_[static_cast<size_t>(n.a)].grad;
        kernels::spmm(*n.sparse, dY.data(), dx.data(), dY.dim(1),
                      /*acc=*/true);
        break;
      }
      case Op::Add: {
        accumulate(n.a, dY);
        accumulate(n.b, dY);
        break;
      }
      case Op::Mul: {
        const Tensor& a = value(n.a);
        const Tensor& b = value(n.b);
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        Tensor& db = nodes_[static_cast<size_t>(n.b)].grad;
        for (int64_t i = 0; i < dY.numel(); ++i) {
          da[i] += dY[i] * b[i];
          db[i] += dY[i] * a[i];
        }
        break;
      }
      case Op::Scale: {
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        for (int64_t i = 0; i < dY.numel(); ++i) da[i] += n.alpha * dY[i];
        break;
      }
      case Op::Tanh: {
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        const Tensor& y = n.value;
        for (int64_t i = 0; i < dY.numel(); ++i)
          da[i] += dY[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::Relu: {
        const Tensor& x = value(n.a);
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        for (int64_t i = 0; i < dY.numel(); ++i)
          if (x[i] > 0.0) da[i] += dY[i];
        break;
      }
      case Op::ReduceMean: {
        const Tensor& a = value(n.a);
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        const int64_t m = a.dim(0), c = a.dim(1);
        if (n.axis == 0) {
          const double inv = 1.0 / static_cast<double>(m);
          for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < c; ++j) da(i, j) += dY[j] * inv;
        } else {
          const double inv = 1.0 / static_cast<double>(c);
          for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < c; ++j) da(i, j) += dY[i] * inv;
        }
        break;
      }
      case Op::Concat: {
        const Tensor& a = value(n.a);
        const Tensor& b = value(n.b);
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        Tensor& db = nodes_[static_cast<size_t>(n.b)].grad;
        if (n.value.rank() == 1 || n.axis == 0) {
          for (int64_t i = 0; i < a.numel(); ++i) da[i] += dY[i];
          for (int64_t i = 0; i < b.numel(); ++i) db[i] += dY[a.numel() + i];
        } else {
          const int64_t m = a.dim(0), ca = a.dim(1), cb = b.dim(1);
          for (int64_t i = 0; i < m; ++i) {
            for (int64_t j = 0; j < ca; ++j) da(i, j) += dY(i, j);
            for (int64_t j = 0; j < cb; ++j) db(i, j) += dY(i, ca + j);
          }
        }
        break;
      }
      case Op::BroadcastRow: {
        Tensor& dv = nodes_[static_cast<size_t>(n.a)].grad;
        const int64_t c = dv.numel();
        for (int64_t i = 0; i < n.nrows; ++i)
          for (int64_t j = 0; j < c; ++j) dv[j] += dY[i * c + j];
        break;
      }
      case Op::GatherRows: {
        const Tensor& a = value(n.a);
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        const int64_t c = a.rank() == 2 ? a.dim(1) : 1;
        for (size_t r = 0; r < n.indices.size(); ++r)
          for (int64_t j = 0; j < c; ++j)
            da[n.indices[r] * c + j] += dY[static_cast<int64_t>(r) * c + j];
        break;
      }
      case Op::SumSquare: {
        const Tensor& a = value(n.a);
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        const double s = 2.0 * dY[0];
        for (int64_t i = 0; i < a.numel(); ++i) da[i] += s * a[i];
        break;
      }
      case Op::Mmd2: {
        const Tensor g = mmd2_grad_x(value(n.a), n.aux, n.bandwidth);
        Tensor& da = nodes_[static_cast<size_t>(n.a)].grad;
        for (int64_t i = 0; i < g.numel(); ++i) da[i] += dY[0] * g[i];
        break;
      }
    }
  }
}

std::map<std::string, Tensor> Graph::named_grads() const {
  std::map<std::string, Tensor> out;
  for (const auto& n : nodes_) {
    if (!n.requires_grad || n.name.empty()) continue;
    out[n.name] = n.grad.numel() > 0 ? n.grad : Tensor(n.value.shape());
  }
  return out;
}

GradCheckReport grad_check(
    const std::function<double(const std::map<std::string, Tensor>&,
                               std::map<std::string, Tensor>*)>& eval,
    std::map<std::string, Tensor> params, double h, double tol) {
  GradCheckReport report;
  report.tol = tol;
  std::map<std::string, Tensor> ad;
  eval(params, &ad);
  for (auto& [name, p] : params) {
    const Tensor& g_ad = ad.at(name);
    Tensor g_fd(p.shape());
    for (int64_t i = 0; i < p.numel(); ++i) {
      const double orig = p[i];
      p[i] = orig + h;
      const double fp = eval(params, nullptr);
      p[i] = orig - h;
      const double fm = eval(params, nullptr);
      p[i] = orig;
      g_fd[i] = (fp - fm) / (2.0 * h);
    }
    double num = 0.0, da = 0.0, df = 0.0;
    for (int64_t i = 0; i < p.numel(); ++i) {
      num = std::max(num, std::fabs(g_ad[i] - g_fd[i]));
      da = std::max(da, std::fabs(g_ad[i]));
      df = std::max(df, std::fabs(g_fd[i]));
    }
    const double rel = num / std::max({da, df, 1e-12});
    report.entries.push_back({name, rel});
    report.max_rel_err = std::max(report.max_rel_err, rel);
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

Adam::Adam(AdamConfig cfg) : cfg_(cfg) {
  if (cfg_.beta1 < 0 || cfg_.beta1 >= 1 || cfg_.beta2 < 0 || cfg_.beta2 >= 1)
    throw ValueError("Adam: betas must lie in [0,1)");
  if (cfg_.eps <= 0) throw ValueError("Adam: eps must be positive");
}

void Adam::step(std::map<std::string, Tensor>& params,
                const std::map<std::string, Tensor>& grads) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (auto& [name, p] : params) {
    const auto it = grads.find(name);
    if (it == grads.end())
      throw ShapeError("adam_step: missing gradient for " + name);
    const Tensor& g = it->second;
    if (!g.same_shape(p))
      throw ShapeError("adam_step: gradient shape mismatch for " + name);
    Tensor& m = m_.try_emplace(name, Tensor(p.shape())).first->second;
    Tensor& v = v_.try_emplace(name, Tensor(p.shape())).first->second;
    if (!m.same_shape(p))
      throw ShapeError("adam_step: state shape mismatch for " + name);
    for (int64_t i = 0; i < p.numel(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    if (!p.all_finite())
      throw ValueError("adam_step: non-finite parameter " + name);
  }
}

}  // namespace gabi
