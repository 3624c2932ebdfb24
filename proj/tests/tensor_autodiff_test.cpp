#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gabi/autodiff.hpp"
#include "gabi/errors.hpp"
#include "gabi/rng.hpp"

using namespace gabi;

namespace {

Tensor randn(std::vector<int64_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

// Central finite differences against reverse mode for a scalar objective
// of a single named parameter.
double fd_rel_err(
    const std::function<double(const std::map<std::string, Tensor>&,
                               std::map<std::string, Tensor>*)>& eval,
    const Tensor& x0, double h = 1e-5) {
  const auto report = grad_check(eval, {{"x", x0}}, h, 1e-6);
  return report.max_rel_err;
}

}  // namespace

TEST_CASE("tensor shape/data consistency is enforced") {
  CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);
  const Tensor t({2, 2}, {1, 2, 3, 4});
  CHECK(t.numel() == 4);
  CHECK(t(1, 0) == 3);
}

TEST_CASE("forward examples: identity matmul, reduce-mean, tanh at zero") {
  Graph g;
  const auto eye = g.leaf(Tensor({2, 2}, {1, 0, 0, 1}));
  const auto v = g.leaf(Tensor({2, 1}, {3, 4}));
  const auto prod = g.matmul(eye, v);
  CHECK(g.value(prod)[0] == 3);
  CHECK(g.value(prod)[1] == 4);

  const auto m = g.leaf(Tensor({2, 2}, {1, 3, 5, 7}));
  const auto mean = g.reduce_mean(m, 0);
  CHECK(g.value(mean).shape() == std::vector<int64_t>{1, 2});
  CHECK(g.value(mean)[0] == 3);
  CHECK(g.value(mean)[1] == 5);

  const auto zeros = g.leaf(Tensor({2, 2}));
  const auto th = g.tanh(zeros);
  for (int64_t i = 0; i < 4; ++i) CHECK(g.value(th)[i] == 0.0);
}

TEST_CASE("backward examples: d(x^2)/dx and a linear map") {
  {
    Graph g;
    const auto x = g.param(Tensor({1}, {3.0}), "x");
    const auto root = g.sum_square(x);
    g.backward(root);
    CHECK(g.grad(x)[0] == doctest::Approx(6.0));
  }
  {
    Graph g;
    const auto w = g.leaf(Tensor({1, 2}, {1, 1}));
    const auto x = g.param(Tensor({2, 1}, {2, 5}), "x");
    const auto root = g.reduce_mean(g.matmul(w, x), 0);
    // root has shape [1,1]; scalar contract holds.
    g.backward(root);
    CHECK(g.grad(x)[0] == doctest::Approx(1.0));
    CHECK(g.grad(x)[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("backward errors on non-scalar roots") {
  Graph g;
  const auto x = g.param(Tensor({2, 2}, {1, 2, 3, 4}), "x");
  const auto y = g.tanh(x);
  CHECK_THROWS_AS(g.backward(y), ShapeError);
}

TEST_CASE("random 3-layer MLP gradients match finite differences") {
  Rng rng(21);
  const Tensor x0 = randn({4, 3}, rng, 0.7);
  const Tensor w1 = randn({3, 5}, rng, 0.7);
  const Tensor w2 = randn({5, 4}, rng, 0.7);
  const Tensor w3 = randn({4, 1}, rng, 0.7);
  auto eval = [&](const std::map<std::string, Tensor>& params,
                  std::map<std::string, Tensor>* grads) {
    Graph g;
    const auto x = g.param(params.at("x"), "x");
    const auto h1 = g.tanh(g.matmul(x, g.leaf(w1)));
    const auto h2 = g.tanh(g.matmul(h1, g.leaf(w2)));
    const auto out = g.sum_square(g.matmul(h2, g.leaf(w3)));
    if (grads) {
      g.backward(out);
      *grads = g.named_grads();
    }
    return g.value(out)[0];
  };
  CHECK(fd_rel_err(eval, x0) <= 1e-6);
}

TEST_CASE("grad_check passes for sum-square and tanh chains, flags faults") {
  Rng rng(31);
  {
    const auto report = grad_check(
        [](const std::map<std::string, Tensor>& p,
           std::map<std::string, Tensor>* grads) {
          Graph g;
          const auto x = g.param(p.at("x"), "x");
          const auto root = g.sum_square(x);
          if (grads) {
            g.backward(root);
            *grads = g.named_grads();
          }
          return g.value(root)[0];
        },
        {{"x", randn({5}, rng)}}, 1e-5, 1e-6);
    CHECK(report.pass);
  }
  {
    const auto report = grad_check(
        [](const std::map<std::string, Tensor>& p,
           std::map<std::string, Tensor>* grads) {
          Graph g;
          auto x = g.param(p.at("x"), "x");
          Graph::Id h = x;
          for (int d = 0; d < 4; ++d) h = g.tanh(h);
          const auto root = g.sum_square(h);
          if (grads) {
            g.backward(root);
            *grads = g.named_grads();
          }
          return g.value(root)[0];
        },
        {{"x", randn({3, 3}, rng, 0.8)}}, 1e-5, 1e-5);
    CHECK(report.pass);
  }
  {
    // A corrupted gradient (+0.1) must be detected.
    const auto report = grad_check(
        [](const std::map<std::string, Tensor>& p,
           std::map<std::string, Tensor>* grads) {
          Graph g;
          const auto x = g.param(p.at("x"), "x");
          const auto root = g.sum_square(x);
          if (grads) {
            g.backward(root);
            *grads = g.named_grads();
            (*grads)["x"][0] += 0.1;
          }
          return g.value(root)[0];
        },
        {{"x", randn({4}, rng)}}, 1e-5, 1e-6);
    CHECK_FALSE(report.pass);
  }
}

TEST_CASE("every primitive matches central finite differences") {
  Rng rng(77);
  int checks = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const int64_t m = 2 + static_cast<int64_t>(rng.below(4));
    const int64_t k = 2 + static_cast<int64_t>(rng.below(4));
    const int64_t n = 2 + static_cast<int64_t>(rng.below(4));

    // matmul, both operands
    {
      const Tensor a0 = randn({m, k}, rng), b0 = randn({k, n}, rng);
      auto eval = [&](const std::map<std::string, Tensor>& p,
                      std::map<std::string, Tensor>* grads) {
        Graph g;
        const auto a = g.param(p.at("a"), "a");
        const auto b = g.param(p.at("b"), "b");
        const auto root = g.sum_square(g.matmul(a, b));
        if (grads) {
          g.backward(root);
          *grads = g.named_grads();
        }
        return g.value(root)[0];
      };
      const auto report = grad_check(eval, {{"a", a0}, {"b", b0}}, 1e-5, 1e-6);
      CHECK(report.pass);
      ++checks;
    }
    // add, mul, scale
    {
      const Tensor a0 = randn({m, n}, rng), b0 = randn({m, n}, rng);
      auto eval = [&](const std::map<std::string, Tensor>& p,
                      std::map<std::string, Tensor>* grads) {
        Graph g;
        const auto a = g.param(p.at("a"), "a");
        const auto b = g.param(p.at("b"), "b");
        const auto root =
            g.sum_square(g.scale(g.mul(g.add(a, b), b), 0.7));
        if (grads) {
          g.backward(root);
          *grads = g.named_grads();
        }
        return g.value(root)[0];
      };
      const auto report = grad_check(eval, {{"a", a0}, {"b", b0}}, 1e-5, 1e-6);
      CHECK(report.pass);
      ++checks;
    }
    // tanh
    {
      auto eval = [&](const std::map<std::string, Tensor>& p,
                      std::map<std::string, Tensor>* grads) {
        Graph g;
        const auto a = g.param(p.at("a"), "a");
        const auto root = g.sum_square(g.tanh(a));
        if (grads) {
          g.backward(root);
          *grads = g.named_grads();
        }
        return g.value(root)[0];
      };
      const auto report =
          grad_check(eval, {{"a", randn({m, n}, rng)}}, 1e-5, 1e-6);
      CHECK(report.pass);
      ++checks;
    }
    // relu, inputs kept away from the kink
    {
      Tensor a0 = randn({m, n}, rng);
      for (int64_t i = 0; i < a0.numel(); ++i)
        if (std::fabs(a0[i]) < 0.05) a0[i] = 0.3;
      auto eval = [&](const std::map<std::string, Tensor>& p,
                      std::map<std::string, Tensor>* grads) {
        Graph g;
        const auto a = g.param(p.at("a"), "a");
        const auto root = g.sum_square(g.relu(a));
        if (grads) {
          g.backward(root);
          *grads = g.named_grads();
        }
        return g.value(root)[0];
      };
      const auto report = grad_check(eval, {{"a", a0}}, 1e-5, 1e-6);
      CHECK(report.pass);
      ++checks;
    }
    // reduce-mean both axes, concat both axes, broadcast-row, gather-rows
    {
      const Tensor a0 = randn({m, n}, rng), b0 = randn({m, n}, rng);
      const Tensor v0 = randn({n}, rng);
      std::vector<int64_t> idx;
      for (int64_t i = 0; i < 2 * m; ++i)
        idx.push_back(static_cast<int64_t>(rng.below(static_cast<uint64_t>(2 * m))));
      auto eval = [&](const std::map<std::string, Tensor>& p,
                      std::map<std::string, Tensor>* grads) {
        Graph g;
        const auto a = g.param(p.at("a"), "a");
        const auto b = g.param(p.at("b"), "b");
        const auto v = g.param(p.at("v"), "v");
        const auto cat0 = g.concat(a, b, 0);                    // [2m,n]
        const auto picked = g.gather_rows(cat0, idx);           // [2m,n]
        const auto bro = g.broadcast_row(v, 2 * m);             // [2m,n]
        const auto mixed = g.mul(picked, bro);
        const auto m0 = g.reduce_mean(mixed, 0);                // [1,n]
        const auto m1 = g.reduce_mean(mixed, 1);                // [2m,1]
        const auto cat1 = g.concat(mixed, g.broadcast_row(m0, 2 * m), 1);
        const auto root = g.add(g.sum_square(cat1),
                                g.add(g.sum_square(m0), g.sum_square(m1)));
        if (grads) {
          g.backward(root);
          *grads = g.named_grads();
        }
        return g.value(root)[0];
      };
      const auto report = grad_check(
          eval, {{"a", a0}, {"b", b0}, {"v", v0}}, 1e-5, 1e-6);
      CHECK(report.pass);
      ++checks;
    }
    // spmm with a symmetric sparse constant
    {
      std::vector<int64_t> rows, cols;
      std::vector<double> vals;
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = i; j < m; ++j)
          if (i == j || rng.uniform() < 0.5) {
            const double v = rng.normal();
            rows.push_back(i);
            cols.push_back(j);
            vals.push_back(v);
            if (i != j) {
              rows.push_back(j);
              cols.push_back(i);
              vals.push_back(v);
            }
          }
      const Csr s = Csr::from_triplets(m, rows, cols, vals);
      auto eval = [&](const std::map<std::string, Tensor>& p,
                      std::map<std::string, Tensor>* grads) {
        Graph g;
        const auto x = g.param(p.at("x"), "x");
        const auto root = g.sum_square(g.spmatmul(s, x));
        if (grads) {
          g.backward(root);
          *grads = g.named_grads();
        }
        return g.value(root)[0];
      };
      const auto report =
          grad_check(eval, {{"x", randn({m, n}, rng)}}, 1e-5, 1e-6);
      CHECK(report.pass);
      ++checks;
    }
    // mmd2 against a constant reference batch
    {
      const Tensor y0 = randn({m + 1, n}, rng);
      auto eval = [&](const std::map<std::string, Tensor>& p,
                      std::map<std::string, Tensor>* grads) {
        Graph g;
        const auto x = g.param(p.at("x"), "x");
        const auto root = g.mmd2(x, y0, 1.5);
        if (grads) {
          g.backward(root);
          *grads = g.named_grads();
        }
        return g.value(root)[0];
      };
      const auto report =
          grad_check(eval, {{"x", randn({m, n}, rng)}}, 1e-5, 1e-6);
      CHECK(report.pass);
      ++checks;
    }
  }
  CHECK(checks >= 70);  // x several parameters each: >100 randomized shapes
}

TEST_CASE("forward and backward are deterministic") {
  Rng rng(9);
  const Tensor x0 = randn({6, 4}, rng);
  // Two identical builds, bitwise equal values and grads.
  Rng r1(55), r2(55);
  const Tensor w1 = randn({4, 3}, r1), w2 = randn({4, 3}, r2);
  Graph g1, g2;
  const auto x1 = g1.param(x0, "x");
  const auto root1 = g1.sum_square(g1.tanh(g1.matmul(x1, g1.leaf(w1))));
  const auto x2 = g2.param(x0, "x");
  const auto root2 = g2.sum_square(g2.tanh(g2.matmul(x2, g2.leaf(w2))));
  CHECK(g1.value(root1) == g2.value(root2));
  g1.backward(root1);
  g2.backward(root2);
  CHECK(g1.grad(x1) == g2.grad(x2));
}

TEST_CASE("concat then gather-rows with complementary sets reconstructs") {
  Rng rng(41);
  const int64_t m = 9, n = 5;
  const Tensor x = randn({m, n}, rng);
  std::vector<int64_t> perm(static_cast<size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  for (int64_t i = m - 1; i > 0; --i)
    std::swap(perm[static_cast<size_t>(i)],
              perm[static_cast<size_t>(rng.below(static_cast<uint64_t>(i + 1)))]);
  const std::vector<int64_t> top(perm.begin(), perm.begin() + 4);
  const std::vector<int64_t> bottom(perm.begin() + 4, perm.end());

  Graph g;
  const auto xl = g.leaf(x);
  const auto cat = g.concat(g.gather_rows(xl, top), g.gather_rows(xl, bottom), 0);
  std::vector<int64_t> inverse(static_cast<size_t>(m));
  for (int64_t i = 0; i < m; ++i) inverse[static_cast<size_t>(perm[static_cast<size_t>(i)])] = i;
  const auto back = g.gather_rows(cat, inverse);
  CHECK(g.value(back) == x);
}

TEST_CASE("shape errors name the offending primitive") {
  Graph g;
  const auto a = g.leaf(Tensor({2, 3}));
  const auto b = g.leaf(Tensor({2, 3}));
  CHECK_THROWS_WITH_AS(g.matmul(a, b),
                       doctest::Contains("matmul"), ShapeError);
  CHECK_THROWS_WITH_AS(g.concat(a, g.leaf(Tensor({3, 2})), 1),
                       doctest::Contains("concat"), ShapeError);
}

TEST_CASE("non-finite values are rejected with a clear error") {
  Graph g;
  const auto big = g.leaf(Tensor({1, 1}, {1e308}));
  CHECK_THROWS_AS(g.mul(big, big), ValueError);
}

TEST_CASE("adam first-step magnitude and zero-gradient fixpoint") {
  {
    Adam adam({1e-3, 0.9, 0.999, 1e-8});
    std::map<std::string, Tensor> params{{"p", Tensor({1}, {0.5})}};
    adam.step(params, {{"p", Tensor({1}, {1.0})}});
    CHECK(params.at("p")[0] == doctest::Approx(0.5 - 1e-3).epsilon(1e-6));
  }
  {
    Adam adam({1e-3, 0.9, 0.999, 1e-8});
    std::map<std::string, Tensor> params{{"p", Tensor({2}, {0.5, -0.25})}};
    adam.step(params, {{"p", Tensor({2})}});
    CHECK(params.at("p")[0] == 0.5);
    CHECK(params.at("p")[1] == -0.25);
  }
  {
    Adam adam({1e-3, 0.9, 0.999, 1e-8});
    std::map<std::string, Tensor> params{{"p", Tensor({1}, {0.5})}};
    adam.step(params, {{"p", Tensor({1}, {-1.0})}});
    CHECK(params.at("p")[0] == doctest::Approx(0.5 + 1e-3).epsilon(1e-6));
  }
}

TEST_CASE("adam rejects mismatched gradient shapes") {
  Adam adam;
  std::map<std::string, Tensor> params{{"p", Tensor({2})}};
  CHECK_THROWS_AS(adam.step(params, {{"p", Tensor({3})}}), ShapeError);
}

TEST_CASE("forward() recomputes after leaf mutation") {
  Graph g;
  const auto x = g.leaf(Tensor({2}, {1.0, 2.0}), "x");
  const auto root = g.sum_square(x);
  CHECK(g.value(root)[0] == doctest::Approx(5.0));
  g.leaf_value(x)[0] = 3.0;
  const Tensor v = g.forward(root);
  CHECK(v[0] == doctest::Approx(13.0));
}
