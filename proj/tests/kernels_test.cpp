#include <doctest.h>

#include <vector>

#include "gabi/kernels.hpp"
#include "gabi/rng.hpp"

using namespace gabi;

namespace {
std::vector<double> random_vec(int64_t n, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = rng.normal();
  return v;
}
}  // namespace

TEST_CASE("gemm variants match serial reference bit for bit") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t m = 1 + static_cast<int64_t>(rng.below(40));
    const int64_t k = 1 + static_cast<int64_t>(rng.below(40));
    const int64_t n = 1 + static_cast<int64_t>(rng.below(40));
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    std::vector<double> c1(static_cast<size_t>(m * n)), c2 = c1;
    kernels::gemm_nn_serial(a.data(), b.data(), c1.data(), m, k, n);
    kernels::gemm_nn(a.data(), b.data(), c2.data(), m, k, n);
    CHECK(c1 == c2);

    const auto bt = random_vec(n * k, rng);
    kernels::gemm_nt_serial(a.data(), bt.data(), c1.data(), m, k, n);
    kernels::gemm_nt(a.data(), bt.data(), c2.data(), m, k, n);
    CHECK(c1 == c2);

    const auto at = random_vec(k * m, rng);
    const auto b2 = random_vec(k * n, rng);
    kernels::gemm_tn_serial(at.data(), b2.data(), c1.data(), m, k, n);
    kernels::gemm_tn(at.data(), b2.data(), c2.data(), m, k, n);
    CHECK(c1 == c2);
  }
}

TEST_CASE("gemm_nt and gemm_tn agree with gemm_nn on explicit transposes") {
  Rng rng(5);
  const int64_t m = 7, k = 5, n = 6;
  const auto a = random_vec(m * k, rng);
  const auto b = random_vec(k * n, rng);
  // bt[j,p] = b[p,j]
  std::vector<double> bt(static_cast<size_t>(n * k));
  for (int64_t p = 0; p < k; ++p)
    for (int64_t j = 0; j < n; ++j)
      bt[static_cast<size_t>(j * k + p)] = b[static_cast<size_t>(p * n + j)];
  std::vector<double> c_nn(static_cast<size_t>(m * n)), c_nt = c_nn;
  kernels::gemm_nn_serial(a.data(), b.data(), c_nn.data(), m, k, n);
  kernels::gemm_nt_serial(a.data(), bt.data(), c_nt.data(), m, k, n);
  for (size_t i = 0; i < c_nn.size(); ++i)
    CHECK(c_nn[i] == doctest::Approx(c_nt[i]).epsilon(1e-13));

  std::vector<double> at(static_cast<size_t>(k * m));
  for (int64_t i = 0; i < m; ++i)
    for (int64_t p = 0; p < k; ++p)
      at[static_cast<size_t>(p * m + i)] = a[static_cast<size_t>(i * k + p)];
  std::vector<double> c_tn(static_cast<size_t>(m * n));
  kernels::gemm_tn_serial(at.data(), b.data(), c_tn.data(), m, k, n);
  for (size_t i = 0; i < c_nn.size(); ++i)
    CHECK(c_nn[i] == doctest::Approx(c_tn[i]).epsilon(1e-13));
}

TEST_CASE("gemm accumulate flag adds into the output") {
  Rng rng(3);
  const int64_t m = 4, k = 3, n = 5;
  const auto a = random_vec(m * k, rng);
  const auto b = random_vec(k * n, rng);
  std::vector<double> base(static_cast<size_t>(m * n), 2.0);
  std::vector<double> prod(static_cast<size_t>(m * n));
  kernels::gemm_nn(a.data(), b.data(), prod.data(), m, k, n);
  std::vector<double> acc = base;
  kernels::gemm_nn(a.data(), b.data(), acc.data(), m, k, n, /*acc=*/true);
  for (size_t i = 0; i < acc.size(); ++i)
    CHECK(acc[i] == doctest::Approx(base[i] + prod[i]));
}

TEST_CASE("csr from_triplets sorts columns and spmm matches a dense product") {
  Rng rng(17);
  const int64_t n = 12;
  std::vector<int64_t> rows, cols;
  std::vector<double> vals;
  std::vector<double> dense(static_cast<size_t>(n * n), 0.0);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j)
      if (rng.uniform() < 0.3) {
        const double v = rng.normal();
        rows.push_back(i);
        cols.push_back(j);
        vals.push_back(v);
        dense[static_cast<size_t>(i * n + j)] = v;
      }
  const Csr s = Csr::from_triplets(n, rows, cols, vals);
  const int64_t c = 4;
  const auto x = random_vec(n * c, rng);
  std::vector<double> y_sp(static_cast<size_t>(n * c));
  std::vector<double> y_dense(static_cast<size_t>(n * c));
  kernels::spmm_serial(s, x.data(), y_sp.data(), c);
  kernels::gemm_nn_serial(dense.data(), x.data(), y_dense.data(), n, n, c);
  for (size_t i = 0; i < y_sp.size(); ++i)
    CHECK(y_sp[i] == doctest::Approx(y_dense[i]).epsilon(1e-12));

  std::vector<double> y_omp(static_cast<size_t>(n * c));
  kernels::spmm(s, x.data(), y_omp.data(), c);
  CHECK(y_omp == y_sp);
}
