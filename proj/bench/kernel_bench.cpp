// Serial-reference vs OpenMP kernel comparison at the shapes the training
// and inversion loops actually hit.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gabi/kernels.hpp"
#include "gabi/mesh.hpp"
#include "gabi/mmd.hpp"
#include "gabi/rng.hpp"

using namespace gabi;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() /
         static_cast<double>(reps);
}

void report(const std::string& name, double flops, double serial_s,
            double omp_s) {
  std::printf("%-28s serial %8.3f ms (%6.2f GF/s)   omp %8.3f ms (%6.2f GF/s)   speedup %.2fx\n",
              name.c_str(), serial_s * 1e3, flops / serial_s / 1e9,
              omp_s * 1e3, flops / omp_s / 1e9, serial_s / omp_s);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  Rng rng(7);

  {
    const int64_t m = 1089, k = 128, n = 64;
    std::vector<double> a(m * k), b(k * n), c(m * n), c_ref(m * n);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    const double flops = 2.0 * m * k * n;
    const double ts = time_of(
        [&] { kernels::gemm_nn_serial(a.data(), b.data(), c_ref.data(), m, k, n); },
        50);
    const double tp = time_of(
        [&] { kernels::gemm_nn(a.data(), b.data(), c.data(), m, k, n); }, 50);
    report("gemm_nn 1089x128x64", flops, ts, tp);
    bool same = true;
    for (size_t i = 0; i < c.size(); ++i) same &= (c[i] == c_ref[i]);
    std::printf("  bit-identical: %s\n", same ? "yes" : "NO");
  }

  {
    const Mesh mesh = build_rectangle_mesh(1.0, 1.0, 33, 33);
    const GraphOperator adj = normalized_adjacency(mesh);
    const int64_t n = mesh.num_vertices(), c = 128;
    std::vector<double> x(n * c), y(n * c), y_ref(n * c);
    for (auto& v : x) v = rng.normal();
    const double flops = 2.0 * static_cast<double>(adj.matrix.nnz()) * c;
    const double ts = time_of(
        [&] { kernels::spmm_serial(adj.matrix, x.data(), y_ref.data(), c); },
        200);
    const double tp = time_of(
        [&] { kernels::spmm(adj.matrix, x.data(), y.data(), c); }, 200);
    report("spmm 33x33 grid, c=128", flops, ts, tp);
    bool same = true;
    for (size_t i = 0; i < y.size(); ++i) same &= (y[i] == y_ref[i]);
    std::printf("  bit-identical: %s\n", same ? "yes" : "NO");
  }

  {
    const int64_t m = 256, d = 32;
    Tensor x({m, d}), y({m, d});
    for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.normal();
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = rng.normal();
    const double flops = 3.0 * static_cast<double>(m) * m * d;  // ~pair ops
    const double ts = time_of(
        [&] { kernels_mmd::mean_kernel_serial(x, y, 1.5); }, 200);
    const double tp =
        time_of([&] { kernels_mmd::mean_kernel(x, y, 1.5); }, 200);
    report("mmd mean-kernel 256x32", flops, ts, tp);
    const double vs = kernels_mmd::mean_kernel_serial(x, y, 1.5);
    const double vp = kernels_mmd::mean_kernel(x, y, 1.5);
    std::printf("  bit-identical: %s\n", vs == vp ? "yes" : "NO");
  }

  return 0;
}
