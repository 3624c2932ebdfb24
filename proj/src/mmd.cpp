#include "gabi/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gabi/errors.hpp"
#include "gabi/rng.hpp"

namespace gabi {

namespace {

void check_batch(const Tensor& x, const Tensor& y) {
  if (x.rank() != 2 || y.rank() != 2)
    throw ShapeError("mmd2: sample sets must be rank-2 (batch × dim)");
  if (x.dim(1) != y.dim(1))
    throw ShapeError("mmd2: sample sets differ in dimension");
  if (x.dim(0) < 2 || y.dim(0) < 2)
    throw ShapeError("mmd2: degenerate batch (need at least 2 samples each)");
}

inline double sqdist(const double* a, const double* b, int64_t d) {
  double s = 0.0;
  for (int64_t q = 0; q < d; ++q) {
    const double t = a[q] - b[q];
    s += t * t;
  }
  return s;
}

double row_kernel_sum(const double* xi, const Tensor& y, double inv2bw2) {
  const int64_t n = y.dim(0), d = y.dim(1);
  double s = 0.0;
  for (int64_t j = 0; j < n; ++j)
    s += std::exp(-sqdist(xi, y.data() + j * d, d) * inv2bw2);
  return s;
}

}  // namespace

namespace kernels_mmd {

double mean_kernel_serial(const Tensor& x, const Tensor& y, double bandwidth) {
  const int64_t m = x.dim(0), d = x.dim(1);
  const double inv2bw2 = 1.0 / (2.0 * bandwidth * bandwidth);
  double total = 0.0;
  for (int64_t i = 0; i < m; ++i)
    total += row_kernel_sum(x.data() + i * d, y, inv2bw2);
  return total / static_cast<double>(m * y.dim(0));
}

double mean_kernel(const Tensor& x, const Tensor& y, double bandwidth) {
  const int64_t m = x.dim(0), d = x.dim(1);
  const double inv2bw2 = 1.0 / (2.0 * bandwidth * bandwidth);
  std::vector<double> row(static_cast<size_t>(m));
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i)
    row[static_cast<size_t>(i)] = row_kernel_sum(x.data() + i * d, y, inv2bw2);
  double total = 0.0;
  for (int64_t i = 0; i < m; ++i) total += row[static_cast<size_t>(i)];
  return total / static_cast<double>(m * y.dim(0));
}

}  // namespace kernels_mmd

double mmd2(const Tensor& x, const Tensor& y, double bandwidth) {
  check_batch(x, y);
  if (!(bandwidth > 0)) throw ValueError("mmd2: bandwidth must be positive");
  const double kxx = kernels_mmd::mean_kernel(x, x, bandwidth);
  const double kyy = kernels_mmd::mean_kernel(y, y, bandwidth);
  const double kxy = kernels_mmd::mean_kernel(x, y, bandwidth);
  // The V-statistic is nonnegative in exact arithmetic; clamp rounding dust.
  return std::max(0.0, kxx + kyy - 2.0 * kxy);
}

Tensor mmd2_grad_x(const Tensor& x, const Tensor& y, double bandwidth) {
  check_batch(x, y);
  const int64_t m = x.dim(0), n = y.dim(0), d = x.dim(1);
  const double inv2bw2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const double invbw2 = 1.0 / (bandwidth * bandwidth);
  Tensor g({m, d});
  // d/dx_i mean_k(X,X) = (2/m²) Σ_l k(x_i,x_l)(x_l-x_i)/bw²
  // d/dx_i mean_k(X,Y) = (1/(mn)) Σ_j k(x_i,y_j)(y_j-x_i)/bw²
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double* xi = x.data() + i * d;
    double* gi = g.data() + i * d;
    for (int64_t l = 0; l < m; ++l) {
      const double* xl = x.data() + l * d;
      const double k = std::exp(-sqdist(xi, xl, d) * inv2bw2);
      const double c = 2.0 * k * invbw2 / static_cast<double>(m) /
                       static_cast<double>(m);
      for (int64_t q = 0; q < d; ++q) gi[q] += c * (xl[q] - xi[q]);
    }
    for (int64_t j = 0; j < n; ++j) {
      const double* yj = y.data() + j * d;
      const double k = std::exp(-sqdist(xi, yj, d) * inv2bw2);
      const double c = -2.0 * k * invbw2 / static_cast<double>(m) /
                       static_cast<double>(n);
      for (int64_t q = 0; q < d; ++q) gi[q] += c * (yj[q] - xi[q]);
    }
  }
  return g;
}

double median_heuristic_bandwidth(const Tensor& x, const Tensor& y,
                                  double floor) {
  check_batch(x, y);
  const int64_t m = x.dim(0), n = y.dim(0), d = x.dim(1);
  const int64_t total = m + n;
  std::vector<double> dist;
  dist.reserve(static_cast<size_t>(total * (total - 1) / 2));
  auto row = [&](int64_t i) {
    return i < m ? x.data() + i * d : y.data() + (i - m) * d;
  };
  for (int64_t i = 0; i < total; ++i)
    for (int64_t j = i + 1; j < total; ++j)
      dist.push_back(std::sqrt(sqdist(row(i), row(j), d)));
  std::sort(dist.begin(), dist.end());
  const size_t k = dist.size();
  const double med = (k % 2 == 1)
                         ? dist[k / 2]
                         : 0.5 * (dist[k / 2 - 1] + dist[k / 2]);
  return std::max(floor, med);
}

double mmd_null_threshold(int64_t n, int64_t d, double quantile, int reps,
                          uint64_t seed) {
  std::vector<double> vals(static_cast<size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    Rng rng = Rng::stream(seed, {0x6d6d64ULL, static_cast<uint64_t>(r)});
    Tensor x({n, d}), y({n, d});
    for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.normal();
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = rng.normal();
    const double bw = median_heuristic_bandwidth(x, y);
    vals[static_cast<size_t>(r)] = mmd2(x, y, bw);
  }
  std::sort(vals.begin(), vals.end());
  const double pos = quantile * static_cast<double>(vals.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, vals.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return vals[lo] + frac * (vals[hi] - vals[lo]);
}

}  // namespace gabi
