#ifndef GABI_MMD_HPP
#define GABI_MMD_HPP

#include <cstdint>

#include "gabi/tensor.hpp"

namespace gabi {

/// Biased (V-statistic) squared maximum mean discrepancy between sample sets
/// X (m×d) and Y (n×d) under the Gaussian kernel
/// k(a,b) = exp(-||a-b||² / (2·bandwidth²)). Nonnegative; exactly 0 for X==Y.
double mmd2(const Tensor& x, const Tensor& y, double bandwidth);

/// Gradient of mmd2 with respect to X (Y treated as constant).
Tensor mmd2_grad_x(const Tensor& x, const Tensor& y, double bandwidth);

/// Median of pairwise Euclidean distances over the union of both sample
/// sets, floored below. Recomputed per call; the standard scale heuristic.
double median_heuristic_bandwidth(const Tensor& x, const Tensor& y,
                                  double floor = 1e-3);

/// Monte Carlo null threshold: the q-quantile of mmd2 between two fresh
/// N(0,I_d) batches of n rows each (median-heuristic bandwidth per
/// replicate), over `reps` replicates.
double mmd_null_threshold(int64_t n, int64_t d, double quantile, int reps,
                          uint64_t seed);

namespace kernels_mmd {
// Mean Gaussian-kernel value over all pairs (V-statistic, diagonal
// included when x and y are the same set). Serial reference + OpenMP pair;
// per-row partials are reduced in fixed order, so both are bit-identical.
double mean_kernel_serial(const Tensor& x, const Tensor& y, double bandwidth);
double mean_kernel(const Tensor& x, const Tensor& y, double bandwidth);
}  // namespace kernels_mmd

}  // namespace gabi

#endif  // GABI_MMD_HPP
