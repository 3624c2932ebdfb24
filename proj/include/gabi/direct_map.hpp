#ifndef GABI_DIRECT_MAP_HPP
#define GABI_DIRECT_MAP_HPP

#include <span>

#include "gabi/checkpoint.hpp"
#include "gabi/dataset.hpp"

namespace gabi {

/// Train-time observation protocol for the supervised direct map: a fresh
/// mask of `count` uniformly random distinct nodes per sample per
/// iteration, observing one channel with Gaussian noise sigma. With
/// random_sigma the noise level is redrawn per sample from the shifted
/// log-normal prior (unknown-noise comparisons).
struct ObsProtocol {
  int64_t count = 10;
  double sigma = 1e-2;
  int64_t channel = 0;
  bool random_sigma = false;
};

struct DirectMapConfig {
  int64_t hidden = 64;
  int64_t layers = 4;
  int64_t iterations = 2000;
  int64_t batch_size = 16;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;
  std::string digest;
};

/// Supervised regression (observations, geometry) -> full field. Node
/// inputs are [coords ‖ masked-y ‖ observed-onehot]; the regression target
/// is the full normalized field. Returns per-iteration MSE alongside the
/// checkpoint.
std::pair<Checkpoint, std::vector<double>> train_direct_map(
    const Dataset& ds, const ObsProtocol& protocol, const DirectMapConfig& cfg,
    uint64_t seed);

/// Deterministic prediction. Logs a protocol-mismatch warning (not fatal)
/// when the observation disagrees with the training protocol.
Field predict_direct_map(const Checkpoint& ckpt, const Mesh& mesh,
                         const ObservationOperator& observation,
                         std::span<const double> y);

}  // namespace gabi

#endif  // GABI_DIRECT_MAP_HPP
