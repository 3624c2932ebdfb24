#ifndef GABI_TRAIN_HPP
#define GABI_TRAIN_HPP

#include <utility>
#include <vector>

#include "gabi/checkpoint.hpp"
#include "gabi/dataset.hpp"

namespace gabi {

struct TrainConfig {
  GcnArchitecture arch;
  int64_t iterations = 3000;
  int64_t batch_size = 16;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;  // per-iteration multiplicative factor; 1 = constant
  double mmd_weight = 1.0;
  double bandwidth_floor = 1e-3;
  std::string digest;  // recorded in the checkpoint
};

/// Per-iteration loss terms. The mmd column is always the unweighted value;
/// with mmd_weight = 0 it is reported but takes no part in the gradient.
struct LossTrace {
  std::vector<double> recon;
  std::vector<double> mmd;
};

/// Minibatch training of the reconstruction + latent-divergence objective:
/// mean over the batch of per-sample MSE plus mmd_weight · mmd2 between the
/// encoded batch and a fresh standard-normal reference batch of equal size
/// (median-heuristic bandwidth, recomputed each iteration).
std::pair<Checkpoint, LossTrace> train_autoencoder(const Dataset& ds,
                                                   const TrainConfig& cfg,
                                                   uint64_t seed);

/// Normalize with the checkpoint's statistics and encode.
Tensor encode_field(const Checkpoint& ckpt, const Mesh& mesh,
                    const Field& field);

/// Decode a latent draw to field units.
Field decode_latent(const Checkpoint& ckpt, const Mesh& mesh, const Tensor& z);

/// Encoded training set, one row per sample.
Tensor encode_dataset(const Checkpoint& ckpt, const Dataset& ds);

}  // namespace gabi

#endif  // GABI_TRAIN_HPP
