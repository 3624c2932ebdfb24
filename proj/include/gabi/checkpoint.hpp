#ifndef GABI_CHECKPOINT_HPP
#define GABI_CHECKPOINT_HPP

#include <map>
#include <string>

#include <json.hpp>

#include "gabi/dataset.hpp"
#include "gabi/gcn.hpp"

namespace gabi {

/// Trained model state: named parameter tensors plus the architecture
/// descriptor, normalization statistics, and a digest of the training
/// configuration. `kind` distinguishes the autoencoder ("gabi") from the
/// direct-map regressor ("direct"); `extra` carries kind-specific metadata
/// such as the direct map's observation protocol.
struct Checkpoint {
  std::string kind = "gabi";
  GcnArchitecture arch;
  Normalization normalization;
  std::string config_digest;
  nlohmann::json extra = nlohmann::json::object();
  std::map<std::string, Tensor> params;
};

// GABW container: magic "GABW", u32 version=1, length-prefixed UTF-8 JSON
// descriptor, then per tensor (descriptor order): u32 name length, name,
// u32 rank, u32 dims, f64 little-endian data.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a digest used to key checkpoints to their training configuration.
std::string config_digest(const std::string& canonical_config);

}  // namespace gabi

#endif  // GABI_CHECKPOINT_HPP
