#ifndef GABI_DATASET_HPP
#define GABI_DATASET_HPP

#include <string>
#include <utility>
#include <vector>

#include "gabi/mesh.hpp"

namespace gabi {

/// Per-channel standardization statistics (training split only).
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stdev;

  int64_t channels() const { return static_cast<int64_t>(mean.size()); }
  bool operator==(const Normalization&) const = default;
};

struct Dataset {
  std::vector<std::pair<Mesh, Field>> samples;
  Normalization normalization;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  int64_t channels() const {
    return samples.empty() ? normalization.channels()
                           : samples.front().second.channels();
  }
};

/// Mean/std per channel over every node of every sample; std floored at
/// 1e-12 so constant channels stay usable.
Normalization compute_normalization(const Dataset& ds);

Tensor normalize_field(const Tensor& values, const Normalization& norm);
Tensor denormalize_field(const Tensor& values, const Normalization& norm);

// GABD container. All integers little-endian. Layout:
//   magic "GABD", u32 version=1, u64 sample count;
//   per sample: u32 N, u32 E, u32 d, u32 d_u,
//               coords f64 N·d, edges u32 E·2, field f64 N·d_u;
//   footer: u32 channel count, then per channel f64 mean, f64 std.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

}  // namespace gabi

#endif  // GABI_DATASET_HPP
