#ifndef GABI_MESH_HPP
#define GABI_MESH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gabi/kernels.hpp"
#include "gabi/rng.hpp"
#include "gabi/tensor.hpp"

namespace gabi {

/// Undirected attributed graph carrying a discretized geometry.
struct Mesh {
  Tensor coords;                              // N×d vertex positions
  std::vector<std::array<int64_t, 2>> edges;  // undirected, no self-loops
  std::vector<uint8_t> boundary;              // empty or N flags

  int64_t num_vertices() const { return coords.rows(); }
  int64_t dim() const { return coords.rank() == 2 ? coords.dim(1) : 0; }
};

/// Per-node field values with named channels.
struct Field {
  Tensor values;  // N×d_u
  std::vector<std::string> channel_names;

  int64_t num_nodes() const { return values.rows(); }
  int64_t channels() const { return values.cols(); }
};

/// Node/channel selection plus Gaussian noise level (Eq. y = H u + ξ).
struct ObservationOperator {
  std::vector<int64_t> node_ids;  // distinct, in range
  int64_t channel = 0;
  double sigma = 0.0;
};

struct GraphOperator {
  enum class Kind { NormalizedAdjacency, Laplacian };
  Kind kind;
  Csr matrix;  // symmetric
  std::string weighting;

  Tensor dense() const;
};

/// Structured nx×ny grid over [0,l]×[0,w] with 4-neighbor edges and
/// boundary flags on all four sides. Vertex (i,j) has index j*nx + i.
Mesh build_rectangle_mesh(double length, double width, int64_t nx, int64_t ny);

bool is_connected(const Mesh& mesh);

/// Â = D̂^{-1/2} (A_w + I) D̂^{-1/2} with edge weights 1/(1+distance) and
/// self-loop weight 1. Symmetric; spectral radius ≤ 1.
GraphOperator normalized_adjacency(const Mesh& mesh);

/// Combinatorial Laplacian L = D − A with unit weights. Symmetric PSD,
/// rows sum to zero.
GraphOperator graph_laplacian(const Mesh& mesh);

/// y_k = field[node_ids_k, channel] + σ·g_k with g i.i.d. standard normal.
std::vector<double> apply_observation(const ObservationOperator& op,
                                      const Field& field, Rng& rng);

/// Noiseless selection H·u.
std::vector<double> select_observation(const ObservationOperator& op,
                                       const Field& field);

/// Largest absolute eigenvalue estimate by power iteration (test oracle and
/// spectral-radius checks).
double spectral_radius(const Csr& m, int iters = 300, uint64_t seed = 0);

}  // namespace gabi

#endif  // GABI_MESH_HPP
