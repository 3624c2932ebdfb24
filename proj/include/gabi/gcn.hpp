#ifndef GABI_GCN_HPP
#define GABI_GCN_HPP

#include <map>
#include <string>

#include "gabi/autodiff.hpp"
#include "gabi/dataset.hpp"
#include "gabi/mesh.hpp"

namespace gabi {

/// Geometry-conditioned autoencoder built from nonlocal GCN layers.
/// The encoder maps node inputs [coords ‖ u] through `layers` stacked
/// nonlocal layers to an N×latent feature block and mean-pools it to a
/// latent vector; the decoder expands [coords ‖ z] back to d_u channels.
struct GcnArchitecture {
  int64_t coord_dim = 2;
  int64_t field_channels = 1;
  int64_t hidden = 64;
  int64_t latent = 32;
  int64_t layers = 4;

  bool operator==(const GcnArchitecture&) const = default;
};

/// Glorot-uniform weights and zero biases; draw order follows the sorted
/// parameter names so initialization is reproducible.
std::map<std::string, Tensor> init_autoencoder_params(
    const GcnArchitecture& arch, uint64_t seed);

struct ParamLeaves {
  std::map<std::string, Graph::Id> ids;
  Graph::Id at(const std::string& name) const { return ids.at(name); }
};
ParamLeaves add_param_leaves(Graph& g,
                             const std::map<std::string, Tensor>& params,
                             bool requires_grad);

/// One nonlocal GCN layer: act(Â·[X ‖ broadcast(mean_rows(X))]·W + b).
/// `activation` false yields the linear variant used by the encoder's
/// latent-producing layer.
Graph::Id gcn_nonlocal_layer(Graph& g, const Csr& adj, Graph::Id x,
                             Graph::Id w, Graph::Id b, bool activation);

/// Encoder graph. `u_norm_leaf` holds the normalized N×d_u field; returns
/// the [1,latent] latent node.
Graph::Id build_encoder_graph(Graph& g, const Csr& adj, const Tensor& coords,
                              Graph::Id u_norm_leaf, const ParamLeaves& p,
                              const GcnArchitecture& arch);

/// Decoder graph from a [1,latent] node to the normalized N×d_u output.
Graph::Id build_decoder_graph(Graph& g, const Csr& adj, const Tensor& coords,
                              Graph::Id z, const ParamLeaves& p,
                              const GcnArchitecture& arch);

/// Deterministic eager evaluation (no gradients): latent vector of a
/// normalized field.
Tensor encode(const Mesh& mesh, const Tensor& u_normalized,
              const std::map<std::string, Tensor>& params,
              const GcnArchitecture& arch);

/// Decode a latent vector to field units (de-normalized).
Field decode(const Tensor& z, const Mesh& mesh,
             const std::map<std::string, Tensor>& params,
             const GcnArchitecture& arch, const Normalization& norm);

}  // namespace gabi

#endif  // GABI_GCN_HPP
