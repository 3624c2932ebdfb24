#include "gabi/gcn.hpp"

#include <cmath>

#include "gabi/errors.hpp"
#include "gabi/rng.hpp"

namespace gabi {

namespace {
std::map<std::string, std::vector<int64_t>> autoencoder_shapes(
    const GcnArchitecture& a) {
  std::map<std::string, std::vector<int64_t>> s;
  s["enc.in.w"] = {a.coord_dim + a.field_channels, a.hidden};
  s["enc.in.b"] = {a.hidden};
  for (int64_t l = 0; l < a.layers; ++l) {
    const int64_t out = (l == a.layers - 1) ? a.latent : a.hidden;
    s["enc.l" + std::to_string(l) + ".w"] = {2 * a.hidden, out};
    s["enc.l" + std::to_string(l) + ".b"] = {out};
  }
  s["dec.in.w"] = {a.coord_dim + a.latent, a.hidden};
  s["dec.in.b"] = {a.hidden};
  for (int64_t l = 0; l < a.layers; ++l) {
    s["dec.l" + std::to_string(l) + ".w"] = {2 * a.hidden, a.hidden};
    s["dec.l" + std::to_string(l) + ".b"] = {a.hidden};
  }
  s["dec.out.w"] = {a.hidden, a.field_channels};
  s["dec.out.b"] = {a.field_channels};
  return s;
}
}  // namespace

std::map<std::string, Tensor> init_autoencoder_params(
    const GcnArchitecture& arch, uint64_t seed) {
  Rng rng = Rng::stream(seed, {streams::kInit});
  std::map<std::string, Tensor> params;
  for (const auto& [name, shape] : autoencoder_shapes(arch)) {
    Tensor t(shape);
    if (shape.size() == 2) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = rng.uniform(-limit, limit);
    }
    params.emplace(name, std::move(t));
  }
  return params;
}

ParamLeaves add_param_leaves(Graph& g,
                             const std::map<std::string, Tensor>& params,
                             bool requires_grad) {
  ParamLeaves leaves;
  for (const auto& [name, value] : params)
    leaves.ids.emplace(name, g.leaf(value, name, requires_grad));
  return leaves;
}

Graph::Id gcn_nonlocal_layer(Graph& g, const Csr& adj, Graph::Id x,
                             Graph::Id w, Graph::Id b, bool activation) {
  const int64_t n = g.value(x).dim(0);
  const Graph::Id mean = g.reduce_mean(x, 0);
  const Graph::Id with_mean = g.concat(x, g.broadcast_row(mean, n), 1);
  const Graph::Id propagated = g.spmatmul(adj, with_mean);
  const Graph::Id affine =
      g.add(g.matmul(propagated, w), g.broadcast_row(b, n));
  return activation ? g.tanh(affine) : affine;
}

namespace {
Graph::Id input_projection(Graph& g, Graph::Id inputs, const ParamLeaves& p,
                           const std::string& prefix, int64_t n) {
  return g.add(g.matmul(inputs, p.at(prefix + ".in.w")),
               g.broadcast_row(p.at(prefix + ".in.b"), n));
}
}  // namespace

Graph::Id build_encoder_graph(Graph& g, const Csr& adj, const Tensor& coords,
                              Graph::Id u_norm_leaf, const ParamLeaves& p,
                              const GcnArchitecture& arch) {
  const int64_t n = coords.dim(0);
  const Graph::Id coords_leaf = g.leaf(coords, "", false);
  const Graph::Id inputs = g.concat(coords_leaf, u_norm_leaf, 1);
  Graph::Id x = input_projection(g, inputs, p, "enc", n);
  for (int64_t l = 0; l < arch.layers; ++l) {
    // The latent-producing layer stays linear; a bounded activation could
    // not cover the standard-normal latent target.
    const bool act = l != arch.layers - 1;
    x = gcn_nonlocal_layer(g, adj, x, p.at("enc.l" + std::to_string(l) + ".w"),
                           p.at("enc.l" + std::to_string(l) + ".b"), act);
  }
  return g.reduce_mean(x, 0);  // [1, latent]
}

Graph::Id build_decoder_graph(Graph& g, const Csr& adj, const Tensor& coords,
                              Graph::Id z, const ParamLeaves& p,
                              const GcnArchitecture& arch) {
  const int64_t n = coords.dim(0);
  const Graph::Id coords_leaf = g.leaf(coords, "", false);
  const Graph::Id inputs = g.concat(coords_leaf, g.broadcast_row(z, n), 1);
  Graph::Id x = input_projection(g, inputs, p, "dec", n);
  for (int64_t l = 0; l < arch.layers; ++l)
    x = gcn_nonlocal_layer(g, adj, x, p.at("dec.l" + std::to_string(l) + ".w"),
                           p.at("dec.l" + std::to_string(l) + ".b"), true);
  return g.add(g.matmul(x, p.at("dec.out.w")),
               g.broadcast_row(p.at("dec.out.b"), n));
}

Tensor encode(const Mesh& mesh, const Tensor& u_normalized,
              const std::map<std::string, Tensor>& params,
              const GcnArchitecture& arch) {
  const GraphOperator adj = normalized_adjacency(mesh);
  Graph g;
  const ParamLeaves p = add_param_leaves(g, params, false);
  const Graph::Id u = g.leaf(u_normalized, "u", false);
  const Graph::Id z = build_encoder_graph(g, adj.matrix, mesh.coords, u, p, arch);
  Tensor out({arch.latent});
  for (int64_t i = 0; i < arch.latent; ++i) out[i] = g.value(z)[i];
  return out;
}

Field decode(const Tensor& z, const Mesh& mesh,
             const std::map<std::string, Tensor>& params,
             const GcnArchitecture& arch, const Normalization& norm) {
  if (z.numel() != arch.latent)
    throw ShapeError("decode: latent dimension mismatch");
  if (!z.all_finite()) throw ValueError("decode: non-finite latent");
  const GraphOperator adj = normalized_adjacency(mesh);
  Graph g;
  const ParamLeaves p = add_param_leaves(g, params, false);
  Tensor zrow({1, arch.latent});
  for (int64_t i = 0; i < arch.latent; ++i) zrow[i] = z[i];
  const Graph::Id z_leaf = g.leaf(zrow, "z", false);
  const Graph::Id out =
      build_decoder_graph(g, adj.matrix, mesh.coords, z_leaf, p, arch);
  Field field;
  field.values = denormalize_field(g.value(out), norm);
  return field;
}

}  // namespace gabi
