#include "gabi/direct_map.hpp"

#include <cmath>
#include <iostream>

#include "gabi/errors.hpp"
#include "gabi/rng.hpp"

namespace gabi {

namespace {

std::map<std::string, std::vector<int64_t>> direct_shapes(
    int64_t coord_dim, int64_t d_u, int64_t hidden, int64_t layers) {
  std::map<std::string, std::vector<int64_t>> s;
  s["dm.in.w"] = {coord_dim + 2, hidden};  // coords, masked-y, mask
  s["dm.in.b"] = {hidden};
  for (int64_t l = 0; l < layers; ++l) {
    s["dm.l" + std::to_string(l) + ".w"] = {2 * hidden, hidden};
    s["dm.l" + std::to_string(l) + ".b"] = {hidden};
  }
  s["dm.out.w"] = {hidden, d_u};
  s["dm.out.b"] = {d_u};
  return s;
}

/// [coords ‖ masked normalized y ‖ one-hot mask]
Tensor build_inputs(const Mesh& mesh, const std::vector<int64_t>& node_ids,
                    std::span<const double> y, int64_t channel,
                    const Normalization& norm) {
  const int64_t n = mesh.num_vertices();
  const int64_t d = mesh.dim();
  Tensor in({n, d + 2});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t q = 0; q < d; ++q) in(i, q) = mesh.coords(i, q);
  for (size_t k = 0; k < node_ids.size(); ++k) {
    const int64_t id = node_ids[k];
    in(id, d) = (y[k] - norm.mean[static_cast<size_t>(channel)]) /
                norm.stdev[static_cast<size_t>(channel)];
    in(id, d + 1) = 1.0;
  }
  return in;
}

Graph::Id build_direct_graph(Graph& g, const Csr& adj, Graph::Id input_leaf,
                             const ParamLeaves& p, int64_t layers, int64_t n) {
  Graph::Id x = g.add(g.matmul(input_leaf, p.at("dm.in.w")),
                      g.broadcast_row(p.at("dm.in.b"), n));
  for (int64_t l = 0; l < layers; ++l)
    x = gcn_nonlocal_layer(g, adj, x, p.at("dm.l" + std::to_string(l) + ".w"),
                           p.at("dm.l" + std::to_string(l) + ".b"), true);
  return g.add(g.matmul(x, p.at("dm.out.w")),
               g.broadcast_row(p.at("dm.out.b"), n));
}

std::vector<int64_t> draw_mask(int64_t n, int64_t count, Rng& rng) {
  std::vector<int64_t> ids(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) ids[static_cast<size_t>(i)] = i;
  const int64_t m = std::min(count, n);
  for (int64_t i = 0; i < m; ++i) {
    const int64_t j =
        i + static_cast<int64_t>(rng.below(static_cast<uint64_t>(n - i)));
    std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(j)]);
  }
  ids.resize(static_cast<size_t>(m));
  return ids;
}

}  // namespace

std::pair<Checkpoint, std::vector<double>> train_direct_map(
    const Dataset& ds, const ObsProtocol& protocol, const DirectMapConfig& cfg,
    uint64_t seed) {
  if (ds.samples.empty()) throw ValueError("train_direct_map: empty dataset");
  const int64_t n_samples = ds.size();
  const int64_t batch = std::min<int64_t>(cfg.batch_size, n_samples);
  const Normalization norm = ds.normalization.channels() > 0
                                 ? ds.normalization
                                 : compute_normalization(ds);
  const int64_t coord_dim = ds.samples.front().first.dim();
  const int64_t d_u = ds.samples.front().second.channels();

  std::vector<Tensor> u_norm;
  std::vector<GraphOperator> adj;
  for (const auto& [mesh, field] : ds.samples) {
    u_norm.push_back(normalize_field(field.values, norm));
    adj.push_back(normalized_adjacency(mesh));
  }

  const auto shapes = direct_shapes(coord_dim, d_u, cfg.hidden, cfg.layers);
  Rng init_rng = Rng::stream(seed, {streams::kInit});
  std::map<std::string, Tensor> params;
  for (const auto& [name, shape] : shapes) {
    Tensor t(shape);
    if (shape.size() == 2) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = init_rng.uniform(-limit, limit);
    }
    params.emplace(name, std::move(t));
  }

  Adam adam({cfg.learning_rate});
  std::vector<double> trace;
  trace.reserve(static_cast<size_t>(cfg.iterations));
  for (int64_t iter = 0; iter < cfg.iterations; ++iter) {
    Rng batch_rng = Rng::stream(seed, {streams::kTrainBatch,
                                       static_cast<uint64_t>(iter)});
    try {
      Graph g;
      const ParamLeaves p = add_param_leaves(g, params, true);
      Graph::Id loss = -1;
      for (int64_t b = 0; b < batch; ++b) {
        const int64_t s = static_cast<int64_t>(
            batch_rng.below(static_cast<uint64_t>(n_samples)));
        const Mesh& mesh = ds.samples[static_cast<size_t>(s)].first;
        Rng mask_rng = Rng::stream(seed, {streams::kDirectMask,
                                          static_cast<uint64_t>(iter),
                                          static_cast<uint64_t>(b)});
        Rng noise_rng = Rng::stream(seed, {streams::kNoiseDraw,
                                           static_cast<uint64_t>(iter),
                                           static_cast<uint64_t>(b)});
        const std::vector<int64_t> mask =
            draw_mask(mesh.num_vertices(), protocol.count, mask_rng);
        double sigma = protocol.sigma;
        if (protocol.random_sigma)
          sigma = std::exp(noise_rng.normal() - 4.0) + 1e-3;
        std::vector<double> y(mask.size());
        for (size_t k = 0; k < mask.size(); ++k)
          y[k] = ds.samples[static_cast<size_t>(s)].second.values(
                     mask[k], protocol.channel) +
                 sigma * noise_rng.normal();
        const Tensor inputs =
            build_inputs(mesh, mask, y, protocol.channel, norm);
        const Graph::Id in_leaf = g.leaf(inputs);
        const Graph::Id out =
            build_direct_graph(g, adj[static_cast<size_t>(s)].matrix, in_leaf,
                               p, cfg.layers, mesh.num_vertices());
        const Graph::Id target = g.leaf(u_norm[static_cast<size_t>(s)]);
        const Graph::Id diff = g.add(out, g.scale(target, -1.0));
        const Graph::Id mse = g.scale(
            g.sum_square(diff),
            1.0 / static_cast<double>(u_norm[static_cast<size_t>(s)].numel()));
        loss = (b == 0) ? mse : g.add(loss, mse);
      }
      loss = g.scale(loss, 1.0 / static_cast<double>(batch));
      trace.push_back(g.value(loss)[0]);
      g.backward(loss);
      adam.set_lr(cfg.learning_rate *
                  std::pow(cfg.lr_decay, static_cast<double>(iter)));
      adam.step(params, g.named_grads());
    } catch (const ValueError& e) {
      throw ValueError("direct-map training diverged at iteration " +
                       std::to_string(iter) + ": " + e.what());
    }
  }

  Checkpoint ckpt;
  ckpt.kind = "direct";
  ckpt.arch.coord_dim = coord_dim;
  ckpt.arch.field_channels = d_u;
  ckpt.arch.hidden = cfg.hidden;
  ckpt.arch.latent = 0;
  ckpt.arch.layers = cfg.layers;
  ckpt.normalization = norm;
  ckpt.config_digest = cfg.digest;
  ckpt.extra = {{"protocol",
                 {{"count", protocol.count},
                  {"sigma", protocol.sigma},
                  {"channel", protocol.channel}}}};
  ckpt.params = std::move(params);
  return {std::move(ckpt), std::move(trace)};
}

Field predict_direct_map(const Checkpoint& ckpt, const Mesh& mesh,
                         const ObservationOperator& observation,
                         std::span<const double> y) {
  if (ckpt.kind != "direct")
    throw ValueError("predict_direct_map: checkpoint kind is not 'direct'");
  if (y.size() != observation.node_ids.size())
    throw ShapeError("predict_direct_map: |y| != |node_ids|");
  if (ckpt.extra.contains("protocol")) {
    const auto& proto = ckpt.extra.at("protocol");
    if (proto.at("channel").get<int64_t>() != observation.channel ||
        proto.at("count").get<int64_t>() !=
            static_cast<int64_t>(observation.node_ids.size()))
      std::cerr << "warning: observation differs from the direct map's "
                   "training protocol\n";
  }
  const GraphOperator adj = normalized_adjacency(mesh);
  const Tensor inputs = build_inputs(mesh, observation.node_ids, y,
                                     observation.channel, ckpt.normalization);
  Graph g;
  const ParamLeaves p = add_param_leaves(g, ckpt.params, false);
  const Graph::Id in_leaf = g.leaf(inputs);
  const Graph::Id out = build_direct_graph(g, adj.matrix, in_leaf, p,
                                           ckpt.arch.layers,
                                           mesh.num_vertices());
  Field field;
  field.values = denormalize_field(g.value(out), ckpt.normalization);
  return field;
}

}  // namespace gabi
