#include "gabi/train.hpp"

#include <cmath>

#include "gabi/errors.hpp"
#include "gabi/mmd.hpp"
#include "gabi/rng.hpp"

namespace gabi {

std::pair<Checkpoint, LossTrace> train_autoencoder(const Dataset& ds,
                                                   const TrainConfig& cfg,
                                                   uint64_t seed) {
  if (ds.samples.empty()) throw ValueError("train_autoencoder: empty dataset");
  const int64_t n_samples = ds.size();
  const int64_t batch = std::min<int64_t>(cfg.batch_size, n_samples);
  if (batch < 2)
    throw ValueError("train_autoencoder: batch size must be at least 2");

  const Normalization norm = ds.normalization.channels() > 0
                                 ? ds.normalization
                                 : compute_normalization(ds);
  std::vector<Tensor> u_norm;
  std::vector<GraphOperator> adj;
  u_norm.reserve(static_cast<size_t>(n_samples));
  adj.reserve(static_cast<size_t>(n_samples));
  for (const auto& [mesh, field] : ds.samples) {
    u_norm.push_back(normalize_field(field.values, norm));
    adj.push_back(normalized_adjacency(mesh));
  }

  std::map<std::string, Tensor> params =
      init_autoencoder_params(cfg.arch, seed);
  Adam adam({cfg.learning_rate});
  LossTrace trace;
  trace.recon.reserve(static_cast<size_t>(cfg.iterations));
  trace.mmd.reserve(static_cast<size_t>(cfg.iterations));

  for (int64_t iter = 0; iter < cfg.iterations; ++iter) {
    Rng batch_rng = Rng::stream(seed, {streams::kTrainBatch,
                                       static_cast<uint64_t>(iter)});
    Rng ref_rng = Rng::stream(seed, {streams::kTrainMmdRef,
                                     static_cast<uint64_t>(iter)});
    std::vector<int64_t> idx(static_cast<size_t>(batch));
    for (auto& i : idx)
      i = static_cast<int64_t>(batch_rng.below(static_cast<uint64_t>(n_samples)));

    try {
      Graph g;
      const ParamLeaves p = add_param_leaves(g, params, true);
      Graph::Id recon = -1;
      Graph::Id zcat = -1;
      for (int64_t b = 0; b < batch; ++b) {
        const int64_t s = idx[static_cast<size_t>(b)];
        const Mesh& mesh = ds.samples[static_cast<size_t>(s)].first;
        const Tensor& target = u_norm[static_cast<size_t>(s)];
        const Graph::Id u_leaf = g.leaf(target);
        const Graph::Id z = build_encoder_graph(
            g, adj[static_cast<size_t>(s)].matrix, mesh.coords, u_leaf, p,
            cfg.arch);
        const Graph::Id out = build_decoder_graph(
            g, adj[static_cast<size_t>(s)].matrix, mesh.coords, z, p,
            cfg.arch);
        const Graph::Id diff = g.add(out, g.scale(u_leaf, -1.0));
        const Graph::Id mse =
            g.scale(g.sum_square(diff),
                    1.0 / static_cast<double>(target.numel()));
        recon = (b == 0) ? mse : g.add(recon, mse);
        zcat = (b == 0) ? z : g.concat(zcat, z, 0);
      }
      recon = g.scale(recon, 1.0 / static_cast<double>(batch));

      Tensor ref({batch, cfg.arch.latent});
      for (int64_t i = 0; i < ref.numel(); ++i) ref[i] = ref_rng.normal();
      const double bw = median_heuristic_bandwidth(g.value(zcat), ref,
                                                   cfg.bandwidth_floor);

      Graph::Id loss = recon;
      double mmd_value;
      if (cfg.mmd_weight != 0.0) {
        const Graph::Id mmd_node = g.mmd2(zcat, ref, bw);
        mmd_value = g.value(mmd_node)[0];
        loss = g.add(recon, g.scale(mmd_node, cfg.mmd_weight));
      } else {
        mmd_value = mmd2(g.value(zcat), ref, bw);
      }

      trace.recon.push_back(g.value(recon)[0]);
      trace.mmd.push_back(mmd_value);

      g.backward(loss);
      adam.set_lr(cfg.learning_rate *
                  std::pow(cfg.lr_decay, static_cast<double>(iter)));
      adam.step(params, g.named_grads());
    } catch (const ValueError& e) {
      throw ValueError("training diverged at iteration " +
                       std::to_string(iter) + ": " + e.what());
    }
  }

  Checkpoint ckpt;
  ckpt.kind = "gabi";
  ckpt.arch = cfg.arch;
  ckpt.normalization = norm;
  ckpt.config_digest = cfg.digest;
  ckpt.params = std::move(params);
  return {std::move(ckpt), std::move(trace)};
}

Tensor encode_field(const Checkpoint& ckpt, const Mesh& mesh,
                    const Field& field) {
  return encode(mesh, normalize_field(field.values, ckpt.normalization),
                ckpt.params, ckpt.arch);
}

Field decode_latent(const Checkpoint& ckpt, const Mesh& mesh,
                    const Tensor& z) {
  return decode(z, mesh, ckpt.params, ckpt.arch, ckpt.normalization);
}

Tensor encode_dataset(const Checkpoint& ckpt, const Dataset& ds) {
  const int64_t n = ds.size();
  Tensor out({n, ckpt.arch.latent});
  for (int64_t i = 0; i < n; ++i) {
    const Tensor z = encode_field(ckpt, ds.samples[static_cast<size_t>(i)].first,
                                  ds.samples[static_cast<size_t>(i)].second);
    for (int64_t j = 0; j < ckpt.arch.latent; ++j) out(i, j) = z[j];
  }
  return out;
}

}  // namespace gabi
