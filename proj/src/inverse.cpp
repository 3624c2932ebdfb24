#include "gabi/inverse.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "gabi/errors.hpp"

namespace gabi {

struct GcnFieldDecoder::Cache {
  Graph graph;
  Graph::Id z_leaf = -1;
  Graph::Id out = -1;
};

GcnFieldDecoder::GcnFieldDecoder(Checkpoint ckpt, Mesh mesh)
    : ckpt_(std::move(ckpt)),
      mesh_(std::move(mesh)),
      adj_(normalized_adjacency(mesh_)),
      caches_(static_cast<size_t>(omp_get_max_threads())) {}

GcnFieldDecoder::~GcnFieldDecoder() = default;

GcnFieldDecoder::Cache& GcnFieldDecoder::thread_cache() const {
  const size_t tid = static_cast<size_t>(omp_get_thread_num());
  auto& slot = caches_.at(tid);
  if (!slot) {
    auto cache = std::make_unique<Cache>();
    const ParamLeaves p = add_param_leaves(cache->graph, ckpt_.params, false);
    cache->z_leaf = cache->graph.leaf(Tensor({1, ckpt_.arch.latent}), "z");
    cache->out = build_decoder_graph(cache->graph, adj_.matrix, mesh_.coords,
                                     cache->z_leaf, p, ckpt_.arch);
    slot = std::move(cache);
  }
  return *slot;
}

Field GcnFieldDecoder::decode(const Tensor& z) const {
  if (z.numel() != ckpt_.arch.latent)
    throw ShapeError("decode: latent dimension mismatch");
  Cache& cache = thread_cache();
  Tensor& zv = cache.graph.leaf_value(cache.z_leaf);
  for (int64_t i = 0; i < z.numel(); ++i) zv[i] = z[i];
  cache.graph.forward(cache.out);
  Field field;
  field.values =
      denormalize_field(cache.graph.value(cache.out), ckpt_.normalization);
  return field;
}

LinearFieldDecoder::LinearFieldDecoder(Tensor a, Tensor b, int64_t channels)
    : a_(std::move(a)), b_(std::move(b)), channels_(channels) {
  if (a_.rank() != 2 || b_.rank() != 1 || a_.dim(0) != b_.dim(0))
    throw ShapeError("LinearFieldDecoder: A must be (N*d_u)xd_z, b (N*d_u)");
  if (a_.dim(0) % channels_ != 0)
    throw ShapeError("LinearFieldDecoder: rows not divisible by channels");
}

Field LinearFieldDecoder::decode(const Tensor& z) const {
  if (z.numel() != a_.dim(1))
    throw ShapeError("LinearFieldDecoder: latent dimension mismatch");
  Field f;
  f.values = Tensor({a_.dim(0) / channels_, channels_});
  for (int64_t i = 0; i < a_.dim(0); ++i) {
    double s = b_[i];
    for (int64_t j = 0; j < a_.dim(1); ++j) s += a_(i, j) * z[j];
    f.values[i] = s;
  }
  return f;
}

namespace {

int64_t total_observed(const InverseProblem& p) {
  int64_t m = 0;
  for (const auto& op : p.observations)
    m += static_cast<int64_t>(op.node_ids.size());
  return m;
}

void check_problem(const InverseProblem& p) {
  if (p.decoder == nullptr) throw ValueError("inverse: missing decoder");
  if (static_cast<int64_t>(p.y.size()) != total_observed(p))
    throw ShapeError("inverse: |y| does not match observation operators");
  if (p.noise_mode == NoiseMode::KnownSigma)
    for (const auto& op : p.observations)
      if (!(op.sigma > 0.0) && !op.node_ids.empty())
        throw ValueError("inverse: known-sigma mode requires sigma > 0");
}

// Simulated observation of one decoded field; g-draws consumed in operator
// order then node order. sigma_override replaces every operator's sigma
// when set (joint-noise sampling).
double simulate_residual(const InverseProblem& p, const Field& field,
                         Rng& rng_obs, const double* sigma_override) {
  double r2 = 0.0;
  size_t k = 0;
  for (const auto& op : p.observations) {
    const double sigma = sigma_override ? *sigma_override : op.sigma;
    for (int64_t id : op.node_ids) {
      const double sim =
          field.values(id, op.channel) + sigma * rng_obs.normal();
      const double d = p.y[k++] - sim;
      r2 += d * d;
    }
  }
  return std::sqrt(r2);
}

PosteriorEnsemble abc_impl(const InverseProblem& problem,
                           const NoisePrior* prior, int64_t n_total,
                           int64_t n_accept, int64_t batch, uint64_t seed,
                           const char* method) {
  check_problem(problem);
  if (n_accept > n_total)
    throw ValueError("abc_sample: n_accept must not exceed n_total");
  if (batch < 1) throw ValueError("abc_sample: batch must be >= 1");
  const FieldDecoder& dec = *problem.decoder;
  const int64_t d_z = dec.latent_dim();

  Tensor latents({n_total, d_z});
  std::vector<double> residuals(static_cast<size_t>(n_total));
  std::vector<double> sigmas(prior ? static_cast<size_t>(n_total) : 0);
  const int64_t n_batches = (n_total + batch - 1) / batch;

#pragma omp parallel for schedule(dynamic)
  for (int64_t bi = 0; bi < n_batches; ++bi) {
    Rng rng_z = Rng::stream(seed, {streams::kAbcLatent,
                                   static_cast<uint64_t>(bi)});
    Rng rng_obs = Rng::stream(seed, {streams::kAbcObsNoise,
                                     static_cast<uint64_t>(bi)});
    Rng rng_eps = Rng::stream(seed, {streams::kAbcSigma,
                                     static_cast<uint64_t>(bi)});
    Tensor z({d_z});
    for (int64_t s = 0; s < batch; ++s) {
      const int64_t i = bi * batch + s;
      if (i >= n_total) break;
      for (int64_t j = 0; j < d_z; ++j) {
        z[j] = rng_z.normal();
        latents(i, j) = z[j];
      }
      const Field field = dec.decode(z);
      double sigma_i = 0.0;
      const double* sigma_ptr = nullptr;
      if (prior) {
        sigma_i = prior->sample(rng_eps);
        sigmas[static_cast<size_t>(i)] = sigma_i;
        sigma_ptr = &sigma_i;
      }
      residuals[static_cast<size_t>(i)] =
          simulate_residual(problem, field, rng_obs, sigma_ptr);
    }
  }

  std::vector<int64_t> order(static_cast<size_t>(n_total));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    const double ra = residuals[static_cast<size_t>(a)];
    const double rb = residuals[static_cast<size_t>(b)];
    return ra != rb ? ra < rb : a < b;  // ties broken by draw index
  });

  PosteriorEnsemble ens;
  ens.latents = Tensor({n_accept, d_z});
  ens.fields.resize(static_cast<size_t>(n_accept));
  ens.residuals.resize(static_cast<size_t>(n_accept));
  if (prior) ens.sigmas.resize(static_cast<size_t>(n_accept));
  for (int64_t k = 0; k < n_accept; ++k) {
    const int64_t src = order[static_cast<size_t>(k)];
    for (int64_t j = 0; j < d_z; ++j) ens.latents(k, j) = latents(src, j);
    ens.residuals[static_cast<size_t>(k)] = residuals[static_cast<size_t>(src)];
    if (prior) ens.sigmas[static_cast<size_t>(k)] = sigmas[static_cast<size_t>(src)];
  }
#pragma omp parallel for schedule(dynamic)
  for (int64_t k = 0; k < n_accept; ++k) {
    Tensor z({d_z});
    for (int64_t j = 0; j < d_z; ++j) z[j] = ens.latents(k, j);
    ens.fields[static_cast<size_t>(k)] = dec.decode(z);
  }
  ens.meta.total_samples = n_total;
  ens.meta.seed = seed;
  ens.meta.acceptance_rate =
      static_cast<double>(n_accept) / static_cast<double>(n_total);
  ens.meta.method = method;
  return ens;
}

}  // namespace

PosteriorEnsemble abc_sample(const InverseProblem& problem, int64_t n_total,
                             int64_t n_accept, int64_t batch, uint64_t seed) {
  return abc_impl(problem, nullptr, n_total, n_accept, batch, seed, "abc");
}

PosteriorEnsemble abc_sample_joint_noise(const InverseProblem& problem,
                                         const NoisePrior& prior,
                                         int64_t n_total, int64_t n_accept,
                                         int64_t batch, uint64_t seed) {
  if (problem.noise_mode != NoiseMode::InferSigma)
    throw ValueError("abc_sample_joint_noise: problem must be in infer-sigma mode");
  return abc_impl(problem, &prior, n_total, n_accept, batch, seed,
                  "abc-joint");
}

PosteriorEnsemble sample_prior(const FieldDecoder& decoder, const Mesh& mesh,
                               int64_t n, int64_t batch, uint64_t seed) {
  InverseProblem prior_only;
  prior_only.mesh = &mesh;
  prior_only.decoder = &decoder;
  return abc_impl(prior_only, nullptr, n, n, batch, seed, "prior");
}

PosteriorEnsemble pcn_sample(const InverseProblem& problem, int64_t n_steps,
                             double beta, int64_t burn_in, int64_t thin,
                             uint64_t seed) {
  check_problem(problem);
  if (problem.noise_mode != NoiseMode::KnownSigma)
    throw ValueError("pcn_sample: requires known-sigma mode");
  if (!(beta > 0.0 && beta <= 1.0))
    throw ValueError("pcn_sample: beta must lie in (0, 1]");
  if (thin < 1) throw ValueError("pcn_sample: thin must be >= 1");
  const FieldDecoder& dec = *problem.decoder;
  const int64_t d_z = dec.latent_dim();

  const auto phi = [&](const Tensor& z) {
    const Field field = dec.decode(z);
    double v = 0.0;
    size_t k = 0;
    for (const auto& op : problem.observations) {
      const double inv2s2 = op.node_ids.empty()
                                ? 0.0
                                : 1.0 / (2.0 * op.sigma * op.sigma);
      for (int64_t id : op.node_ids) {
        const double d = problem.y[k++] - field.values(id, op.channel);
        v += d * d * inv2s2;
      }
    }
    return v;
  };

  Rng rng_init = Rng::stream(seed, {streams::kPcnInit});
  Rng rng_prop = Rng::stream(seed, {streams::kPcnProposal});
  Rng rng_acc = Rng::stream(seed, {streams::kPcnAccept});

  Tensor z({d_z});
  for (int64_t j = 0; j < d_z; ++j) z[j] = rng_init.normal();
  double phi_z = phi(z);

  const double keep_coef = std::sqrt(1.0 - beta * beta);
  std::vector<Tensor> kept;
  int64_t accepted = 0;
  Tensor proposal({d_z});
  for (int64_t t = 1; t <= n_steps; ++t) {
    for (int64_t j = 0; j < d_z; ++j)
      proposal[j] = keep_coef * z[j] + beta * rng_prop.normal();
    const double phi_p = phi(proposal);
    const double u = rng_acc.uniform_pos();
    if (std::log(u) < phi_z - phi_p) {
      z = proposal;
      phi_z = phi_p;
      ++accepted;
    }
    if (t > burn_in && (t - burn_in) % thin == 0) kept.push_back(z);
  }

  const int64_t n_kept = static_cast<int64_t>(kept.size());
  if (n_kept == 0)
    throw ValueError("pcn_sample: burn-in/thinning left no samples");
  PosteriorEnsemble ens;
  ens.latents = Tensor({n_kept, d_z});
  ens.fields.resize(static_cast<size_t>(n_kept));
  ens.residuals.resize(static_cast<size_t>(n_kept));
  std::vector<int64_t> order(static_cast<size_t>(n_kept));
  // Residual-sort the kept states so the ensemble matches the ABC layout.
  std::vector<double> res(static_cast<size_t>(n_kept));
  std::vector<Field> fields(static_cast<size_t>(n_kept));
#pragma omp parallel for schedule(dynamic)
  for (int64_t k = 0; k < n_kept; ++k) {
    const Field f = dec.decode(kept[static_cast<size_t>(k)]);
    double r2 = 0.0;
    size_t idx = 0;
    for (const auto& op : problem.observations)
      for (int64_t id : op.node_ids) {
        const double d = problem.y[idx++] - f.values(id, op.channel);
        r2 += d * d;
      }
    res[static_cast<size_t>(k)] = std::sqrt(r2);
    fields[static_cast<size_t>(k)] = f;
  }
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    const double ra = res[static_cast<size_t>(a)];
    const double rb = res[static_cast<size_t>(b)];
    return ra != rb ? ra < rb : a < b;
  });
  for (int64_t k = 0; k < n_kept; ++k) {
    const int64_t src = order[static_cast<size_t>(k)];
    for (int64_t j = 0; j < d_z; ++j)
      ens.latents(k, j) = kept[static_cast<size_t>(src)][j];
    ens.fields[static_cast<size_t>(k)] = std::move(fields[static_cast<size_t>(src)]);
    ens.residuals[static_cast<size_t>(k)] = res[static_cast<size_t>(src)];
  }
  ens.meta.total_samples = n_steps;
  ens.meta.seed = seed;
  ens.meta.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(n_steps);
  ens.meta.method = "pcn";
  if (ens.meta.acceptance_rate < 0.01) {
    ens.meta.low_acceptance_warning = true;
    std::cerr << "warning: pcn acceptance rate "
              << ens.meta.acceptance_rate << " below 1%\n";
  }
  return ens;
}

PosteriorStats posterior_stats(const PosteriorEnsemble& ensemble,
                               std::span<const double> quantile_levels) {
  const int64_t n = ensemble.size();
  if (n < 2) throw ValueError("posterior_stats: need at least 2 samples");
  const Tensor& first = ensemble.fields.front().values;
  const int64_t rows = first.dim(0), cols = first.dim(1);

  PosteriorStats stats;
  stats.mean.values = Tensor({rows, cols});
  stats.stdev.values = Tensor({rows, cols});
  for (const auto& f : ensemble.fields)
    for (int64_t i = 0; i < rows * cols; ++i)
      stats.mean.values[i] += f.values[i];
  for (int64_t i = 0; i < rows * cols; ++i)
    stats.mean.values[i] /= static_cast<double>(n);
  for (const auto& f : ensemble.fields)
    for (int64_t i = 0; i < rows * cols; ++i) {
      const double d = f.values[i] - stats.mean.values[i];
      stats.stdev.values[i] += d * d;
    }
  for (int64_t i = 0; i < rows * cols; ++i)
    stats.stdev.values[i] =
        std::sqrt(stats.stdev.values[i] / static_cast<double>(n - 1));

  if (!quantile_levels.empty()) {
    std::vector<double> column(static_cast<size_t>(n));
    for (size_t qi = 0; qi < quantile_levels.size(); ++qi)
      stats.quantiles.push_back(Field{Tensor({rows, cols}), {}});
    for (int64_t i = 0; i < rows * cols; ++i) {
      for (int64_t k = 0; k < n; ++k)
        column[static_cast<size_t>(k)] = ensemble.fields[static_cast<size_t>(k)].values[i];
      std::sort(column.begin(), column.end());
      for (size_t qi = 0; qi < quantile_levels.size(); ++qi) {
        const double pos = quantile_levels[qi] * static_cast<double>(n - 1);
        const size_t lo = static_cast<size_t>(pos);
        const size_t hi = std::min(lo + 1, static_cast<size_t>(n - 1));
        const double frac = pos - static_cast<double>(lo);
        stats.quantiles[qi].values[i] =
            column[lo] + frac * (column[hi] - column[lo]);
      }
    }
  }
  return stats;
}

void write_ensemble(const PosteriorEnsemble& ensemble, const Mesh& mesh,
                    const std::string& path) {
  Dataset ds;
  ds.samples.reserve(static_cast<size_t>(ensemble.size()));
  for (const auto& f : ensemble.fields) ds.samples.emplace_back(mesh, f);
  const int64_t d_u = ensemble.fields.empty() ? 0 : ensemble.fields[0].channels();
  ds.normalization.mean.assign(static_cast<size_t>(d_u), 0.0);
  ds.normalization.stdev.assign(static_cast<size_t>(d_u), 1.0);
  write_dataset(ds, path);

  nlohmann::json side;
  side["residuals"] = ensemble.residuals;
  side["sigmas"] = ensemble.sigmas;
  side["meta"] = {{"total_samples", ensemble.meta.total_samples},
                  {"seed", ensemble.meta.seed},
                  {"acceptance_rate", ensemble.meta.acceptance_rate},
                  {"method", ensemble.meta.method},
                  {"low_acceptance_warning",
                   ensemble.meta.low_acceptance_warning}};
  std::ofstream out(path + ".json");
  if (!out) throw IoError("cannot open " + path + ".json for writing");
  out << side.dump(2) << "\n";
}

}  // namespace gabi
