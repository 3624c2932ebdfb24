#include "gabi/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "gabi/errors.hpp"
#include "gabi/graph_gp.hpp"
#include "gabi/heat.hpp"
#include "gabi/helmholtz.hpp"

namespace gabi {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void load(const json& j, const char* key, T& dst) {
  if (j.contains(key)) {
    try {
      dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " +
                        e.what());
    }
  }
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Field slice_channel(const Field& f, int64_t c) {
  Field out;
  out.values = Tensor({f.num_nodes(), 1});
  for (int64_t i = 0; i < f.num_nodes(); ++i)
    out.values(i, 0) = f.values(i, c);
  if (c < static_cast<int64_t>(f.channel_names.size()))
    out.channel_names = {f.channel_names[static_cast<size_t>(c)]};
  return out;
}

std::string channel_label(const Dataset& ds, int64_t c) {
  const auto& names = ds.samples.front().second.channel_names;
  if (c < static_cast<int64_t>(names.size()) && !names[static_cast<size_t>(c)].empty())
    return names[static_cast<size_t>(c)];
  return ds.channels() == 1 ? "u" : "c" + std::to_string(c);
}

}  // namespace

GcnArchitecture ExperimentConfig::arch(int64_t coord_dim,
                                       int64_t field_channels) const {
  GcnArchitecture a;
  a.coord_dim = coord_dim;
  a.field_channels = field_channels;
  a.hidden = model.channels;
  a.latent = model.latent;
  a.layers = model.layers;
  return a;
}

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"problem", "seed", "dataset", "model", "sampler", "observation",
              "direct", "methods", "query_nodes", "checkpoint", "output_dir"});
  ExperimentConfig cfg;
  load(j, "problem", cfg.problem);
  if (cfg.problem != "heat" && cfg.problem != "helmholtz")
    throw ConfigError("problem must be 'heat' or 'helmholtz'");
  load(j, "seed", cfg.seed);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    check_keys(d, "dataset",
               {"train_count", "test_count", "grid_nx", "grid_ny", "nodes",
                "kappa", "gamma"});
    load(d, "train_count", cfg.dataset.train_count);
    load(d, "test_count", cfg.dataset.test_count);
    load(d, "grid_nx", cfg.dataset.grid_nx);
    load(d, "grid_ny", cfg.dataset.grid_ny);
    load(d, "nodes", cfg.dataset.nodes);
    load(d, "kappa", cfg.dataset.kappa);
    load(d, "gamma", cfg.dataset.gamma);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, "model",
               {"layers", "channels", "latent", "iterations", "batch_size",
                "learning_rate", "mmd_weight", "lr_decay"});
    load(m, "layers", cfg.model.layers);
    load(m, "channels", cfg.model.channels);
    load(m, "latent", cfg.model.latent);
    load(m, "iterations", cfg.model.iterations);
    load(m, "batch_size", cfg.model.batch_size);
    load(m, "learning_rate", cfg.model.learning_rate);
    load(m, "mmd_weight", cfg.model.mmd_weight);
    load(m, "lr_decay", cfg.model.lr_decay);
  }
  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    check_keys(s, "sampler",
               {"method", "num_samples", "num_accepted", "batch", "beta",
                "steps", "burn_in", "thin"});
    load(s, "method", cfg.sampler.method);
    if (cfg.sampler.method != "abc" && cfg.sampler.method != "pcn")
      throw ConfigError("sampler.method must be 'abc' or 'pcn'");
    load(s, "num_samples", cfg.sampler.num_samples);
    load(s, "num_accepted", cfg.sampler.num_accepted);
    load(s, "batch", cfg.sampler.batch);
    load(s, "beta", cfg.sampler.beta);
    load(s, "steps", cfg.sampler.steps);
    load(s, "burn_in", cfg.sampler.burn_in);
    load(s, "thin", cfg.sampler.thin);
  }
  if (j.contains("observation")) {
    const auto& o = j.at("observation");
    check_keys(o, "observation", {"count", "sigma", "noise_mode", "channel"});
    load(o, "count", cfg.observation.count);
    load(o, "sigma", cfg.observation.sigma);
    load(o, "noise_mode", cfg.observation.noise_mode);
    if (cfg.observation.noise_mode != "known" &&
        cfg.observation.noise_mode != "infer")
      throw ConfigError("observation.noise_mode must be 'known' or 'infer'");
    load(o, "channel", cfg.observation.channel);
  }
  if (j.contains("direct")) {
    const auto& d = j.at("direct");
    check_keys(d, "direct",
               {"hidden", "layers", "iterations", "batch_size",
                "learning_rate", "lr_decay"});
    load(d, "hidden", cfg.direct.hidden);
    load(d, "layers", cfg.direct.layers);
    load(d, "iterations", cfg.direct.iterations);
    load(d, "batch_size", cfg.direct.batch_size);
    load(d, "learning_rate", cfg.direct.learning_rate);
    load(d, "lr_decay", cfg.direct.lr_decay);
  }
  load(j, "methods", cfg.methods);
  for (const auto& m : cfg.methods)
    if (m != "gabi-abc" && m != "gabi-pcn" && m != "direct" && m != "gp-m12" &&
        m != "gp-m32" && m != "gp-rbf")
      throw ConfigError("unknown method '" + m + "'");
  load(j, "query_nodes", cfg.query_nodes);
  load(j, "checkpoint", cfg.checkpoint);
  load(j, "output_dir", cfg.output_dir);
  cfg.canonical = j.dump();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad JSON in " + path + ": " + e.what());
  }
  return parse_config(j);
}

std::pair<Dataset, Dataset> generate_datasets(const ExperimentConfig& cfg) {
  const int64_t total = cfg.dataset.train_count + cfg.dataset.test_count;
  Dataset full;
  if (cfg.problem == "heat") {
    full = sample_heat_dataset(total, cfg.dataset.grid_nx, cfg.dataset.grid_ny,
                               cfg.seed);
  } else {
    full = sample_helmholtz_dataset(total, cfg.dataset.nodes,
                                    cfg.dataset.kappa, cfg.dataset.gamma,
                                    cfg.seed);
  }
  Dataset train, test;
  train.samples.assign(full.samples.begin(),
                       full.samples.begin() + cfg.dataset.train_count);
  test.samples.assign(full.samples.begin() + cfg.dataset.train_count,
                      full.samples.end());
  train.normalization = compute_normalization(train);
  test.normalization = train.normalization;  // stats come from training only
  return {std::move(train), std::move(test)};
}

CaseObservation make_case_observation(const ExperimentConfig& cfg,
                                      int64_t case_index, const Field& truth) {
  CaseObservation obs;
  obs.op.channel = cfg.observation.channel;
  const int64_t n = truth.num_nodes();
  Rng sel = Rng::stream(cfg.seed, {streams::kObsSelection,
                                   static_cast<uint64_t>(case_index)});
  std::vector<int64_t> ids(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) ids[static_cast<size_t>(i)] = i;
  const int64_t m = std::min(cfg.observation.count, n);
  for (int64_t i = 0; i < m; ++i) {
    const int64_t j =
        i + static_cast<int64_t>(sel.below(static_cast<uint64_t>(n - i)));
    std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(j)]);
  }
  ids.resize(static_cast<size_t>(m));
  obs.op.node_ids = std::move(ids);

  if (cfg.observation.noise_mode == "infer") {
    Rng sig = Rng::stream(cfg.seed, {streams::kNoiseDraw,
                                     static_cast<uint64_t>(case_index)});
    obs.sigma_true = NoisePrior{}.sample(sig);
  } else {
    obs.sigma_true = cfg.observation.sigma;
  }
  obs.op.sigma = obs.sigma_true;
  Rng noise = Rng::stream(cfg.seed, {streams::kObservationNoise,
                                     static_cast<uint64_t>(case_index)});
  obs.y = apply_observation(obs.op, truth, noise);
  return obs;
}

Checkpoint train_gabi_model(const ExperimentConfig& cfg, const Dataset& train,
                            LossTrace* trace_out) {
  TrainConfig tc;
  tc.arch = cfg.arch(train.samples.front().first.dim(), train.channels());
  tc.iterations = cfg.model.iterations;
  tc.batch_size = cfg.model.batch_size;
  tc.learning_rate = cfg.model.learning_rate;
  tc.lr_decay = cfg.model.lr_decay;
  tc.mmd_weight = cfg.model.mmd_weight;
  tc.digest = config_digest(cfg.canonical);
  auto [ckpt, trace] = train_autoencoder(train, tc, cfg.seed);
  if (trace_out) *trace_out = std::move(trace);
  return std::move(ckpt);
}

namespace {

struct CaseResult {
  PosteriorStats stats;
  std::vector<double> sigma_samples;  // joint-noise runs
};

struct MethodOutput {
  std::vector<MetricsRow> rows;
};

// Shared per-case evaluation state.
struct EvalContext {
  const ExperimentConfig& cfg;
  const Dataset& train;
  const Dataset& test;
  std::vector<CaseObservation> observations;
  std::string out_dir;
};

void accumulate_rows(const EvalContext& ctx, const std::string& method,
                     const std::vector<CaseResult>& results,
                     double train_seconds, double pred_seconds,
                     bool has_std, std::vector<MetricsRow>& rows) {
  const int64_t channels = ctx.test.channels();
  const int64_t cases = static_cast<int64_t>(results.size());
  for (int64_t c = 0; c < channels; ++c) {
    std::vector<double> maes;
    int64_t cov1 = 0, cov2 = 0, total = 0;
    for (int64_t k = 0; k < cases; ++k) {
      const Field truth =
          slice_channel(ctx.test.samples[static_cast<size_t>(k)].second, c);
      const Field mean = slice_channel(results[static_cast<size_t>(k)].stats.mean, c);
      const Field sd = slice_channel(results[static_cast<size_t>(k)].stats.stdev, c);
      const Coverage cov = compute_metrics(truth, mean, sd);
      maes.push_back(cov.mae);
      cov1 += cov.covered1;
      cov2 += cov.covered2;
      total += cov.total;
    }
    MetricsRow row;
    row.method = method;
    row.target = channel_label(ctx.test, c);
    double sum = 0.0;
    for (double m : maes) sum += m;
    row.mae_mean = sum / static_cast<double>(maes.size());
    double var = 0.0;
    for (double m : maes) var += (m - row.mae_mean) * (m - row.mae_mean);
    row.mae_std = maes.size() > 1
                      ? std::sqrt(var / static_cast<double>(maes.size() - 1))
                      : 0.0;
    if (has_std) {
      row.cov1_pct = 100.0 * static_cast<double>(cov1) / static_cast<double>(total);
      row.cov2_pct = 100.0 * static_cast<double>(cov2) / static_cast<double>(total);
    }
    row.train_seconds = train_seconds;
    row.pred_seconds = pred_seconds;
    rows.push_back(row);
  }

  // σ estimation row (joint-noise sampling only).
  if (!results.empty() && !results.front().sigma_samples.empty()) {
    MetricsRow row;
    row.method = method;
    row.target = "sigma";
    std::vector<double> maes;
    int64_t cov1 = 0, cov2 = 0;
    for (int64_t k = 0; k < cases; ++k) {
      std::vector<double> s = results[static_cast<size_t>(k)].sigma_samples;
      std::sort(s.begin(), s.end());
      const double median = s[s.size() / 2];
      const double truth = ctx.observations[static_cast<size_t>(k)].sigma_true;
      maes.push_back(std::fabs(median - truth));
      double mean = 0.0;
      for (double v : s) mean += v;
      mean /= static_cast<double>(s.size());
      double var = 0.0;
      for (double v : s) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(s.size() - 1));
      if (std::fabs(truth - mean) <= sd) ++cov1;
      if (std::fabs(truth - mean) <= 2.0 * sd) ++cov2;
    }
    double sum = 0.0;
    for (double m : maes) sum += m;
    row.mae_mean = sum / static_cast<double>(maes.size());
    double var = 0.0;
    for (double m : maes) var += (m - row.mae_mean) * (m - row.mae_mean);
    row.mae_std = maes.size() > 1
                      ? std::sqrt(var / static_cast<double>(maes.size() - 1))
                      : 0.0;
    row.cov1_pct = 100.0 * static_cast<double>(cov1) / static_cast<double>(cases);
    row.cov2_pct = 100.0 * static_cast<double>(cov2) / static_cast<double>(cases);
    row.train_seconds = train_seconds;
    row.pred_seconds = pred_seconds;
    rows.push_back(row);
  }
}

void dump_case_fields(const EvalContext& ctx, int64_t k,
                      const CaseResult& res) {
  const auto& [mesh, truth] = ctx.test.samples[static_cast<size_t>(k)];
  Field error;
  error.values = Tensor(truth.values.shape());
  for (int64_t i = 0; i < truth.values.numel(); ++i)
    error.values[i] = truth.values[i] - res.stats.mean.values[i];
  Dataset dump;
  dump.samples = {{mesh, truth},
                  {mesh, res.stats.mean},
                  {mesh, res.stats.stdev},
                  {mesh, error}};
  const int64_t d_u = truth.channels();
  dump.normalization.mean.assign(static_cast<size_t>(d_u), 0.0);
  dump.normalization.stdev.assign(static_cast<size_t>(d_u), 1.0);
  write_dataset(dump, ctx.out_dir + "/case_" + std::to_string(k) + ".gabd");
}

void dump_query_samples(const EvalContext& ctx, int64_t k,
                        const PosteriorEnsemble& ens) {
  if (ctx.cfg.query_nodes.empty()) return;
  std::ofstream out(ctx.out_dir + "/query_samples_case_" + std::to_string(k) +
                    ".csv");
  out << "node";
  for (int64_t s = 0; s < ens.size(); ++s) out << ",s" << s;
  out << "\n";
  for (int64_t node : ctx.cfg.query_nodes) {
    out << node;
    for (const auto& f : ens.fields)
      out << ',' << format_double(f.values(node, ctx.cfg.observation.channel));
    out << "\n";
  }
}

MethodOutput eval_gabi(const EvalContext& ctx, const Checkpoint& ckpt,
                       bool use_pcn, double train_seconds) {
  const bool infer_sigma = ctx.cfg.observation.noise_mode == "infer";
  if (use_pcn && infer_sigma)
    throw ConfigError("gabi-pcn supports known noise only");
  const int64_t cases = static_cast<int64_t>(ctx.observations.size());
  std::vector<CaseResult> results(static_cast<size_t>(cases));
  const double t0 = now_seconds();
  for (int64_t k = 0; k < cases; ++k) {
    const auto& [mesh, truth] = ctx.test.samples[static_cast<size_t>(k)];
    (void)truth;
    GcnFieldDecoder decoder(ckpt, mesh);
    InverseProblem problem;
    problem.mesh = &mesh;
    problem.observations = {ctx.observations[static_cast<size_t>(k)].op};
    problem.y = ctx.observations[static_cast<size_t>(k)].y;
    problem.decoder = &decoder;
    problem.noise_mode =
        infer_sigma ? NoiseMode::InferSigma : NoiseMode::KnownSigma;
    if (infer_sigma)
      problem.observations[0].sigma = 0.0;  // inferred, not assumed
    else
      problem.observations[0].sigma = ctx.cfg.observation.sigma;

    const uint64_t case_seed =
        ctx.cfg.seed ^ (0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(k));
    PosteriorEnsemble ens;
    if (use_pcn) {
      ens = pcn_sample(problem, ctx.cfg.sampler.steps, ctx.cfg.sampler.beta,
                       ctx.cfg.sampler.burn_in, ctx.cfg.sampler.thin,
                       case_seed);
    } else if (infer_sigma) {
      ens = abc_sample_joint_noise(problem, NoisePrior{},
                                   ctx.cfg.sampler.num_samples,
                                   ctx.cfg.sampler.num_accepted,
                                   ctx.cfg.sampler.batch, case_seed);
    } else {
      ens = abc_sample(problem, ctx.cfg.sampler.num_samples,
                       ctx.cfg.sampler.num_accepted, ctx.cfg.sampler.batch,
                       case_seed);
    }
    results[static_cast<size_t>(k)].stats = posterior_stats(ens);
    results[static_cast<size_t>(k)].sigma_samples = ens.sigmas;
    dump_case_fields(ctx, k, results[static_cast<size_t>(k)]);
    dump_query_samples(ctx, k, ens);
  }
  const double pred = (now_seconds() - t0) / static_cast<double>(cases);
  MethodOutput out;
  accumulate_rows(ctx, use_pcn ? "gabi-pcn" : "gabi-abc", results,
                  train_seconds, pred, /*has_std=*/true, out.rows);
  return out;
}

MethodOutput eval_gp(const EvalContext& ctx, GpKernel kernel,
                     const std::string& label) {
  const bool infer_sigma = ctx.cfg.observation.noise_mode == "infer";
  const int64_t cases = static_cast<int64_t>(ctx.observations.size());
  std::vector<CaseResult> results(static_cast<size_t>(cases));
  std::vector<double> sigma_est(static_cast<size_t>(cases));

  // All heat test meshes share one topology; cache the eigendecomposition
  // by edge list.
  std::shared_ptr<const LaplacianEigen> shared_eig;
  const auto& first_edges = ctx.test.samples.front().first.edges;
  bool same_topology = true;
  for (const auto& [mesh, field] : ctx.test.samples) {
    (void)field;
    if (mesh.edges != first_edges ||
        mesh.num_vertices() != ctx.test.samples.front().first.num_vertices()) {
      same_topology = false;
      break;
    }
  }
  if (same_topology)
    shared_eig = laplacian_eigen(ctx.test.samples.front().first);

  const double t0 = now_seconds();
  const GpFitGrid grid = GpFitGrid::standard(infer_sigma);
  for (int64_t k = 0; k < cases; ++k) {
    const auto& [mesh, truth] = ctx.test.samples[static_cast<size_t>(k)];
    (void)truth;
    auto eig = same_topology ? shared_eig : laplacian_eigen(mesh);
    const auto& obs = ctx.observations[static_cast<size_t>(k)];
    const GraphGpModel model =
        gp_fit_mml(eig, obs.op, obs.y, kernel, grid,
                   infer_sigma ? 0.0 : ctx.cfg.observation.sigma);
    auto [mean, sd] = gp_posterior(model, obs.op, obs.y);
    sigma_est[static_cast<size_t>(k)] = model.noise;
    CaseResult res;
    // GP is single-channel; embed at the observed channel, zero elsewhere.
    const int64_t channels = ctx.test.channels();
    res.stats.mean.values = Tensor({mesh.num_vertices(), channels});
    res.stats.stdev.values = Tensor({mesh.num_vertices(), channels});
    for (int64_t i = 0; i < mesh.num_vertices(); ++i) {
      res.stats.mean.values(i, ctx.cfg.observation.channel) = mean.values(i, 0);
      res.stats.stdev.values(i, ctx.cfg.observation.channel) = sd.values(i, 0);
    }
    results[static_cast<size_t>(k)] = std::move(res);
  }
  const double pred = (now_seconds() - t0) / static_cast<double>(cases);

  MethodOutput out;
  accumulate_rows(ctx, label, results, -1.0, pred, /*has_std=*/true, out.rows);
  if (infer_sigma) {
    MetricsRow row;
    row.method = label;
    row.target = "sigma";
    std::vector<double> maes;
    for (int64_t k = 0; k < cases; ++k)
      maes.push_back(std::fabs(sigma_est[static_cast<size_t>(k)] -
                               ctx.observations[static_cast<size_t>(k)].sigma_true));
    double sum = 0.0;
    for (double m : maes) sum += m;
    row.mae_mean = sum / static_cast<double>(maes.size());
    double var = 0.0;
    for (double m : maes) var += (m - row.mae_mean) * (m - row.mae_mean);
    row.mae_std = maes.size() > 1
                      ? std::sqrt(var / static_cast<double>(maes.size() - 1))
                      : 0.0;
    row.pred_seconds = pred;
    out.rows.push_back(row);
  }
  return out;
}

MethodOutput eval_direct(const EvalContext& ctx) {
  ObsProtocol protocol;
  protocol.count = ctx.cfg.observation.count;
  protocol.sigma = ctx.cfg.observation.sigma;
  protocol.channel = ctx.cfg.observation.channel;
  protocol.random_sigma = ctx.cfg.observation.noise_mode == "infer";

  DirectMapConfig dc;
  dc.hidden = ctx.cfg.direct.hidden;
  dc.layers = ctx.cfg.direct.layers;
  dc.iterations = ctx.cfg.direct.iterations;
  dc.batch_size = ctx.cfg.direct.batch_size;
  dc.learning_rate = ctx.cfg.direct.learning_rate;
  dc.lr_decay = ctx.cfg.direct.lr_decay;
  dc.digest = config_digest(ctx.cfg.canonical);

  const double t0 = now_seconds();
  auto [ckpt, trace] = train_direct_map(ctx.train, protocol, dc, ctx.cfg.seed);
  const double train_seconds = now_seconds() - t0;

  const int64_t cases = static_cast<int64_t>(ctx.observations.size());
  std::vector<CaseResult> results(static_cast<size_t>(cases));
  const double t1 = now_seconds();
  for (int64_t k = 0; k < cases; ++k) {
    const auto& [mesh, truth] = ctx.test.samples[static_cast<size_t>(k)];
    (void)truth;
    const auto& obs = ctx.observations[static_cast<size_t>(k)];
    CaseResult res;
    res.stats.mean = predict_direct_map(ckpt, mesh, obs.op, obs.y);
    res.stats.stdev.values = Tensor(res.stats.mean.values.shape());
    results[static_cast<size_t>(k)] = std::move(res);
  }
  const double pred = (now_seconds() - t1) / static_cast<double>(cases);
  MethodOutput out;
  accumulate_rows(ctx, "direct", results, train_seconds, pred,
                  /*has_std=*/false, out.rows);
  return out;
}

}  // namespace

std::vector<MetricsRow> run_eval(const ExperimentConfig& config,
                                 const std::string& out_dir,
                                 int64_t runs_override) {
  ExperimentConfig cfg = config;
  if (runs_override > 0) cfg.dataset.test_count = runs_override;
  std::filesystem::create_directories(out_dir);

  Dataset train, test;
  try {
    std::tie(train, test) = generate_datasets(cfg);
  } catch (const std::exception& e) {
    throw StageError("generate", e.what());
  }

  EvalContext ctx{cfg, train, test, {}, out_dir};
  for (int64_t k = 0; k < test.size(); ++k)
    ctx.observations.push_back(
        make_case_observation(cfg, k, test.samples[static_cast<size_t>(k)].second));

  const bool needs_gabi =
      std::any_of(cfg.methods.begin(), cfg.methods.end(),
                  [](const std::string& m) { return m.rfind("gabi", 0) == 0; });
  Checkpoint ckpt;
  double gabi_train_seconds = -1.0;
  if (needs_gabi) {
    try {
      if (!cfg.checkpoint.empty()) {
        ckpt = load_checkpoint(cfg.checkpoint);
      } else {
        LossTrace trace;
        const double t0 = now_seconds();
        ckpt = train_gabi_model(cfg, train, &trace);
        gabi_train_seconds = now_seconds() - t0;
        save_checkpoint(ckpt, out_dir + "/model.gabw");
        write_loss_trace_csv(out_dir + "/loss_trace.csv", trace.recon,
                             trace.mmd);
      }
    } catch (const std::exception& e) {
      throw StageError("train", e.what());
    }
  }

  std::vector<MetricsRow> rows;
  for (const auto& method : cfg.methods) {
    try {
      MethodOutput out;
      if (method == "gabi-abc")
        out = eval_gabi(ctx, ckpt, /*use_pcn=*/false, gabi_train_seconds);
      else if (method == "gabi-pcn")
        out = eval_gabi(ctx, ckpt, /*use_pcn=*/true, gabi_train_seconds);
      else if (method == "gp-m12")
        out = eval_gp(ctx, GpKernel::Matern12, method);
      else if (method == "gp-m32")
        out = eval_gp(ctx, GpKernel::Matern32, method);
      else if (method == "gp-rbf")
        out = eval_gp(ctx, GpKernel::Rbf, method);
      else if (method == "direct")
        out = eval_direct(ctx);
      rows.insert(rows.end(), out.rows.begin(), out.rows.end());
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("evaluate:" + method, e.what());
    }
  }

  write_metrics_csv(out_dir + "/metrics.csv", rows);
  write_timings_csv(out_dir + "/timings.csv", rows);
  return rows;
}

}  // namespace gabi
