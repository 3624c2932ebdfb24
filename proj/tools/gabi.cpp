#include <omp.h>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gabi/errors.hpp"
#include "gabi/experiment.hpp"
#include "gabi/graph_gp.hpp"

namespace {

using namespace gabi;

struct GlobalOpts {
  std::optional<uint64_t> seed;
  int threads = 0;
  std::string format = "csv";
};

ExperimentConfig load_config(const std::string& path, const GlobalOpts& g) {
  ExperimentConfig cfg = parse_config_file(path);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

int cmd_gen(const ExperimentConfig& cfg, const std::string& out) {
  std::filesystem::create_directories(out);
  auto [train, test] = generate_datasets(cfg);
  write_dataset(train, out + "/train.gabd");
  write_dataset(test, out + "/test.gabd");
  std::cout << "wrote " << train.size() << " train / " << test.size()
            << " test samples to " << out << "\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& data,
              const std::string& out) {
  Dataset train = read_dataset(data + "/train.gabd");
  LossTrace trace;
  const Checkpoint ckpt = train_gabi_model(cfg, train, &trace);
  save_checkpoint(ckpt, out);
  write_loss_trace_csv(out + ".loss_trace.csv", trace.recon, trace.mmd);
  std::cout << "checkpoint written to " << out << " (final recon "
            << format_double(trace.recon.back()) << ", mmd "
            << format_double(trace.mmd.back()) << ")\n";
  return 0;
}

int cmd_infer(const ExperimentConfig& cfg, const std::string& ckpt_path,
              const std::string& data, int64_t case_id,
              const std::string& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  Dataset test = read_dataset(data + "/test.gabd");
  if (case_id < 0 || case_id >= test.size())
    throw ConfigError("case-id out of range [0," +
                      std::to_string(test.size()) + ")");
  const auto& [mesh, truth] = test.samples[static_cast<size_t>(case_id)];
  const CaseObservation obs = make_case_observation(cfg, case_id, truth);

  GcnFieldDecoder decoder(ckpt, mesh);
  InverseProblem problem;
  problem.mesh = &mesh;
  problem.observations = {obs.op};
  problem.y = obs.y;
  problem.decoder = &decoder;
  const bool infer_sigma = cfg.observation.noise_mode == "infer";
  problem.noise_mode =
      infer_sigma ? NoiseMode::InferSigma : NoiseMode::KnownSigma;
  if (!infer_sigma) problem.observations[0].sigma = cfg.observation.sigma;

  const uint64_t case_seed =
      cfg.seed ^ (0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(case_id));
  PosteriorEnsemble ens;
  if (cfg.sampler.method == "pcn") {
    ens = pcn_sample(problem, cfg.sampler.steps, cfg.sampler.beta,
                     cfg.sampler.burn_in, cfg.sampler.thin, case_seed);
  } else if (infer_sigma) {
    ens = abc_sample_joint_noise(problem, NoisePrior{}, cfg.sampler.num_samples,
                                 cfg.sampler.num_accepted, cfg.sampler.batch,
                                 case_seed);
  } else {
    ens = abc_sample(problem, cfg.sampler.num_samples,
                     cfg.sampler.num_accepted, cfg.sampler.batch, case_seed);
  }
  std::filesystem::create_directories(out);
  write_ensemble(ens, mesh, out + "/ensemble_case_" +
                                std::to_string(case_id) + ".gabd");
  const PosteriorStats stats = posterior_stats(ens);
  const Coverage cov = compute_metrics(truth, stats.mean, stats.stdev);
  std::cout << "case " << case_id << ": mae " << format_double(cov.mae)
            << " cov1 " << format_double(cov.cov1_pct()) << "% cov2 "
            << format_double(cov.cov2_pct()) << "%\n";
  return 0;
}

int cmd_baseline(const ExperimentConfig& base, const std::string& kind,
                 const std::string& out) {
  ExperimentConfig cfg = base;
  if (kind == "direct")
    cfg.methods = {"direct"};
  else if (kind == "gp-m12" || kind == "gp-m32" || kind == "gp-rbf")
    cfg.methods = {kind};
  else
    throw ConfigError("unknown baseline kind '" + kind + "'");
  const auto rows = run_eval(cfg, out);
  for (const auto& r : rows)
    std::cout << r.method << " (" << r.target << "): mae "
              << format_double(r.mae_mean) << " +/- "
              << format_double(r.mae_std) << "\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, int64_t runs,
             const std::string& out) {
  const auto rows = run_eval(cfg, out, runs);
  for (const auto& r : rows)
    std::cout << r.method << " (" << r.target << "): mae "
              << format_double(r.mae_mean) << " +/- "
              << format_double(r.mae_std) << "\n";
  std::cout << "metrics written to " << out << "/metrics.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometry-conditioned autoencoder priors for Bayesian "
               "field inversion"};
  app.require_subcommand(1);

  GlobalOpts global;
  uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override config seed");
  app.add_option("--threads", global.threads,
                 "OpenMP thread count (1 forces bit-reproducibility)");
  app.add_option("--format", global.format, "Output table format")
      ->check(CLI::IsMember({"csv"}));

  std::string config_path, out_path = "out", data_path, ckpt_path, kind;
  int64_t case_id = 0, runs = -1;

  auto* gen = app.add_subcommand("gen", "Generate datasets");
  gen->add_option("--config", config_path, "Experiment config")->required();
  gen->add_option("--out", out_path, "Output directory");

  auto* train = app.add_subcommand("train", "Train the autoencoder prior");
  train->add_option("--config", config_path)->required();
  train->add_option("--data", data_path, "Dataset directory")->required();
  train->add_option("--out", out_path, "Checkpoint path")->required();

  auto* infer = app.add_subcommand("infer", "Posterior sampling for one case");
  infer->add_option("--config", config_path)->required();
  infer->add_option("--ckpt", ckpt_path)->required();
  infer->add_option("--data", data_path)->required();
  infer->add_option("--case-id", case_id)->required();
  infer->add_option("--out", out_path);

  auto* baseline = app.add_subcommand("baseline", "Evaluate a baseline");
  baseline->add_option("--kind", kind)
      ->required()
      ->check(CLI::IsMember({"direct", "gp-m12", "gp-m32", "gp-rbf"}));
  baseline->add_option("--config", config_path)->required();
  baseline->add_option("--out", out_path);

  auto* eval = app.add_subcommand("eval", "Full experiment pipeline");
  eval->add_option("--config", config_path)->required();
  eval->add_option("--runs", runs, "Number of held-out test cases");
  eval->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) global.seed = seed_value;
  if (global.threads > 0) omp_set_num_threads(global.threads);

  try {
    const ExperimentConfig cfg = load_config(config_path, global);
    if (gen->parsed()) return cmd_gen(cfg, out_path);
    if (train->parsed()) return cmd_train(cfg, data_path, out_path);
    if (infer->parsed())
      return cmd_infer(cfg, ckpt_path, data_path, case_id, out_path);
    if (baseline->parsed()) return cmd_baseline(cfg, kind, out_path);
    if (eval->parsed()) return cmd_eval(cfg, runs, out_path);
  } catch (const gabi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gabi::StageError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
