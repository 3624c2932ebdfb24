#ifndef GABI_EXPERIMENT_HPP
#define GABI_EXPERIMENT_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gabi/checkpoint.hpp"
#include "gabi/dataset.hpp"
#include "gabi/direct_map.hpp"
#include "gabi/inverse.hpp"
#include "gabi/metrics.hpp"
#include "gabi/train.hpp"

namespace gabi {

struct DatasetConfig {
  int64_t train_count = 200;
  int64_t test_count = 100;
  int64_t grid_nx = 33;  // heat
  int64_t grid_ny = 33;
  int64_t nodes = 30;  // helmholtz
  double kappa = 4.0;
  double gamma = 0.2;
};

struct ModelConfig {
  int64_t layers = 4;
  int64_t channels = 64;
  int64_t latent = 32;
  int64_t iterations = 3000;
  int64_t batch_size = 16;
  double learning_rate = 1e-3;
  double mmd_weight = 1.0;
  double lr_decay = 1.0;
};

struct SamplerConfig {
  std::string method = "abc";  // abc | pcn
  int64_t num_samples = 2048;
  int64_t num_accepted = 64;
  int64_t batch = 256;
  double beta = 0.2;
  int64_t steps = 20000;
  int64_t burn_in = 2000;
  int64_t thin = 10;
};

struct ObservationConfig {
  int64_t count = 10;
  double sigma = 1e-2;
  std::string noise_mode = "known";  // known | infer
  int64_t channel = 0;
};

struct DirectConfig {
  int64_t hidden = 64;
  int64_t layers = 4;
  int64_t iterations = 2000;
  int64_t batch_size = 16;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;
};

struct ExperimentConfig {
  std::string problem = "heat";  // heat | helmholtz
  uint64_t seed = 0;
  DatasetConfig dataset;
  ModelConfig model;
  SamplerConfig sampler;
  ObservationConfig observation;
  DirectConfig direct;
  std::vector<std::string> methods = {"gabi-abc"};
  std::vector<int64_t> query_nodes;
  std::string checkpoint;  // optional pre-trained model (training skipped)
  std::string output_dir;
  std::string canonical;  // canonical JSON, drives the config digest

  GcnArchitecture arch(int64_t coord_dim, int64_t field_channels) const;
};

/// Strict parse: unknown keys anywhere are a hard ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_file(const std::string& path);

/// Pipeline stage failure; carries the stage name for diagnostics.
struct StageError : std::runtime_error {
  StageError(const std::string& stage_name, const std::string& msg)
      : std::runtime_error("stage '" + stage_name + "' failed: " + msg),
        stage(stage_name) {}
  std::string stage;
};

/// Train/test split with training-only normalization on both halves.
std::pair<Dataset, Dataset> generate_datasets(const ExperimentConfig& cfg);

/// A held-out case's observation: the operator, the noisy vector, and the
/// σ that generated it (drawn from the noise prior in infer mode).
struct CaseObservation {
  ObservationOperator op;
  std::vector<double> y;
  double sigma_true = 0.0;
};
CaseObservation make_case_observation(const ExperimentConfig& cfg,
                                      int64_t case_index, const Field& truth);

/// Full generate → train → infer → evaluate pipeline. Writes metrics.csv,
/// timings.csv, loss_trace.csv, per-case field dumps and query-node sample
/// CSVs into out_dir. `runs_override` replaces dataset.test_count.
std::vector<MetricsRow> run_eval(const ExperimentConfig& cfg,
                                 const std::string& out_dir,
                                 int64_t runs_override = -1);

Checkpoint train_gabi_model(const ExperimentConfig& cfg, const Dataset& train,
                            LossTrace* trace_out);

}  // namespace gabi

#endif  // GABI_EXPERIMENT_HPP
