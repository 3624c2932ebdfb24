#ifndef GABI_INVERSE_HPP
#define GABI_INVERSE_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gabi/checkpoint.hpp"
#include "gabi/mesh.hpp"

namespace gabi {

/// Latent-to-field map used by the samplers. Implementations must be
/// deterministic and safe to call concurrently.
class FieldDecoder {
 public:
  virtual ~FieldDecoder() = default;
  virtual int64_t latent_dim() const = 0;
  virtual int64_t num_nodes() const = 0;
  virtual Field decode(const Tensor& z) const = 0;
};

/// Trained GCN decoder bound to one mesh. Each thread keeps its own
/// evaluation graph, rebuilt lazily, so batched sampling scales without
/// locking.
class GcnFieldDecoder : public FieldDecoder {
 public:
  GcnFieldDecoder(Checkpoint ckpt, Mesh mesh);
  ~GcnFieldDecoder() override;
  int64_t latent_dim() const override { return ckpt_.arch.latent; }
  int64_t num_nodes() const override { return mesh_.num_vertices(); }
  Field decode(const Tensor& z) const override;

 private:
  struct Cache;
  Cache& thread_cache() const;
  Checkpoint ckpt_;
  Mesh mesh_;
  GraphOperator adj_;
  mutable std::vector<std::unique_ptr<Cache>> caches_;
};

/// Affine test decoder D(z) = reshape(A z + b); the conjugate-Gaussian
/// oracle cases are built on this.
class LinearFieldDecoder : public FieldDecoder {
 public:
  LinearFieldDecoder(Tensor a, Tensor b, int64_t channels = 1);
  int64_t latent_dim() const override { return a_.dim(1); }
  int64_t num_nodes() const override { return a_.dim(0) / channels_; }
  Field decode(const Tensor& z) const override;

 private:
  Tensor a_;  // (N·d_u) × d_z
  Tensor b_;  // N·d_u
  int64_t channels_;
};

enum class NoiseMode { KnownSigma, InferSigma };

struct InverseProblem {
  const Mesh* mesh = nullptr;
  std::vector<ObservationOperator> observations;
  std::vector<double> y;  // concatenated in operator order
  const FieldDecoder* decoder = nullptr;
  NoiseMode noise_mode = NoiseMode::KnownSigma;
};

/// Shifted log-normal observation-noise prior: σ = exp(ε − 4) + 1e-3 with
/// ε ~ N(0,1). `fixed_eps` collapses it to a point mass (test hook).
struct NoisePrior {
  double shift = -4.0;
  double floor = 1e-3;
  std::optional<double> fixed_eps;

  double transform(double eps) const { return std::exp(eps + shift) + floor; }
  double sample(Rng& rng) const {
    return transform(fixed_eps ? *fixed_eps : rng.normal());
  }
  double median() const { return transform(fixed_eps ? *fixed_eps : 0.0); }
};

struct EnsembleMeta {
  int64_t total_samples = 0;  // N_s (ABC) or chain length (pCN)
  uint64_t seed = 0;
  double acceptance_rate = 0.0;
  std::string method;
  bool low_acceptance_warning = false;
};

/// Accepted posterior samples, residual-sorted ascending (ties by draw
/// index). fields[i] is exactly decode(latents row i).
struct PosteriorEnsemble {
  Tensor latents;  // N_a × d_z
  std::vector<Field> fields;
  std::vector<double> sigmas;  // joint-noise runs only
  std::vector<double> residuals;
  EnsembleMeta meta;

  int64_t size() const { return static_cast<int64_t>(fields.size()); }
};

/// Truncation ABC: draw n_total latents from N(0,I), simulate observations
/// with the operators' σ, keep the n_accept smallest residuals.
PosteriorEnsemble abc_sample(const InverseProblem& problem, int64_t n_total,
                             int64_t n_accept, int64_t batch, uint64_t seed);

/// Joint (z, σ) ABC: per-sample σ drawn from the prior replaces every
/// operator's σ in the simulation; accepted σ ride along unchanged.
PosteriorEnsemble abc_sample_joint_noise(const InverseProblem& problem,
                                         const NoisePrior& prior,
                                         int64_t n_total, int64_t n_accept,
                                         int64_t batch, uint64_t seed);

/// Preconditioned Crank-Nicolson chain targeting the latent posterior:
/// proposal z' = sqrt(1-β²) z + β w preserves N(0,I) exactly, the
/// Metropolis correction uses Φ(z) = Σ_ops ||y − H decode(z)||²/(2σ²).
PosteriorEnsemble pcn_sample(const InverseProblem& problem, int64_t n_steps,
                             double beta, int64_t burn_in, int64_t thin,
                             uint64_t seed);

/// Prior pushforward samples (ABC machinery with no observations, all
/// draws kept): identical latent stream to abc_sample under the same seed.
PosteriorEnsemble sample_prior(const FieldDecoder& decoder, const Mesh& mesh,
                               int64_t n, int64_t batch, uint64_t seed);

struct PosteriorStats {
  Field mean;
  Field stdev;                  // unbiased
  std::vector<Field> quantiles;  // one per requested level
};
PosteriorStats posterior_stats(const PosteriorEnsemble& ensemble,
                               std::span<const double> quantile_levels = {});

/// GABD container with the decoded fields plus a JSON sidecar
/// (residuals, sigmas, metadata) at path + ".json".
void write_ensemble(const PosteriorEnsemble& ensemble, const Mesh& mesh,
                    const std::string& path);

}  // namespace gabi

#endif  // GABI_INVERSE_HPP
