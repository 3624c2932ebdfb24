#ifndef GABI_GRAPH_GP_HPP
#define GABI_GRAPH_GP_HPP

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "gabi/mesh.hpp"

namespace gabi {

enum class GpKernel { Matern12, Matern32, Rbf };

const char* gp_kernel_name(GpKernel k);

/// Cached eigendecomposition of the combinatorial Laplacian; shared between
/// fits on the same mesh topology.
struct LaplacianEigen {
  Eigen::VectorXd lambda;  // ascending, lambda[0] ~ 0
  Eigen::MatrixXd v;       // orthonormal columns
};
std::shared_ptr<const LaplacianEigen> laplacian_eigen(const Mesh& mesh);

/// Spectral graph GP: K = c · V f(Λ) Vᵀ with
///   f(λ) = (2ν/ℓ² + λ)^(−ν)  for Matérn ν ∈ {1/2, 3/2},
///   f(λ) = exp(−ℓ²λ/2)       for RBF,
/// rescaled by c so the mean prior variance equals σ_f².
struct GraphGpModel {
  GpKernel kernel = GpKernel::Matern32;
  double sigma_f = 1.0;
  double length = 1.0;
  double noise = 1e-2;
  std::shared_ptr<const LaplacianEigen> eig;
};

Eigen::MatrixXd gp_kernel_matrix(const GraphGpModel& model);

struct GpFitGrid {
  std::vector<double> sigma_f;
  std::vector<double> length;
  std::vector<double> noise;  // empty => noise fixed at fixed_noise

  /// 20×20 log-spaced over σ_f, ℓ ∈ [1e-2, 10]; add_noise appends an
  /// 8-point log-spaced σ grid over [1e-3, 1].
  static GpFitGrid standard(bool add_noise);
};

/// Maximum marginal likelihood over the grid; ties broken by smaller ℓ,
/// then smaller σ_f, then smaller σ.
GraphGpModel gp_fit_mml(std::shared_ptr<const LaplacianEigen> eig,
                        const ObservationOperator& obs,
                        std::span<const double> y, GpKernel kernel,
                        const GpFitGrid& grid, double fixed_noise);

double gp_log_marginal_likelihood(const GraphGpModel& model,
                                  const ObservationOperator& obs,
                                  std::span<const double> y);

/// Posterior mean and per-node standard deviation (single channel).
std::pair<Field, Field> gp_posterior(const GraphGpModel& model,
                                     const ObservationOperator& obs,
                                     std::span<const double> y);

}  // namespace gabi

#endif  // GABI_GRAPH_GP_HPP
