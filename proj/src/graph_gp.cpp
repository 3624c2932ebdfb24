#include "gabi/graph_gp.hpp"

#include <cmath>
#include <numbers>

#include "gabi/errors.hpp"

namespace gabi {

const char* gp_kernel_name(GpKernel k) {
  switch (k) {
    case GpKernel::Matern12: return "matern-1/2";
    case GpKernel::Matern32: return "matern-3/2";
    case GpKernel::Rbf: return "rbf";
  }
  return "?";
}

std::shared_ptr<const LaplacianEigen> laplacian_eigen(const Mesh& mesh) {
  const GraphOperator lap = graph_laplacian(mesh);
  const Tensor dense = lap.dense();
  const int64_t n = mesh.num_vertices();
  Eigen::MatrixXd l(n, n);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) l(i, j) = dense(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l);
  if (solver.info() != Eigen::Success)
    throw SolverError("laplacian_eigen: eigendecomposition failed");
  auto eig = std::make_shared<LaplacianEigen>();
  eig->lambda = solver.eigenvalues();
  eig->v = solver.eigenvectors();
  if (std::fabs(eig->lambda[0]) > 1e-10)
    throw SolverError("laplacian_eigen: smallest eigenvalue " +
                      std::to_string(eig->lambda[0]) + " is not ~0");
  return eig;
}

namespace {

Eigen::VectorXd spectral_weights(GpKernel kernel, double length,
                                 const Eigen::VectorXd& lambda) {
  Eigen::VectorXd w(lambda.size());
  switch (kernel) {
    case GpKernel::Matern12:
      for (Eigen::Index i = 0; i < lambda.size(); ++i)
        w[i] = 1.0 / std::sqrt(1.0 / (length * length) + lambda[i]);
      break;
    case GpKernel::Matern32:
      for (Eigen::Index i = 0; i < lambda.size(); ++i)
        w[i] = std::pow(3.0 / (length * length) + lambda[i], -1.5);
      break;
    case GpKernel::Rbf:
      for (Eigen::Index i = 0; i < lambda.size(); ++i)
        w[i] = std::exp(-0.5 * length * length * lambda[i]);
      break;
  }
  return w;
}

// Mean prior variance of the unscaled kernel is sum(w)/N because V has
// orthonormal columns; c makes it equal sigma_f².
double rescale_coefficient(double sigma_f, const Eigen::VectorXd& w) {
  return sigma_f * sigma_f * static_cast<double>(w.size()) / w.sum();
}

struct ObsKernel {
  Eigen::MatrixXd k_oo;  // m×m
  Eigen::MatrixXd b;     // m×N rows of V at observed nodes
};

ObsKernel observed_kernel(const GraphGpModel& model,
                          const ObservationOperator& obs) {
  const auto& eig = *model.eig;
  const int64_t m = static_cast<int64_t>(obs.node_ids.size());
  const Eigen::VectorXd w =
      spectral_weights(model.kernel, model.length, eig.lambda);
  const double c = rescale_coefficient(model.sigma_f, w);
  ObsKernel out;
  out.b.resize(m, eig.v.cols());
  for (int64_t i = 0; i < m; ++i) out.b.row(i) = eig.v.row(obs.node_ids[static_cast<size_t>(i)]);
  out.k_oo.noalias() = c * out.b * w.asDiagonal() * out.b.transpose();
  return out;
}

Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(Eigen::MatrixXd s) {
  // Jitter escalation: 0, 1e-10, 1e-8, 1e-6.
  for (double jitter : {0.0, 1e-10, 1e-8, 1e-6}) {
    Eigen::MatrixXd sj = s;
    for (Eigen::Index i = 0; i < s.rows(); ++i) sj(i, i) += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(sj);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw SolverError("graph_gp: covariance not PSD after jitter escalation");
}

double lml_from(const Eigen::MatrixXd& k_oo, double noise,
                std::span<const double> y) {
  const Eigen::Index m = k_oo.rows();
  Eigen::MatrixXd s = k_oo;
  for (Eigen::Index i = 0; i < m; ++i) s(i, i) += noise * noise;
  const auto llt = chol_with_jitter(std::move(s));
  Eigen::VectorXd yv(m);
  for (Eigen::Index i = 0; i < m; ++i) yv[i] = y[static_cast<size_t>(i)];
  const Eigen::VectorXd alpha = llt.solve(yv);
  double logdet = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < m; ++i) logdet += 2.0 * std::log(l(i, i));
  return -0.5 * yv.dot(alpha) - 0.5 * logdet -
         0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

Eigen::MatrixXd gp_kernel_matrix(const GraphGpModel& model) {
  const auto& eig = *model.eig;
  const Eigen::VectorXd w =
      spectral_weights(model.kernel, model.length, eig.lambda);
  const double c = rescale_coefficient(model.sigma_f, w);
  return c * eig.v * w.asDiagonal() * eig.v.transpose();
}

GpFitGrid GpFitGrid::standard(bool add_noise) {
  GpFitGrid grid;
  const auto logspace = [](double lo, double hi, int n) {
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      v[static_cast<size_t>(i)] =
          lo * std::pow(hi / lo, static_cast<double>(i) /
                                      static_cast<double>(n - 1));
    return v;
  };
  grid.sigma_f = logspace(1e-2, 10.0, 20);
  grid.length = logspace(1e-2, 10.0, 20);
  if (add_noise) grid.noise = logspace(1e-3, 1.0, 8);
  return grid;
}

double gp_log_marginal_likelihood(const GraphGpModel& model,
                                  const ObservationOperator& obs,
                                  std::span<const double> y) {
  const ObsKernel ok = observed_kernel(model, obs);
  return lml_from(ok.k_oo, model.noise, y);
}

GraphGpModel gp_fit_mml(std::shared_ptr<const LaplacianEigen> eig,
                        const ObservationOperator& obs,
                        std::span<const double> y, GpKernel kernel,
                        const GpFitGrid& grid, double fixed_noise) {
  if (grid.sigma_f.empty() || grid.length.empty())
    throw ValueError("gp_fit_mml: empty hyperparameter grid");
  const std::vector<double> noises =
      grid.noise.empty() ? std::vector<double>{fixed_noise} : grid.noise;
  struct Candidate {
    double sigma_f, length, noise;
  };
  std::vector<Candidate> cands;
  for (double sf : grid.sigma_f)
    for (double l : grid.length)
      for (double s : noises) cands.push_back({sf, l, s});
  std::vector<double> lml(cands.size());
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(cands.size()); ++i) {
    GraphGpModel m;
    m.kernel = kernel;
    m.sigma_f = cands[static_cast<size_t>(i)].sigma_f;
    m.length = cands[static_cast<size_t>(i)].length;
    m.noise = cands[static_cast<size_t>(i)].noise;
    m.eig = eig;
    lml[static_cast<size_t>(i)] = gp_log_marginal_likelihood(m, obs, y);
  }
  size_t best = 0;
  for (size_t i = 1; i < cands.size(); ++i) {
    const bool better =
        lml[i] > lml[best] ||
        (lml[i] == lml[best] &&
         (cands[i].length < cands[best].length ||
          (cands[i].length == cands[best].length &&
           (cands[i].sigma_f < cands[best].sigma_f ||
            (cands[i].sigma_f == cands[best].sigma_f &&
             cands[i].noise < cands[best].noise)))));
    if (better) best = i;
  }
  GraphGpModel model;
  model.kernel = kernel;
  model.sigma_f = cands[best].sigma_f;
  model.length = cands[best].length;
  model.noise = cands[best].noise;
  model.eig = std::move(eig);
  return model;
}

std::pair<Field, Field> gp_posterior(const GraphGpModel& model,
                                     const ObservationOperator& obs,
                                     std::span<const double> y) {
  const auto& eig = *model.eig;
  const int64_t n = eig.v.rows();
  const Eigen::VectorXd w =
      spectral_weights(model.kernel, model.length, eig.lambda);
  const double c = rescale_coefficient(model.sigma_f, w);

  Field mean, stdev;
  mean.values = Tensor({n, 1});
  stdev.values = Tensor({n, 1});

  Eigen::VectorXd prior_diag(n);
  for (int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int64_t k = 0; k < n; ++k) s += w[k] * eig.v(i, k) * eig.v(i, k);
    prior_diag[i] = c * s;
  }

  const int64_t m = static_cast<int64_t>(obs.node_ids.size());
  if (m == 0) {
    for (int64_t i = 0; i < n; ++i)
      stdev.values(i, 0) = std::sqrt(std::max(0.0, prior_diag[i]));
    return {std::move(mean), std::move(stdev)};
  }

  const ObsKernel ok = observed_kernel(model, obs);
  Eigen::MatrixXd s = ok.k_oo;
  for (int64_t i = 0; i < m; ++i) s(i, i) += model.noise * model.noise;
  const auto llt = chol_with_jitter(std::move(s));

  Eigen::VectorXd yv(m);
  for (int64_t i = 0; i < m; ++i) yv[i] = y[static_cast<size_t>(i)];
  const Eigen::VectorXd alpha = llt.solve(yv);

  // K_*o = c · V diag(w) Bᵀ
  Eigen::MatrixXd k_star_o(n, m);
  k_star_o.noalias() = c * eig.v * (w.asDiagonal() * ok.b.transpose());
  const Eigen::VectorXd mu = k_star_o * alpha;
  const Eigen::MatrixXd q =
      llt.matrixL().solve(k_star_o.transpose());  // m×N
  for (int64_t i = 0; i < n; ++i) {
    mean.values(i, 0) = mu[i];
    const double var = prior_diag[i] - q.col(i).squaredNorm();
    stdev.values(i, 0) = std::sqrt(std::max(0.0, var));
  }
  return {std::move(mean), std::move(stdev)};
}

}  // namespace gabi
