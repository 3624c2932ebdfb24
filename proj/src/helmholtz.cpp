#include "gabi/helmholtz.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "gabi/errors.hpp"

namespace gabi {

namespace {
double sq_distance(const Mesh& mesh, int64_t a, int64_t b) {
  double s = 0.0;
  for (int64_t q = 0; q < mesh.dim(); ++q) {
    const double t = mesh.coords(a, q) - mesh.coords(b, q);
    s += t * t;
  }
  return s;
}
}  // namespace

std::pair<Mesh, Field> solve_graph_helmholtz(const HelmholtzProblemSpec& spec) {
  const Mesh& mesh = spec.mesh;
  const int64_t n = mesh.num_vertices();
  if (!is_connected(mesh))
    throw ValueError("solve_graph_helmholtz: mesh must be connected");
  if (spec.source_center < 0 || spec.source_center >= n)
    throw ShapeError("solve_graph_helmholtz: source center out of range");

  Eigen::VectorXd f(n);
  const double inv2w2 = 1.0 / (2.0 * spec.source_width * spec.source_width);
  for (int64_t i = 0; i < n; ++i)
    f[i] = spec.source_amplitude *
           std::exp(-sq_distance(mesh, i, spec.source_center) * inv2w2);

  const GraphOperator lap = graph_laplacian(mesh);
  const Tensor l = lap.dense();
  const std::complex<double> shift(-spec.kappa, spec.gamma * spec.kappa);
  Eigen::MatrixXcd a(n, n);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j)
      a(i, j) = std::complex<double>(l(i, j), 0.0) +
                (i == j ? shift : std::complex<double>(0.0, 0.0));
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  const Eigen::VectorXcd u = lu.solve(f.cast<std::complex<double>>());
  const double residual =
      (a * u - f.cast<std::complex<double>>()).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-8))
    throw SolverError("solve_graph_helmholtz: singular system at kappa=" +
                      std::to_string(spec.kappa) + " (residual " +
                      std::to_string(residual) + ")");

  Field field;
  field.values = Tensor({n, 2});
  field.channel_names = {"u", "f"};
  for (int64_t i = 0; i < n; ++i) {
    field.values(i, 0) = std::abs(u[i]);
    field.values(i, 1) = f[i];
  }
  return {mesh, std::move(field)};
}

Mesh build_random_geometric_graph(int64_t n, Rng& rng) {
  if (n < 3) throw ValueError("build_random_geometric_graph: need n >= 3");
  Mesh mesh;
  mesh.coords = Tensor({n, 2});
  std::vector<std::pair<double, double>> pts(static_cast<size_t>(n));
  for (auto& p : pts) {
    p.first = rng.uniform();
    p.second = rng.uniform();
  }
  std::sort(pts.begin(), pts.end());
  for (int64_t i = 0; i < n; ++i) {
    mesh.coords(i, 0) = pts[static_cast<size_t>(i)].first;
    mesh.coords(i, 1) = pts[static_cast<size_t>(i)].second;
  }
  auto add_edge = [&](int64_t a, int64_t b) {
    if (a == b) return;
    const auto e = std::array<int64_t, 2>{std::min(a, b), std::max(a, b)};
    if (std::find(mesh.edges.begin(), mesh.edges.end(), e) == mesh.edges.end())
      mesh.edges.push_back(e);
  };
  // x-sorted chain keeps the graph connected.
  for (int64_t i = 0; i + 1 < n; ++i) add_edge(i, i + 1);
  for (int64_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, int64_t>> dist;
    dist.reserve(static_cast<size_t>(n - 1));
    for (int64_t j = 0; j < n; ++j)
      if (j != i) dist.emplace_back(sq_distance(mesh, i, j), j);
    std::partial_sort(dist.begin(), dist.begin() + 2, dist.end());
    add_edge(i, dist[0].second);
    add_edge(i, dist[1].second);
  }
  return mesh;
}

HelmholtzProblemSpec sample_helmholtz_spec(Mesh mesh, double kappa,
                                           double gamma, Rng& rng) {
  HelmholtzProblemSpec spec;
  spec.kappa = kappa;
  spec.gamma = gamma;
  const int64_t n = mesh.num_vertices();
  double min_x = mesh.coords(0, 0), max_x = mesh.coords(0, 0);
  for (int64_t i = 1; i < n; ++i) {
    min_x = std::min(min_x, mesh.coords(i, 0));
    max_x = std::max(max_x, mesh.coords(i, 0));
  }
  const double cutoff = min_x + 0.2 * (max_x - min_x);
  std::vector<int64_t> leading;
  for (int64_t i = 0; i < n; ++i)
    if (mesh.coords(i, 0) <= cutoff) leading.push_back(i);
  spec.source_center =
      leading[static_cast<size_t>(rng.below(leading.size()))];
  spec.source_width = rng.uniform(0.05, 0.15) * std::max(max_x - min_x, 1e-9);
  spec.source_amplitude = rng.uniform(0.5, 1.5);
  spec.mesh = std::move(mesh);
  return spec;
}

Dataset sample_helmholtz_dataset(int64_t n, int64_t nodes, double kappa,
                                 double gamma, uint64_t seed) {
  if (n < 1) throw ValueError("sample_helmholtz_dataset: n must be >= 1");
  Dataset ds;
  ds.samples.resize(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    Rng graph_rng = Rng::stream(seed, {streams::kHelmholtzGraph,
                                       static_cast<uint64_t>(i)});
    Rng source_rng = Rng::stream(seed, {streams::kHelmholtzSource,
                                        static_cast<uint64_t>(i)});
    Mesh mesh = build_random_geometric_graph(nodes, graph_rng);
    const HelmholtzProblemSpec spec =
        sample_helmholtz_spec(std::move(mesh), kappa, gamma, source_rng);
    ds.samples[static_cast<size_t>(i)] = solve_graph_helmholtz(spec);
  }
  ds.normalization = compute_normalization(ds);
  return ds;
}

std::vector<int64_t> bump_support(const HelmholtzProblemSpec& spec) {
  std::vector<int64_t> support;
  const double r2 = 4.0 * spec.source_width * spec.source_width;  // 2 widths
  for (int64_t i = 0; i < spec.mesh.num_vertices(); ++i)
    if (sq_distance(spec.mesh, i, spec.source_center) <= r2)
      support.push_back(i);
  return support;
}

}  // namespace gabi
