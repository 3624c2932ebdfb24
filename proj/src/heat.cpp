#include "gabi/heat.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <vector>

#include "gabi/errors.hpp"

namespace gabi {

namespace {

// Boundary precedence at corners: bottom, left, top, right (first match
// wins). Corner values never enter the interior stencil on a structured
// grid, so this only affects the reported field at the four corners.
double boundary_value(const BoundaryProfiles& bc, int64_t i, int64_t j,
                      int64_t nx, int64_t ny, double x, double y) {
  if (j == 0) return bc.bottom(x);
  if (i == 0) return bc.left(y);
  if (j == ny - 1) return bc.top(x);
  if (i == nx - 1) return bc.right(y);
  throw ValueError("boundary_value: point is not on the boundary");
}

}  // namespace

std::pair<Mesh, Field> solve_heat_profiles(double length, double width,
                                           const BoundaryProfiles& bc,
                                           int64_t nx, int64_t ny) {
  if (nx < 3 || ny < 3)
    throw ValueError("solve_heat: grid must be at least 3x3");
  Mesh mesh = build_rectangle_mesh(length, width, nx, ny);
  const double hx = length / static_cast<double>(nx - 1);
  const double hy = width / static_cast<double>(ny - 1);
  const double cx = 1.0 / (hx * hx);
  const double cy = 1.0 / (hy * hy);

  Field field;
  field.values = Tensor({nx * ny, 1});
  field.channel_names = {"u"};
  for (int64_t j = 0; j < ny; ++j) {
    for (int64_t i = 0; i < nx; ++i) {
      const int64_t v = j * nx + i;
      if (!mesh.boundary[static_cast<size_t>(v)]) continue;
      field.values(v, 0) = boundary_value(bc, i, j, nx, ny, mesh.coords(v, 0),
                                          mesh.coords(v, 1));
    }
  }

  // Interior unknowns of -Δu = 0 (SPD after sign flip).
  const int64_t mx = nx - 2, my = ny - 2;
  const int64_t m = mx * my;
  auto unknown = [&](int64_t i, int64_t j) { return (j - 1) * mx + (i - 1); };
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(5 * m));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (int64_t j = 1; j <= my; ++j) {
    for (int64_t i = 1; i <= mx; ++i) {
      const int64_t row = unknown(i, j);
      trips.emplace_back(row, row, 2.0 * (cx + cy));
      const auto neighbor = [&](int64_t ii, int64_t jj, double coef) {
        if (ii >= 1 && ii <= mx && jj >= 1 && jj <= my) {
          trips.emplace_back(row, unknown(ii, jj), -coef);
        } else {
          rhs[row] += coef * field.values(jj * nx + ii, 0);
        }
      };
      neighbor(i - 1, j, cx);
      neighbor(i + 1, j, cx);
      neighbor(i, j - 1, cy);
      neighbor(i, j + 1, cy);
    }
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success)
    throw SolverError("solve_heat: factorization failed");
  const Eigen::VectorXd u = solver.solve(rhs);
  const double residual = (A * u - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10))
    throw SolverError("solve_heat: residual " + std::to_string(residual) +
                      " exceeds 1e-10");
  for (int64_t j = 1; j <= my; ++j)
    for (int64_t i = 1; i <= mx; ++i)
      field.values(j * nx + i, 0) = u[unknown(i, j)];
  return {std::move(mesh), std::move(field)};
}

std::pair<Mesh, Field> solve_heat(const HeatProblemSpec& spec, int64_t nx,
                                  int64_t ny) {
  BoundaryProfiles bc;
  bc.bottom = [](double) { return 0.0; };
  bc.left = [](double) { return 0.0; };
  bc.top = [v = spec.bc_top](double) { return v; };
  bc.right = [v = spec.bc_right](double) { return v; };
  return solve_heat_profiles(spec.length, spec.width, bc, nx, ny);
}

HeatProblemSpec sample_heat_spec(Rng& rng) {
  HeatProblemSpec spec;
  spec.length = rng.uniform(0.1, 1.0);
  spec.width = rng.uniform(0.1, 1.0);
  spec.bc_top = rng.uniform(0.1, 1.0);
  spec.bc_right = rng.uniform(0.0, 1.0);
  return spec;
}

Dataset sample_heat_dataset(int64_t n, int64_t nx, int64_t ny, uint64_t seed) {
  if (n < 1) throw ValueError("sample_heat_dataset: n must be >= 1");
  Dataset ds;
  ds.samples.resize(static_cast<size_t>(n));
  // Each sample owns an RNG stream derived from (seed, index), so the loop
  // parallelizes without changing results.
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, {streams::kDatasetGeometry,
                                 static_cast<uint64_t>(i)});
    const HeatProblemSpec spec = sample_heat_spec(rng);
    ds.samples[static_cast<size_t>(i)] = solve_heat(spec, nx, ny);
  }
  ds.normalization = compute_normalization(ds);
  return ds;
}

}  // namespace gabi
