#include "gabi/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "gabi/errors.hpp"

namespace gabi {

Tensor GraphOperator::dense() const {
  Tensor d({matrix.n, matrix.n});
  for (int64_t i = 0; i < matrix.n; ++i)
    for (int64_t e = matrix.row_ptr[static_cast<size_t>(i)];
         e < matrix.row_ptr[static_cast<size_t>(i) + 1]; ++e)
      d(i, matrix.cols[static_cast<size_t>(e)]) =
          matrix.vals[static_cast<size_t>(e)];
  return d;
}

Mesh build_rectangle_mesh(double length, double width, int64_t nx,
                          int64_t ny) {
  if (!(length > 0.0) || !(width > 0.0))
    throw ValueError("build_rectangle_mesh: degenerate dimension");
  if (nx < 2 || ny < 2)
    throw ValueError("build_rectangle_mesh: need at least 2 nodes per axis");
  Mesh mesh;
  mesh.coords = Tensor({nx * ny, 2});
  mesh.boundary.assign(static_cast<size_t>(nx * ny), 0);
  const double hx = length / static_cast<double>(nx - 1);
  const double hy = width / static_cast<double>(ny - 1);
  for (int64_t j = 0; j < ny; ++j) {
    for (int64_t i = 0; i < nx; ++i) {
      const int64_t v = j * nx + i;
      mesh.coords(v, 0) = static_cast<double>(i) * hx;
      mesh.coords(v, 1) = static_cast<double>(j) * hy;
      if (i == 0 || i == nx - 1 || j == 0 || j == ny - 1)
        mesh.boundary[static_cast<size_t>(v)] = 1;
    }
  }
  mesh.edges.reserve(static_cast<size_t>(nx * (ny - 1) + ny * (nx - 1)));
  for (int64_t j = 0; j < ny; ++j)
    for (int64_t i = 0; i + 1 < nx; ++i)
      mesh.edges.push_back({j * nx + i, j * nx + i + 1});
  for (int64_t j = 0; j + 1 < ny; ++j)
    for (int64_t i = 0; i < nx; ++i)
      mesh.edges.push_back({j * nx + i, (j + 1) * nx + i});
  return mesh;
}

bool is_connected(const Mesh& mesh) {
  const int64_t n = mesh.num_vertices();
  if (n == 0) return false;
  std::vector<std::vector<int64_t>> adj(static_cast<size_t>(n));
  for (const auto& e : mesh.edges) {
    adj[static_cast<size_t>(e[0])].push_back(e[1]);
    adj[static_cast<size_t>(e[1])].push_back(e[0]);
  }
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int64_t> stack{0};
  seen[0] = 1;
  int64_t count = 1;
  while (!stack.empty()) {
    const int64_t v = stack.back();
    stack.pop_back();
    for (int64_t w : adj[static_cast<size_t>(v)]) {
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

namespace {
void check_edges(const Mesh& mesh, const char* where) {
  const int64_t n = mesh.num_vertices();
  for (const auto& e : mesh.edges) {
    if (e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n)
      throw ShapeError(std::string(where) + ": edge index out of range");
    if (e[0] == e[1])
      throw ShapeError(std::string(where) + ": self-loop in edge list");
  }
}
}  // namespace

GraphOperator normalized_adjacency(const Mesh& mesh) {
  check_edges(mesh, "normalized_adjacency");
  const int64_t n = mesh.num_vertices();
  if (!is_connected(mesh))
    std::cerr << "warning: normalized_adjacency on a disconnected graph\n";
  const int64_t d = mesh.dim();
  std::vector<int64_t> rows, cols;
  std::vector<double> vals;
  std::vector<double> degree(static_cast<size_t>(n), 1.0);  // self-loop weight
  for (const auto& e : mesh.edges) {
    double dist2 = 0.0;
    for (int64_t q = 0; q < d; ++q) {
      const double t = mesh.coords(e[0], q) - mesh.coords(e[1], q);
      dist2 += t * t;
    }
    const double w = 1.0 / (1.0 + std::sqrt(dist2));
    rows.push_back(e[0]);
    cols.push_back(e[1]);
    vals.push_back(w);
    rows.push_back(e[1]);
    cols.push_back(e[0]);
    vals.push_back(w);
    degree[static_cast<size_t>(e[0])] += w;
    degree[static_cast<size_t>(e[1])] += w;
  }
  for (int64_t i = 0; i < n; ++i) {
    rows.push_back(i);
    cols.push_back(i);
    vals.push_back(1.0);
  }
  for (size_t t = 0; t < vals.size(); ++t)
    vals[t] /= std::sqrt(degree[static_cast<size_t>(rows[t])] *
                         degree[static_cast<size_t>(cols[t])]);
  GraphOperator op;
  op.kind = GraphOperator::Kind::NormalizedAdjacency;
  op.weighting = "inverse-distance 1/(1+d), self-loop 1";
  op.matrix = Csr::from_triplets(n, rows, cols, vals);
  return op;
}

GraphOperator graph_laplacian(const Mesh& mesh) {
  check_edges(mesh, "graph_laplacian");
  const int64_t n = mesh.num_vertices();
  std::vector<int64_t> rows, cols;
  std::vector<double> vals;
  std::vector<double> degree(static_cast<size_t>(n), 0.0);
  for (const auto& e : mesh.edges) {
    rows.push_back(e[0]);
    cols.push_back(e[1]);
    vals.push_back(-1.0);
    rows.push_back(e[1]);
    cols.push_back(e[0]);
    vals.push_back(-1.0);
    degree[static_cast<size_t>(e[0])] += 1.0;
    degree[static_cast<size_t>(e[1])] += 1.0;
  }
  for (int64_t i = 0; i < n; ++i) {
    rows.push_back(i);
    cols.push_back(i);
    vals.push_back(degree[static_cast<size_t>(i)]);
  }
  GraphOperator op;
  op.kind = GraphOperator::Kind::Laplacian;
  op.weighting = "unit";
  op.matrix = Csr::from_triplets(n, rows, cols, vals);
  return op;
}

std::vector<double> select_observation(const ObservationOperator& op,
                                       const Field& field) {
  const int64_t n = field.num_nodes();
  if (op.channel < 0 || op.channel >= field.channels())
    throw ShapeError("observation: channel out of range");
  std::vector<double> y;
  y.reserve(op.node_ids.size());
  for (int64_t id : op.node_ids) {
    if (id < 0 || id >= n)
      throw ShapeError("observation: node index " + std::to_string(id) +
                       " out of range [0," + std::to_string(n) + ")");
    y.push_back(field.values(id, op.channel));
  }
  return y;
}

std::vector<double> apply_observation(const ObservationOperator& op,
                                      const Field& field, Rng& rng) {
  std::vector<double> y = select_observation(op, field);
  if (op.sigma > 0.0)
    for (double& v : y) v += op.sigma * rng.normal();
  return y;
}

double spectral_radius(const Csr& m, int iters, uint64_t seed) {
  Rng rng = Rng::stream(seed, {0x5a5aULL});
  std::vector<double> v(static_cast<size_t>(m.n));
  for (auto& x : v) x = rng.normal();
  std::vector<double> w(v.size());
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    kernels::spmm(m, v.data(), w.data(), 1);
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (size_t i = 0; i < v.size(); ++i) v[i] = w[i] / norm;
    lambda = norm;
  }
  return lambda;
}

}  // namespace gabi
