#ifndef GABI_HELMHOLTZ_HPP
#define GABI_HELMHOLTZ_HPP

#include <utility>

#include "gabi/dataset.hpp"
#include "gabi/mesh.hpp"

namespace gabi {

/// Damped Helmholtz resonance on a graph: (L − κ + iγκ) u = f with a
/// Gaussian bump forcing centered in the leading fifth of the x-extent.
struct HelmholtzProblemSpec {
  Mesh mesh;
  double kappa = 4.0;
  double gamma = 0.2;
  int64_t source_center = 0;  // vertex index, x within the leading fifth
  double source_width = 0.1;
  double source_amplitude = 1.0;
};

/// Complex direct solve; returned Field has channels [|u|, f].
std::pair<Mesh, Field> solve_graph_helmholtz(const HelmholtzProblemSpec& spec);

/// Connected random geometric graph in [0,1]²: points sorted by x are
/// chained (guaranteeing connectivity) and each vertex links to its two
/// nearest neighbors.
Mesh build_random_geometric_graph(int64_t n, Rng& rng);

/// Draw a spec on the given mesh: the source vertex is uniform among those
/// with x ≤ min_x + 0.2·(max_x − min_x); width ~ U[0.05,0.15]·x-extent;
/// amplitude ~ U[0.5,1.5].
HelmholtzProblemSpec sample_helmholtz_spec(Mesh mesh, double kappa,
                                           double gamma, Rng& rng);

Dataset sample_helmholtz_dataset(int64_t n, int64_t nodes, double kappa,
                                 double gamma, uint64_t seed);

/// Nodes within two source widths of the bump center (f ≥ amplitude·e⁻²);
/// the support set used by localization metrics.
std::vector<int64_t> bump_support(const HelmholtzProblemSpec& spec);

}  // namespace gabi

#endif  // GABI_HELMHOLTZ_HPP
