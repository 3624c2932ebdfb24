#ifndef GABI_HEAT_HPP
#define GABI_HEAT_HPP

#include <functional>
#include <utility>

#include "gabi/dataset.hpp"
#include "gabi/mesh.hpp"

namespace gabi {

/// Steady-state heat problem on [0,l]×[0,w]: Laplace equation with Dirichlet
/// data. Bottom and left boundary values are fixed at zero; top and right are
/// per-side constants.
struct HeatProblemSpec {
  double length = 1.0;
  double width = 1.0;
  double bc_top = 0.0;
  double bc_right = 0.0;
};

/// 5-point finite-difference solve on a structured nx×ny grid. Direct sparse
/// factorization; throws SolverError if the residual exceeds 1e-10.
std::pair<Mesh, Field> solve_heat(const HeatProblemSpec& spec, int64_t nx,
                                  int64_t ny);

/// Test hook: arbitrary boundary profiles u(x,y) given per side as functions
/// of arc coordinate. Used by the separation-of-variables oracle.
struct BoundaryProfiles {
  std::function<double(double x)> bottom;  // y = 0
  std::function<double(double x)> top;     // y = w
  std::function<double(double y)> left;    // x = 0
  std::function<double(double y)> right;   // x = l
};
std::pair<Mesh, Field> solve_heat_profiles(double length, double width,
                                           const BoundaryProfiles& bc,
                                           int64_t nx, int64_t ny);

/// Draw a HeatProblemSpec per the experiment distributions:
/// (l,w) ~ U([0.1,1]²), bc_top ~ U[0.1,1], bc_right ~ U[0,1].
HeatProblemSpec sample_heat_spec(Rng& rng);

/// n independent draws, solved on an nx×ny grid; normalization attached.
Dataset sample_heat_dataset(int64_t n, int64_t nx, int64_t ny, uint64_t seed);

}  // namespace gabi

#endif  // GABI_HEAT_HPP
