#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gabi/errors.hpp"
#include "gabi/heat.hpp"

using namespace gabi;

namespace {

// Separation-of-variables solution for bc_top = sin(pi x / l), other sides
// zero: u = sin(pi x/l) sinh(pi y/l) / sinh(pi w/l).
double analytic_sine_mode(double x, double y, double l, double w) {
  const double k = std::numbers::pi / l;
  return std::sin(k * x) * std::sinh(k * y) / std::sinh(k * w);
}

double max_error_vs_analytic(int64_t n) {
  const double l = 1.0, w = 1.0;
  BoundaryProfiles bc;
  bc.bottom = [](double) { return 0.0; };
  bc.left = [](double) { return 0.0; };
  bc.right = [](double) { return 0.0; };
  bc.top = [l](double x) { return std::sin(std::numbers::pi * x / l); };
  const auto [mesh, field] = solve_heat_profiles(l, w, bc, n, n);
  double err = 0.0;
  for (int64_t v = 0; v < mesh.num_vertices(); ++v) {
    const double u = analytic_sine_mode(mesh.coords(v, 0), mesh.coords(v, 1), l, w);
    err = std::max(err, std::fabs(field.values(v, 0) - u));
  }
  return err;
}

}  // namespace

TEST_CASE("all-zero boundary gives the zero field") {
  HeatProblemSpec spec{0.7, 0.4, 0.0, 0.0};
  const auto [mesh, field] = solve_heat(spec, 9, 11);
  for (int64_t i = 0; i < field.values.numel(); ++i)
    CHECK(field.values[i] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("discrete maximum principle") {
  HeatProblemSpec spec{0.9, 0.3, 0.8, 0.35};
  const auto [mesh, field] = solve_heat(spec, 17, 13);
  for (int64_t i = 0; i < field.values.numel(); ++i) {
    CHECK(field.values[i] >= -1e-12);
    CHECK(field.values[i] <= 0.8 + 1e-12);
  }
}

TEST_CASE("single-Fourier-mode boundary matches separation of variables") {
  CHECK(max_error_vs_analytic(64) <= 1e-3);
}

TEST_CASE("grid convergence is second order") {
  const double e17 = max_error_vs_analytic(17);
  const double e33 = max_error_vs_analytic(33);
  const double e65 = max_error_vs_analytic(65);
  const double slope1 = std::log2(e17 / e33);
  const double slope2 = std::log2(e33 / e65);
  CHECK(slope1 >= 1.8);
  CHECK(slope2 >= 1.8);
}

TEST_CASE("grids below 3x3 are rejected") {
  CHECK_THROWS_AS(solve_heat({1, 1, 0.5, 0.5}, 2, 5), ValueError);
}

TEST_CASE("heat dataset sampling: support, determinism, variety") {
  const Dataset ds = sample_heat_dataset(16, 9, 9, 2024);
  CHECK(ds.size() == 16);
  std::set<double> lengths;
  for (const auto& [mesh, field] : ds.samples) {
    double max_x = 0.0, max_y = 0.0;
    for (int64_t v = 0; v < mesh.num_vertices(); ++v) {
      max_x = std::max(max_x, mesh.coords(v, 0));
      max_y = std::max(max_y, mesh.coords(v, 1));
    }
    CHECK(max_x >= 0.1);
    CHECK(max_x <= 1.0);
    CHECK(max_y >= 0.1);
    CHECK(max_y <= 1.0);
    lengths.insert(max_x);
    // max principle per sample: values within [0, 1]
    for (int64_t i = 0; i < field.values.numel(); ++i) {
      CHECK(field.values[i] >= -1e-12);
      CHECK(field.values[i] <= 1.0 + 1e-12);
    }
  }
  CHECK(lengths.size() == 16);  // distinct aspect ratios

  const Dataset again = sample_heat_dataset(16, 9, 9, 2024);
  for (int64_t i = 0; i < 16; ++i) {
    CHECK(again.samples[static_cast<size_t>(i)].second.values ==
          ds.samples[static_cast<size_t>(i)].second.values);
    CHECK(again.samples[static_cast<size_t>(i)].first.coords ==
          ds.samples[static_cast<size_t>(i)].first.coords);
  }
  CHECK(again.normalization == ds.normalization);
}
