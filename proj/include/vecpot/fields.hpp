#pragma once

// Analytic test fields shared by the test suites, the acceptance runner and the
// CLI: smooth radial bumps and the divergence-free and curl-free fields built
// from them.

#include <cmath>
#include <span>
#include <vector>

#include "vecpot/diff_ops.hpp"
#include "vecpot/grid.hpp"

namespace vecpot {

/// Exponent of the bump profile (1 - r^2/R^2)^k. k = 6 makes the bump C^5, enough
/// for the fourth derivatives the harmonic residual sees to stay bounded. The
/// classic exp(-1/(1-t)) bump is smoother but too steep near its edge to be
/// resolved by a handful of cells.
inline constexpr int kBumpPower = 6;

/// (1 - |x-c|^2/R^2)^6 inside the ball, 0 outside. Peak value 1.
inline double radial_bump(std::span<const double> x, std::span<const double> c, double radius) {
  double r2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) r2 += (x[k] - c[k]) * (x[k] - c[k]);
  const double t = r2 / (radius * radius);
  if (t >= 1.0) return 0.0;
  return std::pow(1.0 - t, kBumpPower);
}

/// d/dx_k of radial_bump is slope * (x_k - c_k); returns slope.
inline double radial_bump_slope(std::span<const double> x, std::span<const double> c, double radius) {
  double r2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) r2 += (x[k] - c[k]) * (x[k] - c[k]);
  const double t = r2 / (radius * radius);
  if (t >= 1.0) return 0.0;
  return -2.0 * kBumpPower / (radius * radius) * std::pow(1.0 - t, kBumpPower - 1);
}

/// Node grid with `cells` cells per axis on [lo, hi]^N.
inline GridSpec box_grid(int dim, std::size_t cells, double lo = -1.0, double hi = 1.0) {
  return GridSpec::cube(dim, cells + 1, lo, hi);
}

namespace detail {

inline std::vector<double> bump_centre(int dim, double shift) {
  std::vector<double> c(dim);
  for (int k = 0; k < dim; ++k) c[k] = shift * (k % 2 == 0 ? 1.0 : -1.0);
  return c;
}

// Pair p of the antisymmetric potential gets radius R - 0.04 p and weight 1/(1+p).
inline double pair_radius(double radius, int p) { return radius - 0.04 * p; }
inline double pair_weight(int p) { return 1.0 / (1.0 + p); }

}  // namespace detail

/// Bump of radius `radius` centred at `shift` times (1, -1, 1, ...).
inline ScalarField bump_field(const GridSpec& g, double radius, double shift = 0.0, double scale = 1.0) {
  const auto c = detail::bump_centre(g.dim(), shift);
  return sample(g, [&](std::span<const double> x) { return scale * radial_bump(x, c, radius); });
}

/// Antisymmetric bump potential with every pair populated, all centred at the origin.
inline AntisymField bump_antisym(const GridSpec& g, double radius) {
  std::vector<ScalarField> up;
  int p = 0;
  for (int i = 0; i < g.dim(); ++i)
    for (int j = i + 1; j < g.dim(); ++j, ++p)
      up.push_back(bump_field(g, detail::pair_radius(radius, p), 0.0, detail::pair_weight(p)));
  return AntisymField(std::move(up));
}

/// Analytic scurl of bump_antisym sampled at the nodes: v_i = sum_j 2 d_j A_ij.
/// Divergence free in the continuum, O(h^2) discretely.
inline VectorField rotational_bump(const GridSpec& g, double radius = 0.5) {
  const int n = g.dim();
  std::vector<std::vector<double>> c(n, std::vector<double>(g.size(), 0.0));
  const std::vector<double> origin(n, 0.0);
  std::vector<double> x(n);
  for_each_node(g, [&](std::size_t f, std::span<const std::size_t> idx) {
    for (int k = 0; k < n; ++k) x[k] = g.coord(k, idx[k]);
    int p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++p) {
        const double s = 2.0 * detail::pair_weight(p) * radial_bump_slope(x, origin, detail::pair_radius(radius, p));
        c[i][f] += s * x[j];
        c[j][f] -= s * x[i];
      }
  });
  std::vector<ScalarField> out;
  for (auto& v : c) out.emplace_back(g, std::move(v));
  return VectorField(std::move(out));
}

/// Discrete scurl of bump_antisym: divergence free to roundoff.
inline VectorField discrete_rotational_bump(const GridSpec& g, double radius = 0.5) {
  return scurl(bump_antisym(g, radius), StencilMode::one_sided_edges);
}

/// Analytic gradient of a bump sampled at the nodes.
inline VectorField gradient_bump(const GridSpec& g, double radius = 0.5) {
  const int n = g.dim();
  std::vector<std::vector<double>> c(n, std::vector<double>(g.size(), 0.0));
  const std::vector<double> origin(n, 0.0);
  std::vector<double> x(n);
  for_each_node(g, [&](std::size_t f, std::span<const std::size_t> idx) {
    for (int k = 0; k < n; ++k) x[k] = g.coord(k, idx[k]);
    const double s = radial_bump_slope(x, origin, radius);
    for (int k = 0; k < n; ++k) c[k][f] = s * x[k];
  });
  std::vector<ScalarField> out;
  for (auto& v : c) out.emplace_back(g, std::move(v));
  return VectorField(std::move(out));
}

/// Discrete gradient of a bump: curl free to roundoff.
inline VectorField discrete_gradient_bump(const GridSpec& g, double radius = 0.5) {
  return grad(bump_field(g, radius), StencilMode::one_sided_edges);
}

}  // namespace vecpot
