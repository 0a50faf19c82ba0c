#pragma once

// Two spectral Poisson solvers used by the periodic potential path and by
// gradient recovery.

#include <cmath>
#include <numbers>
#include <vector>

#include "vecpot/fft.hpp"
#include "vecpot/grid.hpp"

namespace vecpot {

/// Solves -sum_k D_k D_k u = f with periodic central differences. Frequencies where
/// every sin(theta_k) vanishes (zero and Nyquist per axis) lie in the null space
/// and are set to zero in u.
inline ScalarField solve_periodic_wide(const ScalarField& f) {
  const GridSpec& g = f.grid();
  fft::RealTransform t(g.shape());
  auto hat = t.forward(f.values());
  t.for_each_frequency([&](std::size_t c, std::span<const std::size_t> j) {
    double sym = 0.0;
    for (int k = 0; k < g.dim(); ++k) {
      const double s = std::sin(2.0 * std::numbers::pi * double(j[k]) / double(g.extent(k))) / g.h(k);
      sym += s * s;
    }
    // sin(pi) is ~1e-16, not zero; treat anything at roundoff level as null.
    double floor = 0.0;
    for (int k = 0; k < g.dim(); ++k) floor = std::max(floor, 1e-20 / (g.h(k) * g.h(k)));
    hat[c] = sym > floor ? hat[c] / sym : 0.0;
  });
  return ScalarField(g, t.inverse(hat));
}

/// Least-squares potential from a vector field on a node grid with natural ends:
/// minimizes sum over grid edges of ((eta_{i+1} - eta_i)/h - (u_i + u_{i+1})/2)^2
/// along every axis. The normal operator is the node Laplacian with zero-flux ends,
/// diagonalized by DCT-II. Returns the zero-mean minimizer.
inline ScalarField solve_edge_least_squares(const VectorField& u) {
  const GridSpec& g = u.grid();
  const int d = g.dim();
  std::vector<double> rhs(g.size(), 0.0);
  for (int k = 0; k < d; ++k) {
    const std::size_t s = g.stride(k);
    const std::size_t n = g.extent(k);
    const double inv_h = 1.0 / g.h(k);
    const auto& uk = u[k].values();
    for (std::size_t f = 0; f < g.size(); ++f) {
      const std::size_t i = (f / s) % n;
      if (i + 1 >= n) continue;
      // Target slope on the edge from node f to f + s, scattered by B^T.
      const double e = 0.5 * (uk[f] + uk[f + s]) * inv_h;
      rhs[f] -= e;
      rhs[f + s] += e;
    }
  }
  // Normal equations (sum_k B_k^T B_k) eta = rhs; DCT-II eigenvalues (2 sin(pi m / 2n) / h)^2.
  fft::CosineTransform t(g.shape());
  auto hat = t.forward(rhs);
  std::vector<std::size_t> m(d, 0);
  for (std::size_t f = 0; f < hat.size(); ++f) {
    double lam = 0.0;
    for (int k = 0; k < d; ++k) {
      const double s = 2.0 * std::sin(0.5 * std::numbers::pi * double(m[k]) / double(g.extent(k))) / g.h(k);
      lam += s * s;
    }
    hat[f] = f == 0 ? 0.0 : hat[f] / lam;
    for (int k = d - 1; k >= 0; --k) {
      if (++m[k] < g.extent(k)) break;
      m[k] = 0;
    }
  }
  return ScalarField(g, t.inverse(hat));
}

}  // namespace vecpot
