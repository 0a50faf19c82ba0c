#pragma once

// Discrete grad, div, curl, scurl and Laplacians built from one first-difference
// operator per axis. Differences along different axes act on different index
// directions, so D_i D_j = D_j D_i holds exactly for either edge closure; this is
// what makes curl(grad) = 0, div(scurl) = 0 and -lap = -grad div + scurl curl
// hold to roundoff. Summation by parts (adjointness of curl and scurl) needs
// periodic data or supports kept two cells away from the edges.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "vecpot/grid.hpp"

namespace vecpot {

enum class StencilMode { periodic, one_sided_edges };

namespace detail {

template <class Line>
void for_each_line(const GridSpec& g, int axis, Line&& line) {
  const std::size_t s = g.stride(axis);
  const std::size_t n = g.extent(axis);
  for (std::size_t f = 0; f < g.size(); ++f)
    if ((f / s) % n == 0) line(f, s, n);
}

}  // namespace detail

/// Central first difference along one axis; second-order one-sided rows at non-periodic edges.
inline std::vector<double> difference(std::span<const double> f, const GridSpec& g, int axis, StencilMode mode) {
  std::vector<double> out(f.size());
  const double inv2h = 1.0 / (2.0 * g.h(axis));
  detail::for_each_line(g, axis, [&](std::size_t b, std::size_t s, std::size_t n) {
    auto at = [&](std::size_t i) { return f[b + i * s]; };
    for (std::size_t i = 1; i + 1 < n; ++i) out[b + i * s] = (at(i + 1) - at(i - 1)) * inv2h;
    if (mode == StencilMode::periodic) {
      out[b] = (at(1) - at(n - 1)) * inv2h;
      out[b + (n - 1) * s] = (at(0) - at(n - 2)) * inv2h;
    } else {
      out[b] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
      out[b + (n - 1) * s] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2h;
    }
  });
  return out;
}

/// Compact second difference along one axis.
inline std::vector<double> second_difference(std::span<const double> f, const GridSpec& g, int axis, StencilMode mode) {
  std::vector<double> out(f.size());
  const double inv = 1.0 / (g.h(axis) * g.h(axis));
  detail::for_each_line(g, axis, [&](std::size_t b, std::size_t s, std::size_t n) {
    auto at = [&](std::size_t i) { return f[b + i * s]; };
    for (std::size_t i = 1; i + 1 < n; ++i) out[b + i * s] = (at(i + 1) - 2.0 * at(i) + at(i - 1)) * inv;
    if (mode == StencilMode::periodic) {
      out[b] = (at(1) - 2.0 * at(0) + at(n - 1)) * inv;
      out[b + (n - 1) * s] = (at(0) - 2.0 * at(n - 1) + at(n - 2)) * inv;
    } else if (n >= 4) {
      out[b] = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * inv;
      out[b + (n - 1) * s] = (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) * inv;
    } else {
      out[b] = out[b + s];
      out[b + 2 * s] = out[b + s];
    }
  });
  return out;
}

inline ScalarField partial(const ScalarField& f, int axis, StencilMode mode) {
  return ScalarField(f.grid(), difference(f.values(), f.grid(), axis, mode));
}

inline VectorField grad(const ScalarField& f, StencilMode mode) {
  f.grid().require_volume();
  std::vector<ScalarField> c;
  for (int k = 0; k < f.grid().dim(); ++k) c.push_back(partial(f, k, mode));
  return VectorField(std::move(c));
}

inline ScalarField div(const VectorField& v, StencilMode mode) {
  std::vector<double> acc(v.grid().size(), 0.0);
  for (int k = 0; k < v.dim(); ++k) {
    const auto d = difference(v[k].values(), v.grid(), k, mode);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
  }
  return ScalarField(v.grid(), std::move(acc));
}

/// upper(i,j) = (D_i v_j - D_j v_i) / 2.
inline AntisymField curl(const VectorField& v, StencilMode mode) {
  const int n = v.dim();
  std::vector<ScalarField> up;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const auto a = difference(v[j].values(), v.grid(), i, mode);
      const auto b = difference(v[i].values(), v.grid(), j, mode);
      std::vector<double> u(a.size());
      for (std::size_t k = 0; k < u.size(); ++k) u[k] = 0.5 * (a[k] - b[k]);
      up.emplace_back(v.grid(), std::move(u));
    }
  return AntisymField(std::move(up));
}

/// Component i = sum_j 2 D_j A_ij.
inline VectorField scurl(const AntisymField& a, StencilMode mode) {
  const int n = a.dim();
  const GridSpec& g = a.grid();
  std::vector<std::vector<double>> out(n, std::vector<double>(g.size(), 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const auto& u = a.upper(i, j).values();
      const auto dj = difference(u, g, j, mode);  // contributes to row i via A_ij
      const auto di = difference(u, g, i, mode);  // contributes to row j via A_ji = -A_ij
      for (std::size_t k = 0; k < g.size(); ++k) {
        out[i][k] += 2.0 * dj[k];
        out[j][k] -= 2.0 * di[k];
      }
    }
  std::vector<ScalarField> c;
  for (auto& o : out) c.emplace_back(g, std::move(o));
  return VectorField(std::move(c));
}

/// sum_k D_k D_k: the Laplacian for which the vector identities are exact.
inline ScalarField laplacian_wide(const ScalarField& f, StencilMode mode) {
  std::vector<double> acc(f.size(), 0.0);
  for (int k = 0; k < f.grid().dim(); ++k) {
    const auto d = difference(difference(f.values(), f.grid(), k, mode), f.grid(), k, mode);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
  }
  return ScalarField(f.grid(), std::move(acc));
}

/// Standard 2N+1 point Laplacian.
inline ScalarField laplacian_compact(const ScalarField& f, StencilMode mode) {
  std::vector<double> acc(f.size(), 0.0);
  for (int k = 0; k < f.grid().dim(); ++k) {
    const auto d = second_difference(f.values(), f.grid(), k, mode);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
  }
  return ScalarField(f.grid(), std::move(acc));
}

inline VectorField laplacian_wide(const VectorField& v, StencilMode mode) {
  std::vector<ScalarField> c;
  for (const auto& x : v.components()) c.push_back(laplacian_wide(x, mode));
  return VectorField(std::move(c));
}

inline VectorField laplacian_compact(const VectorField& v, StencilMode mode) {
  std::vector<ScalarField> c;
  for (const auto& x : v.components()) c.push_back(laplacian_compact(x, mode));
  return VectorField(std::move(c));
}

// ---- inner products -----------------------------------------------------------

inline double inner(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw GridError("inner: grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid().cell_volume();
}

inline double inner(const VectorField& a, const VectorField& b) {
  if (!(a.grid() == b.grid())) throw GridError("inner: grid mismatch");
  double s = 0.0;
  for (int c = 0; c < a.dim(); ++c) s += inner(a[c], b[c]);
  return s;
}

/// (A,B) = 2 * integral of A_ij B_ij over all index pairs = 4 * sum over i<j.
inline double inner(const AntisymField& a, const AntisymField& b) {
  if (!(a.grid() == b.grid())) throw GridError("inner: grid mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < a.upper().size(); ++c) s += inner(a.upper()[c], b.upper()[c]);
  return 4.0 * s;
}

// ---- tangential trace -----------------------------------------------------------

/// Row-major skew matrix with (i,j) entry (f_j n_i - f_i n_j) / 2.
inline std::vector<double> gamma_t_pointwise(std::span<const double> f, std::span<const double> n) {
  if (f.size() != n.size()) throw std::invalid_argument("gamma_t: f and n differ in length");
  double nn = 0.0;
  for (double x : n) nn += x * x;
  if (std::abs(std::sqrt(nn) - 1.0) > 1e-12) throw std::invalid_argument("gamma_t: normal is not a unit vector");
  const std::size_t d = n.size();
  std::vector<double> m(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m[i * d + j] = 0.5 * (f[j] * n[i] - f[i] * n[j]);
  return m;
}

}  // namespace vecpot
