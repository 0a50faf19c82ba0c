#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vecpot/diff_ops.hpp"
#include "vecpot/grid.hpp"

namespace vecpot {

struct NormSpec {
  double p = 2.0;
  int m = 0;

  void validate() const {
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("norm exponent p must lie in (1, inf)");
    if (m < 0) throw std::invalid_argument("derivative order m must be nonnegative");
  }
};

enum class BoxWeights {
  full,      ///< every node carries the full cell volume
  trapezoid  ///< nodes on a box face carry half weight per face
};

/// Restricts a norm to an index box.
struct NormRegion {
  IndexBox box;
  BoxWeights weights = BoxWeights::full;
};

namespace detail {

enum class Pointwise { scalar, euclidean, antisym };

inline std::vector<double> node_weights(const GridSpec& g, const std::optional<NormRegion>& region) {
  std::vector<double> w(g.size(), g.cell_volume());
  if (!region) return w;
  for_each_node(g, [&](std::size_t f, std::span<const std::size_t> idx) {
    if (!region->box.contains(idx)) {
      w[f] = 0.0;
      return;
    }
    if (region->weights == BoxWeights::trapezoid)
      for (int k = 0; k < g.dim(); ++k)
        if ((idx[k] == region->box.lo[k] || idx[k] == region->box.hi[k]) && region->box.lo[k] != region->box.hi[k])
          w[f] *= 0.5;
  });
  return w;
}

/// sum over nodes of weight * |value|^p for one derivative pattern.
inline double power_sum(const std::vector<std::vector<double>>& comps, Pointwise kind, double p,
                        const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    double mag = 0.0;
    if (kind == Pointwise::scalar) {
      mag = std::abs(comps[0][i]);
    } else {
      double sq = 0.0;
      for (const auto& c : comps) sq += c[i] * c[i];
      mag = std::sqrt(kind == Pointwise::antisym ? 4.0 * sq : sq);
    }
    s += w[i] * std::pow(mag, p);
  }
  return s;
}

/// Sum over all derivative multi-indices of exact order `order` (each multiset once).
inline double order_power_sum(const GridSpec& g, std::vector<std::vector<double>> comps, Pointwise kind, double p,
                              int order, StencilMode mode, const std::vector<double>& w, int first_axis = 0) {
  if (order == 0) return power_sum(comps, kind, p, w);
  double s = 0.0;
  for (int k = first_axis; k < g.dim(); ++k) {
    std::vector<std::vector<double>> d;
    d.reserve(comps.size());
    for (const auto& c : comps) d.push_back(difference(c, g, k, mode));
    s += order_power_sum(g, std::move(d), kind, p, order - 1, mode, w, k);
  }
  return s;
}

inline double sobolev(const GridSpec& g, std::vector<std::vector<double>> comps, Pointwise kind, NormSpec spec,
                      StencilMode mode, const std::optional<NormRegion>& region, bool seminorm) {
  spec.validate();
  const auto w = node_weights(g, region);
  double s = 0.0;
  for (int l = seminorm ? spec.m : 0; l <= spec.m; ++l) s += order_power_sum(g, comps, kind, spec.p, l, mode, w);
  return std::pow(s, 1.0 / spec.p);
}

inline std::vector<std::vector<double>> raw(const ScalarField& f) { return {f.values()}; }
inline std::vector<std::vector<double>> raw(const VectorField& f) {
  std::vector<std::vector<double>> r;
  for (const auto& c : f.components()) r.push_back(c.values());
  return r;
}
inline std::vector<std::vector<double>> raw(const AntisymField& f) {
  std::vector<std::vector<double>> r;
  for (const auto& c : f.upper()) r.push_back(c.values());
  return r;
}
inline Pointwise kind_of(const ScalarField&) { return Pointwise::scalar; }
inline Pointwise kind_of(const VectorField&) { return Pointwise::euclidean; }
inline Pointwise kind_of(const AntisymField&) { return Pointwise::antisym; }

}  // namespace detail

/// Riemann-sum W^{m,p} norm, (sum_{|a|<=m} integral |D^a f|^p)^(1/p), with node weight
/// prod h_k. The pointwise magnitude is |f|, the Euclidean length of a vector, and
/// sqrt(2 sum_ij A_ij^2) for an antisymmetric field.
template <class Field>
double discrete_norm(const Field& f, NormSpec spec, StencilMode mode = StencilMode::one_sided_edges,
                     const std::optional<NormRegion>& region = std::nullopt) {
  return detail::sobolev(f.grid(), detail::raw(f), detail::kind_of(f), spec, mode, region, false);
}

/// Only the |a| = m terms.
template <class Field>
double discrete_seminorm(const Field& f, NormSpec spec, StencilMode mode = StencilMode::one_sided_edges,
                         const std::optional<NormRegion>& region = std::nullopt) {
  return detail::sobolev(f.grid(), detail::raw(f), detail::kind_of(f), spec, mode, region, true);
}

/// Plain L2 norm, the workhorse of relative residuals.
template <class Field>
double l2(const Field& f, const std::optional<NormRegion>& region = std::nullopt) {
  return discrete_norm(f, NormSpec{2.0, 0}, StencilMode::one_sided_edges, region);
}

/// a/b with 0/0 reported as 0.
inline double safe_ratio(double a, double b) {
  if (b == 0.0) return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return a / b;
}

}  // namespace vecpot
