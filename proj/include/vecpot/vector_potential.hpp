#pragma once

// The divergence-free vector potential construction.
//
//   g   = N(v)              componentwise Newton potential
//   eta = div g             (or N(div v) with the div-first option)
//   w   = v + grad eta      so curl w = curl v exactly and div w ~ 0
//   H   = N(curl v),  w1 = scurl H
//   w2  = w - w1            harmonic up to discretization error
//
// The free-space path runs on the grid as given, which stands in for R^N as long
// as v keeps a margin from the edges. The spectral path treats the grid as
// periodic and replaces N by the exact inverse of the wide Laplacian.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vecpot/diff_ops.hpp"
#include "vecpot/newton.hpp"
#include "vecpot/norms.hpp"
#include "vecpot/poisson.hpp"

namespace vecpot {

enum class PotentialPath { free_space, spectral };

struct PipelineOptions {
  PotentialPath path = PotentialPath::free_space;
  NewtonMethod method = NewtonMethod::fast;
  bool eta_from_div = false;       ///< eta = N(div v) instead of div N(v)
  double p = 2.0;                  ///< exponent of the Step 4 norms
  std::size_t interior_margin = 4;  ///< cells excluded from div and harmonic residuals
  std::size_t support_margin = 4;   ///< margin below which a warning is raised

  StencilMode mode() const {
    return path == PotentialPath::spectral ? StencilMode::periodic : StencilMode::one_sided_edges;
  }
};

struct PotentialDiagnostics {
  ScalarField eta;
  VectorField w;
  VectorField w1;
  VectorField w2;
  double div_w_rel = 0.0;
  double curl_defect_rel = 0.0;
  double harmonic_residual_rel = 0.0;
  double norm_ratio = 0.0;
  std::optional<IndexBox> support;      ///< node box of nonzero v grown by one node
  std::vector<double> removed_mean;      ///< spectral path only
  Warnings warnings;
};

/// Bounding node box of the nonzero samples, or nullopt for the zero field.
inline std::optional<IndexBox> support_box(const VectorField& v) {
  const GridSpec& g = v.grid();
  std::optional<IndexBox> box;
  for_each_node(g, [&](std::size_t f, std::span<const std::size_t> idx) {
    bool nz = false;
    for (int c = 0; c < v.dim(); ++c) nz = nz || v[c][f] != 0.0;
    if (!nz) return;
    if (!box) {
      box = IndexBox{{idx.begin(), idx.end()}, {idx.begin(), idx.end()}};
      return;
    }
    for (int k = 0; k < g.dim(); ++k) {
      box->lo[k] = std::min(box->lo[k], idx[k]);
      box->hi[k] = std::max(box->hi[k], idx[k]);
    }
  });
  return box;
}

namespace detail {

inline void check_margin(const VectorField& v, const PipelineOptions& opt, Warnings* warn) {
  if (!warn || opt.path == PotentialPath::spectral) return;
  std::size_t m = std::numeric_limits<std::size_t>::max();
  for (const auto& c : v.components()) m = std::min(m, support_margin(c));
  if (m < opt.support_margin)
    warn->add("input support is " + std::to_string(m) + " cells from the grid edge; at least " +
              std::to_string(opt.support_margin) + " are expected");
}

inline ScalarField periodic_potential(const ScalarField& f) { return solve_periodic_wide(f); }

inline VectorField potential(const VectorField& v, const PipelineOptions& opt) {
  if (opt.path == PotentialPath::free_space) return vector_potential_of(v, opt.method);
  std::vector<ScalarField> c;
  for (const auto& x : v.components()) c.push_back(periodic_potential(x));
  return VectorField(std::move(c));
}

inline AntisymField potential(const AntisymField& a, const PipelineOptions& opt) {
  if (opt.path == PotentialPath::free_space) return vector_potential_of(a, opt.method);
  std::vector<ScalarField> c;
  for (const auto& x : a.upper()) c.push_back(periodic_potential(x));
  return AntisymField(std::move(c));
}

inline ScalarField potential(const ScalarField& f, const PipelineOptions& opt) {
  return opt.path == PotentialPath::free_space ? vector_potential_of(f, opt.method) : periodic_potential(f);
}

inline VectorField remove_means(const VectorField& v, std::vector<double>& means) {
  std::vector<ScalarField> c;
  means.clear();
  for (const auto& x : v.components()) {
    double s = 0.0;
    for (double y : x.values()) s += y;
    const double mean = s / double(x.size());
    means.push_back(mean);
    std::vector<double> out(x.values());
    for (auto& y : out) y -= mean;
    c.emplace_back(x.grid(), std::move(out));
  }
  return VectorField(std::move(c));
}

}  // namespace detail

/// Step 1: eta and w = v + grad eta.
inline std::pair<ScalarField, VectorField> step1_correct(const VectorField& v, const PipelineOptions& opt = {},
                                                         Warnings* warn = nullptr,
                                                         std::vector<double>* removed_mean = nullptr) {
  v.grid().require_volume();
  detail::check_margin(v, opt, warn);
  const StencilMode mode = opt.mode();
  VectorField src = v;
  if (opt.path == PotentialPath::spectral) {
    std::vector<double> means;
    src = detail::remove_means(v, means);
    if (removed_mean) *removed_mean = means;
  }
  ScalarField eta = opt.eta_from_div ? detail::potential(div(src, mode), opt) : div(detail::potential(src, opt), mode);
  VectorField w = v + grad(eta, mode);
  return {std::move(eta), std::move(w)};
}

/// Step 2: w1 = scurl N(curl v).
inline VectorField step2_w1(const VectorField& v, const PipelineOptions& opt = {}) {
  const StencilMode mode = opt.mode();
  return scurl(detail::potential(curl(v, mode), opt), mode);
}

struct HarmonicCheck {
  VectorField w2;
  double residual = 0.0;
};

/// Step 3: w2 = w - w1 and the interior wide-Laplacian residual of w2, relative to |w|.
/// (w2 itself is O(h^2), so measuring against |w2| would not shrink.)
inline HarmonicCheck step3_harmonic_check(const VectorField& w, const VectorField& w1, const PipelineOptions& opt = {}) {
  if (!(w.grid() == w1.grid())) throw GridError("step3: grid mismatch");
  VectorField w2 = w - w1;
  const StencilMode mode = opt.mode();
  std::optional<NormRegion> inner;
  if (mode != StencilMode::periodic) inner = NormRegion{IndexBox::interior(w.grid(), opt.interior_margin)};
  const double r = safe_ratio(l2(laplacian_wide(w2, mode), inner), l2(w));
  return {std::move(w2), r};
}

/// Steps 1 to 4.
inline PotentialDiagnostics construct(const VectorField& v, const PipelineOptions& opt = {}) {
  PotentialDiagnostics d{ScalarField(v.grid()), v, v, v};
  auto [eta, w] = step1_correct(v, opt, &d.warnings, &d.removed_mean);
  d.eta = std::move(eta);
  d.w = std::move(w);
  d.w1 = step2_w1(v, opt);
  auto hc = step3_harmonic_check(d.w, d.w1, opt);
  d.w2 = std::move(hc.w2);
  d.harmonic_residual_rel = hc.residual;

  const StencilMode mode = opt.mode();
  const GridSpec& g = v.grid();
  std::optional<NormRegion> inner;
  if (mode != StencilMode::periodic) inner = NormRegion{IndexBox::interior(g, opt.interior_margin)};
  const AntisymField cv = curl(v, mode);
  d.curl_defect_rel = safe_ratio(l2(curl(d.w, mode) - cv), l2(cv));
  d.div_w_rel = safe_ratio(l2(div(d.w, mode), inner), l2(v));

  d.support = support_box(v);
  if (d.support) {
    d.support = d.support->grown(g, 1);
    const NormRegion omega{*d.support, BoxWeights::trapezoid};
    d.norm_ratio = safe_ratio(discrete_norm(d.w, {opt.p, 1}, mode, omega),
                              discrete_norm(v, {opt.p, 0}, mode) + discrete_norm(cv, {opt.p, 0}, mode));
  }
  return d;
}

}  // namespace vecpot
