#pragma once

// Zero-trace splitting v = w + grad eta on a region Omega made of grid boxes:
// extend v by zero into a padded box, run the vector-potential pipeline there,
// and recover eta from the curl-free remainder v~ - w~.

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vecpot/diff_ops.hpp"
#include "vecpot/grid.hpp"
#include "vecpot/norms.hpp"
#include "vecpot/poisson.hpp"
#include "vecpot/vector_potential.hpp"

namespace vecpot {

/// Input outside the zero-trace class, or a field that is not a gradient.
class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Omega as a union of closed node boxes of a grid. No boxes means the whole grid.
class Region {
 public:
  Region() = default;
  explicit Region(std::vector<IndexBox> boxes) : boxes_(std::move(boxes)) {}

  const std::vector<IndexBox>& boxes() const { return boxes_; }

  std::vector<IndexBox> resolved(const GridSpec& g) const {
    return boxes_.empty() ? std::vector<IndexBox>{IndexBox::whole(g)} : boxes_;
  }

  /// 1 on Omega nodes.
  std::vector<char> mask(const GridSpec& g) const {
    const auto bs = resolved(g);
    std::vector<char> m(g.size(), 0);
    for_each_node(g, [&](std::size_t f, std::span<const std::size_t> idx) {
      for (const auto& b : bs)
        if (b.contains(idx)) {
          m[f] = 1;
          return;
        }
    });
    return m;
  }

  /// Omega nodes with at least one adjacent grid cell outside Omega (or outside the grid).
  std::vector<char> boundary_mask(const GridSpec& g) const {
    const auto bs = resolved(g);
    const int d = g.dim();
    std::vector<char> m(g.size(), 0);
    std::vector<std::size_t> lo(d);
    for_each_node(g, [&](std::size_t f, std::span<const std::size_t> idx) {
      bool inside = false;
      for (const auto& b : bs) inside = inside || b.contains(idx);
      if (!inside) return;
      // Each of the 2^d cells around the node is identified by its lower corner.
      for (unsigned corner = 0; corner < (1u << d); ++corner) {
        bool exists = true;
        for (int k = 0; k < d; ++k) {
          const bool down = (corner >> k) & 1u;
          if (down && idx[k] == 0) exists = false;
          if (!down && idx[k] + 1 >= g.extent(k)) exists = false;
          lo[k] = down ? idx[k] - 1 : idx[k];
        }
        if (!exists || !cell_covered(bs, lo, (1u << d) - 1u, 0)) {
          m[f] = 1;
          return;
        }
      }
    });
    return m;
  }

  /// Boxes inside the grid and nonempty; Omega connected and simply connected.
  void validate(const GridSpec& g) const {
    const int d = g.dim();
    for (const auto& b : boxes_) {
      if (int(b.lo.size()) != d || int(b.hi.size()) != d) throw std::invalid_argument("region box has the wrong dimension");
      for (int k = 0; k < d; ++k) {
        if (b.lo[k] > b.hi[k]) throw std::invalid_argument("region box has lo > hi");
        if (b.hi[k] >= g.extent(k)) throw std::invalid_argument("region box leaves the grid");
      }
    }
    if (boxes_.size() <= 1) return;
    if (!connected()) throw std::invalid_argument("region is not connected");
    if (d > 3) throw std::invalid_argument("unions of boxes are supported up to dimension 3");
    if (!simply_connected(g)) throw std::invalid_argument("region is not simply connected");
  }

 private:
  // A grid cell with lower corner lo spanning the axes in `span` (padded index space
  // shifted by `shift`) lies in Omega iff one closed box contains it.
  static bool cell_covered(const std::vector<IndexBox>& bs, std::span<const std::size_t> lo, unsigned span,
                           std::size_t shift) {
    for (const auto& b : bs) {
      bool in = true;
      for (std::size_t k = 0; k < b.lo.size() && in; ++k) {
        const std::size_t a = lo[k];
        const std::size_t e = a + ((span >> k) & 1u);
        in = a >= b.lo[k] + shift && e <= b.hi[k] + shift;
      }
      if (in) return true;
    }
    return false;
  }

  bool connected() const {
    const std::size_t n = boxes_.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        bool touch = true;
        for (std::size_t k = 0; k < boxes_[i].lo.size(); ++k)
          touch = touch && boxes_[i].lo[k] <= boxes_[j].hi[k] && boxes_[j].lo[k] <= boxes_[i].hi[k];
        if (touch) parent[find(i)] = find(j);
      }
    for (std::size_t i = 1; i < n; ++i)
      if (find(i) != find(0)) return false;
    return true;
  }

  // With Omega connected, b1 = 0 iff the complement has one component (b_{d-1} = 0
  // by Alexander duality) and the Euler characteristic is 1. Cells are enumerated
  // on the grid padded by one node so the outer complement is connected.
  bool simply_connected(const GridSpec& g) const {
    const int d = g.dim();
    std::vector<std::size_t> ext(d);
    for (int k = 0; k < d; ++k) ext[k] = g.extent(k) + 2;
    std::vector<std::size_t> stride(d, 1);
    for (int k = d - 2; k >= 0; --k) stride[k] = stride[k + 1] * ext[k + 1];
    const std::size_t nodes = stride[0] * ext[0];
    const unsigned spans = 1u << d;
    auto id = [&](std::size_t node, unsigned span) { return node * spans + span; };

    std::vector<char> in(nodes * spans, 0), valid(nodes * spans, 0);
    std::vector<std::size_t> idx(d);
    long euler = 0;
    for (std::size_t f = 0; f < nodes; ++f) {
      std::size_t r = f;
      for (int k = 0; k < d; ++k) {
        idx[k] = r / stride[k];
        r %= stride[k];
      }
      for (unsigned s = 0; s < spans; ++s) {
        bool ok = true;
        for (int k = 0; k < d; ++k) ok = ok && idx[k] + ((s >> k) & 1u) < ext[k];
        if (!ok) continue;
        valid[id(f, s)] = 1;
        if (cell_covered(boxes_, idx, s, 1)) {
          in[id(f, s)] = 1;
          euler += (std::popcount(s) % 2 == 0) ? 1 : -1;
        }
      }
    }
    if (euler != 1) return false;

    std::vector<std::size_t> parent(nodes * spans);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    for (std::size_t f = 0; f < nodes; ++f)
      for (unsigned s = 0; s < spans; ++s) {
        const std::size_t c = id(f, s);
        if (!valid[c] || in[c]) continue;
        for (int k = 0; k < d; ++k) {
          if (!((s >> k) & 1u)) continue;
          const unsigned face = s & ~(1u << k);
          for (std::size_t node : {f, f + stride[k]}) {
            const std::size_t fc = id(node, face);
            if (!in[fc]) parent[find(c)] = find(fc);
          }
        }
      }
    std::size_t roots = 0;
    for (std::size_t c = 0; c < parent.size(); ++c)
      if (valid[c] && !in[c] && find(c) == c) ++roots;
    return roots == 1;
  }

  std::vector<IndexBox> boxes_;
};

/// Box grid around g with `pad` extra cells per side and the same spacing.
inline GridSpec padded_grid(const GridSpec& g, std::size_t pad) {
  std::vector<std::size_t> shape;
  std::vector<double> origin;
  for (int k = 0; k < g.dim(); ++k) {
    shape.push_back(g.extent(k) + 2 * pad);
    origin.push_back(g.origin()[k] - double(pad) * g.h(k));
  }
  return GridSpec(shape, g.spacing(), origin);
}

namespace detail {

// Offset of the subgrid inside the box in nodes, or an error if it does not embed.
inline std::vector<std::size_t> embedding(const GridSpec& sub, const GridSpec& box) {
  if (sub.dim() != box.dim()) throw GridError("subgrid and box differ in dimension");
  std::vector<std::size_t> off;
  for (int k = 0; k < sub.dim(); ++k) {
    if (std::abs(sub.h(k) - box.h(k)) > 1e-12 * box.h(k)) throw GridError("subgrid and box differ in spacing");
    const double s = (sub.origin()[k] - box.origin()[k]) / box.h(k);
    const double r = std::round(s);
    if (std::abs(s - r) > 1e-9 || r < 0.0) throw GridError("subgrid nodes are not box nodes");
    const auto o = static_cast<std::size_t>(r);
    if (o + sub.extent(k) > box.extent(k)) throw GridError("subgrid leaves the box");
    off.push_back(o);
  }
  return off;
}

inline std::size_t box_node(const GridSpec& box, std::span<const std::size_t> idx, const std::vector<std::size_t>& off) {
  std::size_t f = 0;
  for (int k = 0; k < box.dim(); ++k) f += (idx[k] + off[k]) * box.stride(k);
  return f;
}

inline double masked_sum_sq(const ScalarField& c, const std::vector<char>& mask) {
  double s = 0.0;
  for (std::size_t f = 0; f < c.size(); ++f)
    if (mask[f]) s += c[f] * c[f];
  return s;
}

inline double masked_l2(const ScalarField& v, const std::vector<char>& mask) {
  return std::sqrt(masked_sum_sq(v, mask) * v.grid().cell_volume());
}

inline double masked_l2(const VectorField& v, const std::vector<char>& mask) {
  double s = 0.0;
  for (const auto& c : v.components()) s += masked_sum_sq(c, mask);
  return std::sqrt(s * v.grid().cell_volume());
}

}  // namespace detail

/// Omega values of v into the box, zero elsewhere.
inline VectorField zero_extend(const VectorField& v, const GridSpec& box, const Region& omega = {}) {
  const GridSpec& g = v.grid();
  const auto off = detail::embedding(g, box);
  const auto m = omega.mask(g);
  std::vector<std::vector<double>> out(v.dim(), std::vector<double>(box.size(), 0.0));
  for_each_node(g, [&](std::size_t f, std::span<const std::size_t> idx) {
    if (!m[f]) return;
    const std::size_t b = detail::box_node(box, idx, off);
    for (int c = 0; c < v.dim(); ++c) out[c][b] = v[c][f];
  });
  std::vector<ScalarField> comps;
  for (auto& c : out) comps.emplace_back(box, std::move(c));
  return VectorField(std::move(comps));
}

/// Box values at the subgrid nodes.
inline ScalarField restrict_to(const ScalarField& f, const GridSpec& sub) {
  const auto off = detail::embedding(sub, f.grid());
  std::vector<double> out(sub.size());
  for_each_node(sub, [&](std::size_t s, std::span<const std::size_t> idx) {
    out[s] = f[detail::box_node(f.grid(), idx, off)];
  });
  return ScalarField(sub, std::move(out));
}

inline VectorField restrict_to(const VectorField& v, const GridSpec& sub) {
  std::vector<ScalarField> c;
  for (const auto& x : v.components()) c.push_back(restrict_to(x, sub));
  return VectorField(std::move(c));
}

struct GradientRecovery {
  ScalarField eta;
  double residual = 0.0;  ///< |grad eta - u| / |u|
};

/// Scalar potential of a discretely curl-free field, normalized to zero mean.
/// Periodic grids invert the wide Laplacian exactly; otherwise eta is the
/// edge least-squares fit (compact Laplacian with natural ends).
/// The curl test is scale free: h_min |curl u| <= tol * reference, where the
/// reference defaults to |u|. Callers whose u is a small difference of larger
/// fields pass the size of those fields instead, otherwise roundoff in u would
/// read as an O(1) curl.
inline GradientRecovery gradient_recover(const VectorField& u, StencilMode mode = StencilMode::one_sided_edges,
                                         double curl_tol = 1e-8, double reference = 0.0) {
  const GridSpec& g = u.grid();
  g.require_volume();
  if (u.dim() != g.dim()) throw GridError("gradient_recover: component count differs from grid dimension");
  const double nu = l2(u);
  if (nu == 0.0) return {ScalarField(g), 0.0};
  double hmin = g.h(0);
  for (int k = 1; k < g.dim(); ++k) hmin = std::min(hmin, g.h(k));
  const double c = hmin * l2(curl(u, mode)) / std::max(nu, reference);
  if (!(c <= curl_tol))
    throw DecompositionError("field is not a gradient: h |curl u| / |u| = " + std::to_string(c));

  ScalarField eta = mode == StencilMode::periodic ? solve_periodic_wide(-1.0 * div(u, mode)) : solve_edge_least_squares(u);
  double mean = 0.0;
  for (double x : eta.values()) mean += x;
  mean /= double(eta.size());
  std::vector<double> z(eta.values());
  for (auto& x : z) x -= mean;
  eta = ScalarField(g, std::move(z));
  return {eta, l2(grad(eta, mode) - u) / nu};
}

struct DecompositionOptions {
  PipelineOptions pipeline;
  double pad_fraction = 0.5;  ///< padding per side as a fraction of the largest extent
  std::size_t min_pad = 4;
  double trace_tol = 1e-10;   ///< relative to max |v| on Omega
  double curl_tol = 1e-8;
  bool require_curl_zero_trace = false;
};

struct DecompositionResult {
  VectorField w;    ///< on the Omega grid, zero off Omega
  ScalarField eta;  ///< zero mean over Omega, zero off Omega
  double recon_rel = 0.0;
  double div_w_rel = 0.0;
  double boundary_leak = 0.0;  ///< max |w~ + grad eta| off Omega, relative to max |v|
  double recovery_residual = 0.0;
  double curl_defect_rel = 0.0;
  GridSpec ambient;
  Warnings warnings;
};

inline std::size_t decomposition_pad(const GridSpec& g, const DecompositionOptions& opt) {
  std::size_t ext = 0;
  for (int k = 0; k < g.dim(); ++k) ext = std::max(ext, g.extent(k) - 1);
  return std::max(opt.min_pad, static_cast<std::size_t>(std::ceil(opt.pad_fraction * double(ext))));
}

/// Largest |v| on the boundary nodes of Omega, relative to max |v| on Omega.
inline double trace_defect(const VectorField& v, const Region& omega) {
  const auto in = omega.mask(v.grid());
  const auto bd = omega.boundary_mask(v.grid());
  double top = 0.0, edge = 0.0;
  for (const auto& c : v.components())
    for (std::size_t f = 0; f < c.size(); ++f) {
      if (in[f]) top = std::max(top, std::abs(c[f]));
      if (bd[f]) edge = std::max(edge, std::abs(c[f]));
    }
  return safe_ratio(edge, top);
}

inline DecompositionResult decompose_zero_trace(const VectorField& v, const Region& omega = {},
                                                const DecompositionOptions& opt = {}) {
  const GridSpec& g = v.grid();
  g.require_volume();
  omega.validate(g);
  const StencilMode mode = opt.pipeline.mode();

  const double td = trace_defect(v, omega);
  if (td > opt.trace_tol)
    throw DecompositionError("input does not vanish on the boundary of the region: relative trace " + std::to_string(td));
  if (opt.require_curl_zero_trace) {
    const AntisymField cv = curl(v, StencilMode::one_sided_edges);
    std::vector<ScalarField> up(cv.upper());
    const double ct = trace_defect(VectorField(std::move(up)), omega);
    if (ct > opt.trace_tol)
      throw DecompositionError("curl of the input does not vanish on the boundary: relative trace " + std::to_string(ct));
  }

  const GridSpec box = padded_grid(g, decomposition_pad(g, opt));
  const VectorField vt = zero_extend(v, box, omega);
  const PotentialDiagnostics pd = construct(vt, opt.pipeline);
  const GradientRecovery rec = gradient_recover(vt - pd.w, mode, opt.curl_tol, l2(vt));

  DecompositionResult r{VectorField::zeros(g), ScalarField(g)};
  r.ambient = box;
  r.warnings = pd.warnings;
  r.recovery_residual = rec.residual;
  r.curl_defect_rel = pd.curl_defect_rel;

  // Omega mask on the box and on the subgrid.
  const auto m = omega.mask(g);
  const auto off = detail::embedding(g, box);
  std::vector<char> mbox(box.size(), 0);
  for_each_node(g, [&](std::size_t f, std::span<const std::size_t> idx) {
    if (m[f]) mbox[detail::box_node(box, idx, off)] = 1;
  });

  const VectorField ge = grad(rec.eta, mode);
  const VectorField resid = vt - pd.w - ge;
  const double nv = detail::masked_l2(vt, mbox);
  r.recon_rel = safe_ratio(detail::masked_l2(resid, mbox), nv);
  r.div_w_rel = safe_ratio(detail::masked_l2(div(pd.w, mode), mbox), nv);

  // The leak skips the outer interior_margin layers of the box, where one-sided
  // rows already perturb eta_1 (free-space path only).
  const IndexBox core = mode == StencilMode::periodic ? IndexBox::whole(box)
                                                      : IndexBox::interior(box, opt.pipeline.interior_margin);
  double vmax = 0.0, leak = 0.0;
  const VectorField outside = pd.w + ge;
  for_each_node(box, [&](std::size_t f, std::span<const std::size_t> idx) {
    for (int c = 0; c < v.dim(); ++c) {
      if (mbox[f]) vmax = std::max(vmax, std::abs(vt[c][f]));
      else if (core.contains(idx)) leak = std::max(leak, std::abs(outside[c][f]));
    }
  });
  r.boundary_leak = safe_ratio(leak, vmax);

  // Restrict to Omega and pin the mean of eta over Omega to zero.
  const ScalarField eta = restrict_to(rec.eta, g);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < g.size(); ++f)
    if (m[f]) {
      sum += eta[f];
      ++count;
    }
  const double mean = count ? sum / double(count) : 0.0;
  std::vector<double> e(g.size(), 0.0);
  for (std::size_t f = 0; f < g.size(); ++f)
    if (m[f]) e[f] = eta[f] - mean;
  r.eta = ScalarField(g, std::move(e));

  const VectorField wr = restrict_to(pd.w, g);
  std::vector<ScalarField> wc;
  for (const auto& c : wr.components()) {
    std::vector<double> x(c.values());
    for (std::size_t f = 0; f < g.size(); ++f)
      if (!m[f]) x[f] = 0.0;
    wc.emplace_back(g, std::move(x));
  }
  r.w = VectorField(std::move(wc));
  return r;
}

}  // namespace vecpot
