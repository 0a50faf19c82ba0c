#pragma once

// Named refinement studies: each case maps a grid size (cells per axis) to one
// or more error measures, and the harness fits the observed order of each.

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vecpot/charts.hpp"
#include "vecpot/decomposition.hpp"
#include "vecpot/fields.hpp"
#include "vecpot/newton.hpp"
#include "vecpot/oracle/order.hpp"
#include "vecpot/oracle/tensor.hpp"
#include "vecpot/trace.hpp"
#include "vecpot/vector_potential.hpp"

namespace vecpot {

class ConvergenceUsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConvergenceCase {
  std::string name;
  std::string description;
  std::vector<std::size_t> default_grids;
  std::vector<std::string> series;
  std::function<std::vector<double>(std::size_t cells)> errors;  // one value per series
  std::function<double(std::size_t cells)> spacing;
};

struct ConvergenceSeries {
  std::string name;
  std::vector<double> errors;
  double slope = 0.0;
};

struct ConvergenceResult {
  std::string name;
  std::vector<std::size_t> grids;
  std::vector<double> spacing;
  std::vector<ConvergenceSeries> series;
  double min_slope = 1.8;
  bool pass = false;
};

namespace detail {

inline std::function<double(std::size_t)> box_spacing(double length) {
  return [length](std::size_t cells) { return length / double(cells); };
}

inline std::vector<double> poisson_gaussian(int dim, std::size_t cells) {
  const auto g = box_grid(dim, cells);
  const auto rho = sample(g, [](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::exp(-r2 / 0.04);
  });
  const auto res = -1.0 * laplacian_compact(newton_fast(rho), StencilMode::one_sided_edges) - rho;
  return {l2(res)};
}

// Bump radius of the pre-asymptotic-sensitive cases; keeps four cells of margin at 32 cells.
inline constexpr double kWideBump = 0.75;

inline std::vector<ConvergenceCase> make_cases() {
  std::vector<ConvergenceCase> cs;
  for (int dim : {2, 3}) {
    const std::string d = std::to_string(dim) + "d";
    cs.push_back({"poisson-gaussian-" + d, "-compact Laplacian of the Newton potential of a Gaussian vs the Gaussian (L2)",
                  {16, 32, 64}, {"residual"}, [dim](std::size_t c) { return poisson_gaussian(dim, c); }, box_spacing(2.0)});
    cs.push_back({"potential-div-" + d, "div_w_rel of construct() on a rotational bump", {16, 32, 64}, {"div_w_rel"},
                  [dim](std::size_t c) { return std::vector<double>{construct(rotational_bump(box_grid(dim, c))).div_w_rel}; },
                  box_spacing(2.0)});
    cs.push_back({"potential-harmonic-" + d, "harmonic residual of w2 on a wide rotational bump", {32, 64, 128},
                  {"harmonic_residual_rel"},
                  [dim](std::size_t c) {
                    return std::vector<double>{construct(rotational_bump(box_grid(dim, c), kWideBump)).harmonic_residual_rel};
                  },
                  box_spacing(2.0)});
  }
  const std::vector<std::string> split{"recon_rel", "div_w_rel", "boundary_leak"};
  cs.push_back({"decompose-gradient-2d", "zero-trace decomposition of a pure gradient bump", {32, 64, 128}, split,
                [](std::size_t c) {
                  const auto r = decompose_zero_trace(gradient_bump(box_grid(2, c), kWideBump));
                  return std::vector<double>{r.recon_rel, r.div_w_rel, r.boundary_leak};
                },
                box_spacing(2.0)});
  cs.push_back({"decompose-scurl-2d", "zero-trace decomposition of a pure scurl bump", {32, 64, 128}, split,
                [](std::size_t c) {
                  const auto r = decompose_zero_trace(rotational_bump(box_grid(2, c), kWideBump));
                  return std::vector<double>{r.recon_rel, r.div_w_rel, r.boundary_leak};
                },
                box_spacing(2.0)});
  cs.push_back({"trace-symmetry-fd-3d", "finite-difference symmetry defect of S on a curved 3D chart", {8, 16, 32},
                {"symmetry_defect"},
                [](std::size_t c) {
                  const auto chart = curved_chart(3, c);
                  const auto phi = oracle::jet_function(oracle::random_poly(3, 4, 9));
                  std::vector<ChartGeometry<double>> geos{ChartGeometry<double>(chart)};
                  const auto r = check_compatibility({sample_traces(phi, chart, 3)}, geos, 3, 1.0);
                  return std::vector<double>{r.symmetry_defect[2]};
                },
                box_spacing(2.0)});
  return cs;
}

}  // namespace detail

inline const std::vector<ConvergenceCase>& convergence_cases() {
  static const std::vector<ConvergenceCase> cases = detail::make_cases();
  return cases;
}

inline const ConvergenceCase& find_case(const std::string& name) {
  for (const auto& c : convergence_cases())
    if (c.name == name) return c;
  throw ConvergenceUsageError("unknown convergence case '" + name + "'");
}

/// Runs `name` on `grids` (the case defaults if empty). Needs at least two
/// strictly increasing levels of at least 4 cells.
inline ConvergenceResult run_convergence(const std::string& name, std::vector<std::size_t> grids = {},
                                         double min_slope = 1.8) {
  const auto& c = find_case(name);
  if (grids.empty()) grids = c.default_grids;
  if (grids.size() < 2) throw ConvergenceUsageError("a convergence study needs at least two grids");
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (grids[i] < 4) throw ConvergenceUsageError("grids need at least 4 cells");
    if (i > 0 && grids[i] <= grids[i - 1]) throw ConvergenceUsageError("grids must be strictly increasing");
  }
  ConvergenceResult r;
  r.name = name;
  r.grids = grids;
  r.min_slope = min_slope;
  for (const auto& s : c.series) r.series.push_back({s, {}, 0.0});
  for (std::size_t cells : grids) {
    r.spacing.push_back(c.spacing(cells));
    const auto e = c.errors(cells);
    for (std::size_t k = 0; k < e.size(); ++k) r.series[k].errors.push_back(e[k]);
  }
  r.pass = true;
  for (auto& s : r.series) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < grids.size(); ++i) pts.emplace_back(r.spacing[i], s.errors[i]);
    s.slope = oracle::observed_order(pts);
    r.pass = r.pass && s.slope >= min_slope;
  }
  return r;
}

}  // namespace vecpot
