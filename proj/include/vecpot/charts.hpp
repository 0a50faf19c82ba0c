#pragma once

// Ready-made analytic boundary charts used by the tests, the acceptance runner
// and the CLI sample command.

#include <cmath>
#include <vector>

#include "vecpot/trace.hpp"

namespace vecpot {

/// Edges of the unit square [0,1]^2: bottom, top, left, right. Each has `cells`
/// cells, so neighbouring edges share their corner nodes.
inline std::vector<BoundaryChart> unit_square_charts(std::size_t cells) {
  const auto pg = GridSpec::cube(1, cells + 1, 0.0, 1.0);
  auto level = [](double c) { return AnalyticFn([c](std::span<const Jet> y) { return y[0].constant(c); }); };
  return {BoundaryChart::from_function(2, pg, level(0.0), 1, 1), BoundaryChart::from_function(2, pg, level(1.0), -1, 1),
          BoundaryChart::from_function(2, pg, level(0.0), 1, 0), BoundaryChart::from_function(2, pg, level(1.0), -1, 0)};
}

/// Bottom face z = 0 of the unit cube, Omega above.
inline BoundaryChart cube_face_chart(std::size_t cells) {
  return BoundaryChart::from_function(3, GridSpec::cube(2, cells + 1, 0.0, 1.0),
                                      [](std::span<const Jet> y) { return y[0].constant(0.0); });
}

/// Tilted plane x_N = 0.3 y_1 (- 0.2 y_2) over [-1,1]^{N-1}.
inline BoundaryChart tilted_chart(int dim, std::size_t cells) {
  return BoundaryChart::from_function(dim, GridSpec::cube(dim - 1, cells + 1, -1.0, 1.0), [](std::span<const Jet> y) {
    Jet z = 0.3 * y[0];
    if (y.size() > 1) z = z - 0.2 * y[1];
    return z;
  });
}

/// Curved graph: 0.2 sin(2 y_1) + 0.1 in 2D, 0.1 sin(y_1) cos(y_2) + 0.1 sin(2 y_1 + y_2) in 3D, over [-1,1]^{N-1}.
inline BoundaryChart curved_chart(int dim, std::size_t cells) {
  return BoundaryChart::from_function(dim, GridSpec::cube(dim - 1, cells + 1, -1.0, 1.0), [](std::span<const Jet> y) {
    if (y.size() == 1) return 0.2 * sin(2.0 * y[0]) + 0.1;
    return 0.1 * sin(y[0]) * cos(y[1]) + 0.1 * sin(2.0 * y[0] + y[1]);
  });
}

}  // namespace vecpot
