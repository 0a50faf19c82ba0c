#pragma once

// Exact derivative tensors of polynomials, the reference for the trace module.

#include <span>
#include <vector>

#include "vecpot/jet.hpp"
#include "vecpot/oracle/poly.hpp"

namespace vecpot::oracle {

/// nabla^q p at x, flat row-major with N^q entries; each entry is one exact
/// symbolic derivative evaluated with a single rounding.
inline std::vector<double> derivative_tensor(const Poly& p, int q, std::span<const double> x) {
  const int n = p.nvars();
  std::size_t w = 1;
  for (int j = 0; j < q; ++j) w *= std::size_t(n);
  std::vector<double> out(w);
  for (std::size_t e = 0; e < w; ++e) {
    Poly d = p;
    std::size_t r = e;
    for (int j = 0; j < q; ++j) {
      d = d.derivative(int(r % std::size_t(n)));
      r /= std::size_t(n);
    }
    out[e] = PolyEval(d)(x);
  }
  return out;
}

/// p as a function of jets, for the exact trace path.
inline std::function<Jet(std::span<const Jet>)> jet_function(const Poly& p) {
  return [p](std::span<const Jet> x) {
    Jet s = x[0].constant(0.0);
    for (const auto& [e, c] : p.terms()) {
      Jet m = x[0].constant(c.convert_to<double>());
      for (std::size_t k = 0; k < e.size(); ++k)
        if (e[k] > 0) m = m * pow(x[k], e[k]);
      s += m;
    }
    return s;
  };
}

}  // namespace vecpot::oracle
