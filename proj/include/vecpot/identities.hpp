#pragma once

// The four vector-calculus identities checked on seeded random fields:
// curl grad = 0, div scurl = 0, (curl g, A) = (g, scurl A), and
// -lap = -grad div + scurl curl with the wide Laplacian.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vecpot/diff_ops.hpp"
#include "vecpot/norms.hpp"
#include "vecpot/random_fields.hpp"

namespace vecpot {

struct IdentityResult {
  std::string name;
  double defect = 0.0;  ///< relative
  bool pass = false;
};

struct IdentityReport {
  int dim = 0;
  std::size_t grid = 0;
  std::uint64_t seed = 0;
  StencilMode mode = StencilMode::periodic;
  double tol = 1e-12;
  std::vector<IdentityResult> results;

  bool all_pass() const {
    return std::all_of(results.begin(), results.end(), [](const IdentityResult& r) { return r.pass; });
  }
};

/// scurl replacement hook; the identity suite uses diff_ops' scurl unless told otherwise.
using ScurlFn = std::function<VectorField(const AntisymField&, StencilMode)>;

/// Grid used by the suite: periodic cube [0,1)^N, or [-1,1]^N with fields kept two cells inside.
inline GridSpec identity_grid(int dim, std::size_t n, StencilMode mode) {
  return mode == StencilMode::periodic ? GridSpec::periodic_cube(dim, n, 0.0, 1.0) : GridSpec::cube(dim, n, -1.0, 1.0);
}

inline IdentityReport run_identity_suite(int dim, std::size_t n, std::uint64_t seed, StencilMode mode,
                                         double tol = 1e-12, ScurlFn scurl_fn = nullptr) {
  if (!scurl_fn) scurl_fn = [](const AntisymField& a, StencilMode m) { return scurl(a, m); };
  const GridSpec g = identity_grid(dim, n, mode);
  const FieldSupport sup{mode == StencilMode::periodic, 2};
  IdentityReport rep{dim, n, seed, mode, tol, {}};
  auto add = [&](std::string name, double defect) {
    rep.results.push_back({std::move(name), defect, std::isfinite(defect) && defect <= tol});
  };

  const ScalarField eta = random_scalar(g, seed, 0, sup);
  const VectorField gv = random_vector(g, seed, 1, sup);
  const AntisymField a = random_antisym(g, seed, 2, sup);

  {
    const VectorField ge = grad(eta, mode);
    add("curl_grad", safe_ratio(max_abs(curl(ge, mode)), max_abs(ge)));
  }
  const VectorField sa = scurl_fn(a, mode);
  add("div_scurl", safe_ratio(max_abs(div(sa, mode)), max_abs(sa)));
  {
    const AntisymField cg = curl(gv, mode);
    const double lhs = inner(cg, a);
    const double rhs = inner(gv, sa);
    // Cauchy-Schwarz scale of the pairing.
    add("adjoint", safe_ratio(std::abs(lhs - rhs), l2(cg) * l2(a)));
  }
  {
    const VectorField lap = laplacian_wide(gv, mode);
    const VectorField rhs = grad(div(gv, mode), mode) - scurl_fn(curl(gv, mode), mode);
    add("laplacian", safe_ratio(max_abs(lap - rhs), max_abs(lap)));
  }
  return rep;
}

}  // namespace vecpot
