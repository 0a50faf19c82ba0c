#pragma once

// Newton potential of a radially symmetric density by one-dimensional quadrature.
// The spherical mean of the kernel over a shell of radius s seen from radius r
// is lambda(max(r, s)), so
//   phi(r) = integral_0^R rho(s) |S^{N-1}| s^{N-1} lambda(max(r, s)) ds.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "vecpot/newton.hpp"

namespace vecpot::oracle {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RadialDensity {
  std::function<double(double)> profile;  ///< rho(s), s >= 0
  double support_radius = 1.0;            ///< rho(s) = 0 for s > support_radius
  std::vector<double> breakpoints;        ///< radii where rho is not smooth
};

/// Tanh-sinh on every smooth piece (it tolerates the log and power endpoint singularities); throws if the estimated absolute error exceeds `tol`.
inline double radial_potential(const RadialDensity& rho, int dim, double r_eval, double tol = 1e-12) {
  const KernelSpec k = KernelSpec::for_dim(dim);
  const double area = dim * k.unit_ball_volume;
  std::vector<double> cuts{0.0, rho.support_radius};
  for (double b : rho.breakpoints)
    if (b > 0.0 && b < rho.support_radius) cuts.push_back(b);
  if (r_eval > 0.0 && r_eval < rho.support_radius) cuts.push_back(r_eval);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double v = rho.profile(s) * area * std::pow(s, dim - 1) * kernel_eval(k, std::max(r_eval, s));
    return std::isfinite(v) ? v : 0.0;  // s^(N-1) underflows before lambda(s) overflows only at s ~ 1e-308
  };
  boost::math::quadrature::tanh_sinh<double> rule;
  double total = 0.0;
  double err_total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0, l1 = 0.0;
    total += rule.integrate(integrand, cuts[i], cuts[i + 1], 1e-14, &err, &l1);
    err_total += err * l1;  // err is relative to the L1 norm of the piece
  }
  if (!(err_total <= tol)) throw QuadratureError("radial quadrature did not converge");
  return total;
}

}  // namespace vecpot::oracle
