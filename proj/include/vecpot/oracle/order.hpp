#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace vecpot::oracle {

/// Least-squares slope of log(e) against log(h).
inline double observed_order(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("observed_order needs at least two grid levels");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [h, e] : samples) {
    if (!(h > 0.0) || !(e > 0.0) || !std::isfinite(h) || !std::isfinite(e))
      throw std::invalid_argument("observed_order needs positive finite h and e");
    const double x = std::log(h), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = double(samples.size());
  const double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-300) throw std::invalid_argument("observed_order needs distinct grid spacings");
  return (n * sxy - sx * sy) / den;
}

}  // namespace vecpot::oracle
