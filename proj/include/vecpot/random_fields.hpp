#pragma once

// Seeded smooth random fields used by the identity suites and the CLI.
//
// A field is a sum of 6 cosine modes. Each mode draws an integer wave vector
// with entries in {-2,...,2} (not all zero), an amplitude uniform in [-1,1]
// damped by exp(-|k|^2/8), and a phase uniform in [0, 2*pi). Periodic fields
// use the period n_k*h_k of each axis. Compact fields use the node box shrunk
// by `margin` cells as the wavelength box and multiply by the C-infinity bump
// prod_k exp(1 - 1/(1 - t_k^2)), t_k the coordinate scaled to [-1, 1] on that
// box, plus a constant offset of 0.5 so the field never vanishes identically.
// Streams are seeded by splitmix64(seed) ^ splitmix64(stream + 1) into mt19937_64;
// uniforms take the top 53 bits of each draw.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>

#include "vecpot/grid.hpp"

namespace vecpot {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class SmoothRandom {
 public:
  SmoothRandom(std::uint64_t seed, std::uint64_t stream) : gen_(splitmix64(seed) ^ splitmix64(stream + 1)) {}

  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) { return lo + int(uniform() * double(hi - lo + 1)) % (hi - lo + 1); }

 private:
  std::mt19937_64 gen_;
};

/// Support of a generated field: periodic on the whole grid, or a bump kept
/// `margin` cells inside every edge.
struct FieldSupport {
  bool periodic = false;
  std::size_t margin = 2;
};

/// C-infinity bump exp(1 - 1/(1-t^2)) on |t| < 1, zero elsewhere.
inline double bump1d(double t) {
  if (std::abs(t) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

inline ScalarField random_scalar(const GridSpec& g, std::uint64_t seed, std::uint64_t stream, FieldSupport support) {
  SmoothRandom rng(seed, stream);
  const int d = g.dim();
  struct Mode {
    std::vector<int> k;
    double amp;
    double phase;
  };
  std::vector<Mode> modes;
  while (modes.size() < 6) {
    Mode m;
    int k2 = 0;
    for (int j = 0; j < d; ++j) {
      m.k.push_back(rng.integer(-2, 2));
      k2 += m.k.back() * m.k.back();
    }
    m.amp = rng.uniform(-1.0, 1.0) * std::exp(-double(k2) / 8.0);
    m.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    if (k2 > 0) modes.push_back(std::move(m));
  }

  std::vector<double> lo(d), len(d);
  for (int j = 0; j < d; ++j) {
    if (support.periodic) {
      lo[j] = g.origin()[j];
      len[j] = double(g.extent(j)) * g.h(j);
    } else {
      if (2 * support.margin + 2 >= g.extent(j)) throw GridError("random field margin leaves no interior");
      lo[j] = g.coord(j, support.margin);
      len[j] = g.coord(j, g.extent(j) - 1 - support.margin) - lo[j];
    }
  }

  return sample(g, [&](std::span<const double> x) {
    double s = 0.0;
    for (const auto& m : modes) {
      double arg = m.phase;
      for (int j = 0; j < d; ++j) arg += 2.0 * std::numbers::pi * m.k[j] * (x[j] - lo[j]) / len[j];
      s += m.amp * std::cos(arg);
    }
    if (support.periodic) return s;
    double b = 1.0;
    for (int j = 0; j < d; ++j) b *= bump1d(2.0 * (x[j] - lo[j]) / len[j] - 1.0);
    return b * (s + 0.5);
  });
}

inline VectorField random_vector(const GridSpec& g, std::uint64_t seed, std::uint64_t stream, FieldSupport support) {
  std::vector<ScalarField> c;
  for (int k = 0; k < g.dim(); ++k) c.push_back(random_scalar(g, seed, stream * 64 + k, support));
  return VectorField(std::move(c));
}

inline AntisymField random_antisym(const GridSpec& g, std::uint64_t seed, std::uint64_t stream, FieldSupport support) {
  std::vector<ScalarField> c;
  for (int k = 0; k < pair_count(g.dim()); ++k) c.push_back(random_scalar(g, seed, stream * 64 + k, support));
  return AntisymField(std::move(c));
}

}  // namespace vecpot
