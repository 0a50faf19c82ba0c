#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vecpot/decomposition.hpp"
#include "vecpot/fields.hpp"
#include "vecpot/oracle/order.hpp"

using namespace vecpot;

namespace {

using Series = std::vector<std::pair<double, double>>;

IndexBox box(std::vector<std::size_t> lo, std::vector<std::size_t> hi) { return IndexBox{std::move(lo), std::move(hi)}; }

// The split errors are O(h^2) with a constant set by how many cells the bump
// spans; 32 cells (12 per radius) is the first clearly asymptotic level.
const std::vector<std::size_t> kLadder{32, 64, 128};
constexpr double kRadius = 0.75;

ScalarField minus_mean(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.values()) m += x;
  m /= double(f.size());
  std::vector<double> out(f.values());
  for (auto& x : out) x -= m;
  return ScalarField(f.grid(), std::move(out));
}

}  // namespace

TEST_CASE("region masks") {
  const auto g = box_grid(2, 8);
  SECTION("whole grid") {
    const Region r;
    const auto m = r.mask(g);
    const auto b = r.boundary_mask(g);
    std::size_t nb = 0;
    for (std::size_t f = 0; f < g.size(); ++f) {
      CHECK(m[f] == 1);
      nb += b[f];
    }
    CHECK(nb == 32);
  }
  SECTION("L shape has the re-entrant corner on its boundary") {
    const Region r({box({0, 0}, {8, 4}), box({0, 0}, {4, 8})});
    r.validate(g);
    const auto m = r.mask(g);
    const auto b = r.boundary_mask(g);
    const std::size_t corner[2] = {4, 4}, inner[2] = {2, 2}, outside[2] = {6, 6};
    CHECK(m[g.flat(corner)] == 1);
    CHECK(b[g.flat(corner)] == 1);
    CHECK(b[g.flat(inner)] == 0);
    CHECK(m[g.flat(outside)] == 0);
    CHECK(b[g.flat(outside)] == 0);
  }
}

TEST_CASE("region validation") {
  const auto g2 = box_grid(2, 10);
  CHECK_NOTHROW(Region().validate(g2));
  CHECK_NOTHROW(Region({box({0, 0}, {10, 3}), box({0, 0}, {3, 10})}).validate(g2));
  CHECK_THROWS_AS(Region({box({0, 0}, {11, 3})}).validate(g2), std::invalid_argument);
  CHECK_THROWS_AS(Region({box({4, 0}, {3, 3})}).validate(g2), std::invalid_argument);
  CHECK_THROWS_AS(Region({box({0, 0}, {2, 2}), box({5, 5}, {8, 8})}).validate(g2), std::invalid_argument);
  // A square ring around a hole.
  const Region ring({box({1, 1}, {8, 3}), box({1, 6}, {8, 8}), box({1, 1}, {3, 8}), box({6, 1}, {8, 8})});
  CHECK_THROWS_WITH(ring.validate(g2), Catch::Matchers::ContainsSubstring("simply connected"));
  // A U shape is fine.
  CHECK_NOTHROW(Region({box({1, 1}, {8, 3}), box({1, 1}, {3, 8}), box({6, 1}, {8, 8})}).validate(g2));

  const auto g3 = box_grid(3, 8);
  CHECK_NOTHROW(Region({box({0, 0, 0}, {8, 2, 8}), box({0, 0, 0}, {2, 8, 8})}).validate(g3));
  // A solid torus: square ring extruded along z has b1 = 1 but a connected complement.
  const Region torus({box({1, 1, 2}, {7, 2, 5}), box({1, 6, 2}, {7, 7, 5}), box({1, 1, 2}, {2, 7, 5}),
                      box({6, 1, 2}, {7, 7, 5})});
  CHECK_THROWS_WITH(torus.validate(g3), Catch::Matchers::ContainsSubstring("simply connected"));
  // A hollow cube: simply connected surface-wise but encloses a cavity.
  const Region shell({box({1, 1, 1}, {7, 7, 2}), box({1, 1, 6}, {7, 7, 7}), box({1, 1, 1}, {7, 2, 7}),
                      box({1, 6, 1}, {7, 7, 7}), box({1, 1, 1}, {2, 7, 7}), box({6, 1, 1}, {7, 7, 7})});
  CHECK_THROWS_WITH(shell.validate(g3), Catch::Matchers::ContainsSubstring("simply connected"));
}

TEST_CASE("zero extension") {
  const auto g = box_grid(2, 16);
  const auto v = gradient_bump(g, 0.6);
  const GridSpec big = padded_grid(g, 6);
  const auto e = zero_extend(v, big);
  SECTION("exact copy inside, zero outside") {
    double outside = 0.0;
    for_each_node(big, [&](std::size_t f, std::span<const std::size_t> idx) {
      const bool in = idx[0] >= 6 && idx[0] <= 22 && idx[1] >= 6 && idx[1] <= 22;
      if (!in) outside = std::max(outside, std::abs(e[0][f]) + std::abs(e[1][f]));
    });
    CHECK(outside == 0.0);
  }
  SECTION("restriction round trip is bitwise") {
    const auto r = restrict_to(e, g);
    for (int c = 0; c < 2; ++c) CHECK(r[c].values() == v[c].values());
  }
  SECTION("region nodes only") {
    const Region half({box({0, 0}, {8, 16})});
    const auto eh = zero_extend(v, big, half);
    const std::size_t in[2] = {6 + 4, 6 + 5}, out[2] = {6 + 12, 6 + 5};
    CHECK(eh[0][big.flat(in)] == v[0][g.flat(std::vector<std::size_t>{4, 5})]);
    CHECK(eh[0][big.flat(out)] == 0.0);
  }
  SECTION("misaligned box") {
    const GridSpec shifted(big.shape(), big.spacing(), {big.origin()[0] + 0.3 * g.h(0), big.origin()[1]});
    CHECK_THROWS_AS(zero_extend(v, shifted), GridError);
    CHECK_THROWS_AS(zero_extend(v, box_grid(2, 20)), GridError);
  }
}

TEST_CASE("gradient recovery") {
  SECTION("u = grad(bump) gives the bump minus its mean") {
    Series res, eta_err;
    for (std::size_t cells : kLadder) {
      const auto g = box_grid(2, cells);
      const auto psi = bump_field(g, kRadius);
      const auto rec = gradient_recover(grad(psi, StencilMode::one_sided_edges));
      res.emplace_back(g.h(0), rec.residual);
      eta_err.emplace_back(g.h(0), max_abs(rec.eta - minus_mean(psi)) / max_abs(psi));
      double m = 0.0;
      for (double x : rec.eta.values()) m += x;
      CHECK(std::abs(m) / double(g.size()) <= 1e-14);
    }
    INFO(res[0].second << " " << res[1].second << " " << res[2].second);
    CHECK(oracle::observed_order(res) >= 1.8);
    CHECK(oracle::observed_order(eta_err) >= 1.8);
  }
  SECTION("periodic recovery is exact") {
    const auto g = GridSpec::periodic_cube(3, 16, 0.0, 1.0);
    const auto psi = sample(g, [](std::span<const double> x) {
      return std::sin(2 * M_PI * x[0]) * std::cos(4 * M_PI * x[1]) + std::cos(2 * M_PI * x[2]);
    });
    const auto rec = gradient_recover(grad(psi, StencilMode::periodic), StencilMode::periodic);
    CHECK(rec.residual <= 1e-12);
    CHECK(max_abs(rec.eta - minus_mean(psi)) <= 1e-12);
  }
  SECTION("a rotational field is not a gradient") {
    const auto g = box_grid(2, 16);
    CHECK_THROWS_AS(gradient_recover(rotational_bump(g)), DecompositionError);
  }
  SECTION("zero field") {
    const auto g = box_grid(3, 8);
    const auto rec = gradient_recover(VectorField::zeros(g));
    CHECK(max_abs(rec.eta) == 0.0);
    CHECK(rec.residual == 0.0);
  }
}

TEST_CASE("decompose rejects a nonzero trace") {
  const auto g = box_grid(2, 12);
  auto v = gradient_bump(g, 0.6);
  std::vector<ScalarField> c(v.components());
  std::vector<double> x(c[0].values());
  x[g.flat(std::vector<std::size_t>{0, 5})] = 0.5;
  c[0] = ScalarField(g, x);
  CHECK_THROWS_WITH(decompose_zero_trace(VectorField(c)), Catch::Matchers::ContainsSubstring("boundary"));
  // The same value inside is fine.
  x[g.flat(std::vector<std::size_t>{0, 5})] = 0.0;
  x[g.flat(std::vector<std::size_t>{6, 5})] += 0.5;
  c[0] = ScalarField(g, x);
  CHECK_NOTHROW(decompose_zero_trace(VectorField(c)));
}

TEST_CASE("decompose the zero field") {
  const auto r = decompose_zero_trace(VectorField::zeros(box_grid(2, 12)));
  CHECK(max_abs(r.w) == 0.0);
  CHECK(max_abs(r.eta) == 0.0);
  CHECK(r.recon_rel == 0.0);
  CHECK(r.div_w_rel == 0.0);
  CHECK(r.boundary_leak == 0.0);
}

TEST_CASE("known splits") {
  SECTION("pure gradient: w ~ 0 and eta ~ psi - mean") {
    Series recon, divw, leak, eta_err, w_size;
    for (std::size_t cells : kLadder) {
      const auto g = box_grid(2, cells);
      const auto v = gradient_bump(g, kRadius);
      const auto r = decompose_zero_trace(v);
      CHECK(r.warnings.messages.empty());
      recon.emplace_back(g.h(0), r.recon_rel);
      divw.emplace_back(g.h(0), r.div_w_rel);
      leak.emplace_back(g.h(0), r.boundary_leak);
      eta_err.emplace_back(g.h(0), max_abs(r.eta - minus_mean(bump_field(g, kRadius))));
      w_size.emplace_back(g.h(0), l2(r.w) / l2(v));
    }
    INFO("recon " << recon[0].second << " " << recon[1].second << " " << recon[2].second);
    INFO("leak " << leak[0].second << " " << leak[1].second << " " << leak[2].second);
    CHECK(oracle::observed_order(recon) >= 1.8);
    CHECK(oracle::observed_order(divw) >= 1.8);
    CHECK(oracle::observed_order(leak) >= 1.8);
    CHECK(oracle::observed_order(eta_err) >= 1.8);
    CHECK(oracle::observed_order(w_size) >= 1.8);
  }
  SECTION("pure scurl: eta ~ const and w ~ v") {
    Series recon, divw, leak, w_err;
    for (std::size_t cells : kLadder) {
      const auto g = box_grid(2, cells);
      const auto v = rotational_bump(g, kRadius);
      const auto r = decompose_zero_trace(v);
      recon.emplace_back(g.h(0), r.recon_rel);
      divw.emplace_back(g.h(0), r.div_w_rel);
      leak.emplace_back(g.h(0), r.boundary_leak);
      w_err.emplace_back(g.h(0), l2(r.w - v) / l2(v));
      CHECK(max_abs(r.eta) <= 1e-2 * max_abs(v));
    }
    INFO("recon " << recon[0].second << " " << recon[1].second << " " << recon[2].second);
    INFO("leak " << leak[0].second << " " << leak[1].second << " " << leak[2].second);
    CHECK(oracle::observed_order(recon) >= 1.8);
    CHECK(oracle::observed_order(divw) >= 1.8);
    CHECK(oracle::observed_order(leak) >= 1.8);
    CHECK(oracle::observed_order(w_err) >= 1.8);
  }
}

TEST_CASE("spectral path reconstructs to roundoff") {
  DecompositionOptions opt;
  opt.pipeline.path = PotentialPath::spectral;
  for (int dim : {2, 3}) {
    const auto g = box_grid(dim, 16);
    const auto v = gradient_bump(g, kRadius) + rotational_bump(g, kRadius);
    const auto r = decompose_zero_trace(v, {}, opt);
    CHECK(r.recon_rel <= 1e-10);
    CHECK(r.boundary_leak <= 1e-10);
  }
}

TEST_CASE("decomposition is linear") {
  const auto g = box_grid(3, 12);
  const auto v1 = gradient_bump(g, 0.6) + rotational_bump(g, 0.5);
  const auto v2 = rotational_bump(g, 0.7);
  const double a = -1.7;
  const auto r1 = decompose_zero_trace(v1);
  const auto r2 = decompose_zero_trace(v2);
  const auto r = decompose_zero_trace(a * v1 + v2);
  const auto w_lin = a * r1.w + r2.w;
  const auto eta_lin = a * r1.eta + r2.eta;
  CHECK(max_abs(r.w - w_lin) <= 1e-10 * max_abs(r.w));
  CHECK(max_abs(r.eta - eta_lin) <= 1e-10 * max_abs(r.eta));
}

TEST_CASE("L-shaped region") {
  const auto g = box_grid(2, 64);
  const Region ell({box({0, 0}, {64, 32}), box({0, 0}, {32, 64})});
  // A bump centred in the lower-left square, clear of the boundary.
  std::vector<double> c{-0.5, -0.5};
  const auto psi = sample(g, [&](std::span<const double> x) { return radial_bump(x, c, 0.35); });
  const auto v = grad(psi, StencilMode::one_sided_edges);
  const auto r = decompose_zero_trace(v, ell);
  CHECK(r.recon_rel <= 0.05);
  CHECK(r.boundary_leak <= 1e-2);
  // Off the region both outputs are zero; eta has zero mean on it.
  const auto m = ell.mask(g);
  double mean = 0.0, off = 0.0;
  std::size_t n = 0;
  for (std::size_t f = 0; f < g.size(); ++f) {
    if (m[f]) {
      mean += r.eta[f];
      ++n;
    } else {
      off = std::max({off, std::abs(r.eta[f]), std::abs(r.w[0][f]), std::abs(r.w[1][f])});
    }
  }
  CHECK(off == 0.0);
  CHECK(std::abs(mean / double(n)) <= 1e-14);
}
