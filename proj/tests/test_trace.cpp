#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "vecpot/charts.hpp"
#include "vecpot/oracle/order.hpp"
#include "vecpot/oracle/tensor.hpp"
#include "vecpot/trace.hpp"

using namespace vecpot;
using oracle::Poly;

namespace {

const Poly kX2Y = Poly::monomial(2, {2, 1});
const Poly kX3Y = Poly::monomial(2, {3, 1});

std::vector<double> param_coords(const BoundaryChart& c, std::size_t node) {
  const auto& g = c.param_grid();
  std::vector<std::size_t> idx(g.dim());
  g.unflatten(node, idx);
  std::vector<double> y(g.dim());
  for (int k = 0; k < g.dim(); ++k) y[k] = g.coord(k, idx[k]);
  return y;
}

template <class T>
std::vector<BoundaryField<T>> traces_of(const Poly& p, const ChartGeometry<Jet>& geo, int m) {
  std::vector<BoundaryField<T>> out;
  for (int q = 0; q < m; ++q) {
    const auto gq = gamma(oracle::jet_function(p), geo, q);
    if constexpr (std::is_same_v<T, Jet>) out.push_back(gq);
    else out.push_back(values_of(gq));
  }
  return out;
}

// max over nodes of |S_q - nabla^q p| / max |nabla^q p|, optionally skipping `margin` edge nodes.
double tensor_error(const BoundaryField<double>& S, const Poly& p, const BoundaryChart& c, std::size_t margin = 0) {
  const auto& g = c.param_grid();
  std::vector<std::size_t> idx(g.dim());
  double err = 0.0, mag = 0.0;
  for (std::size_t node = 0; node < S.nodes; ++node) {
    g.unflatten(node, idx);
    bool inner = true;
    for (int k = 0; k < g.dim(); ++k) inner = inner && idx[k] >= margin && idx[k] + margin < g.extent(k);
    const auto ref = oracle::derivative_tensor(p, S.order, c.point(node));
    for (std::size_t e = 0; e < ref.size(); ++e) {
      mag = std::max(mag, std::abs(ref[e]));
      if (inner) err = std::max(err, std::abs(S.at(node, e) - ref[e]));
    }
  }
  return mag > 0 ? err / mag : err;
}

bool bitwise_equal(const BoundaryField<double>& a, const BoundaryField<double>& b) {
  return a.order == b.order && a.values == b.values;
}

bool bitwise_equal(const BoundaryField<Jet>& a, const BoundaryField<Jet>& b) {
  if (a.order != b.order || a.values.size() != b.values.size()) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (a.values[i].coefficients() != b.values[i].coefficients()) return false;
  return true;
}

}  // namespace

TEST_CASE("frames") {
  SECTION("flat chart in 3D") {
    const auto f = build_frame(cube_face_chart(4), 7);
    CHECK(f.tangents[0] == std::vector<double>{1, 0, 0});
    CHECK(f.tangents[1] == std::vector<double>{0, -1, 0});
    CHECK(f.normal == std::vector<double>{0, 0, -1});
  }
  SECTION("tilted line in 2D") {
    const auto c = BoundaryChart::from_function(2, GridSpec::cube(1, 9, -1, 1), [](std::span<const Jet> y) { return y[0]; });
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t node : {0u, 4u, 8u}) {
      const auto f = build_frame(c, node);
      // The raw tangent (1,1) is flipped so that det(tau, n) = +1.
      CHECK(f.tangents[0][0] == Catch::Approx(-r).epsilon(1e-15));
      CHECK(f.tangents[0][1] == Catch::Approx(-r).epsilon(1e-15));
      CHECK(f.normal[0] == Catch::Approx(r).epsilon(1e-15));
      CHECK(f.normal[1] == Catch::Approx(-r).epsilon(1e-15));
    }
  }
  SECTION("orthonormal and positively oriented on curved charts") {
    for (int dim : {2, 3})
      for (int orient : {1, -1}) {
        auto c = curved_chart(dim, 12);
        c.orientation = orient;
        const ChartGeometry<double> fd(c);
        const ChartGeometry<Jet> ex(c, 3);
        for (std::size_t node = 0; node < c.nodes(); ++node) {
          std::vector<std::vector<double>> cols;
          for (const auto& t : fd.frame(node).tangents) cols.push_back(t);
          cols.push_back(fd.frame(node).normal);
          for (std::size_t a = 0; a < cols.size(); ++a)
            for (std::size_t b = 0; b < cols.size(); ++b) {
              double d = 0.0;
              for (int e = 0; e < dim; ++e) d += cols[a][e] * cols[b][e];
              CHECK(std::abs(d - (a == b ? 1.0 : 0.0)) <= 1e-12);
            }
          CHECK(std::abs(detail::det(cols) - 1.0) <= 1e-12);
          // Outward: the normal points to the side opposite Omega along the graph axis.
          CHECK(fd.frame(node).normal[dim - 1] * orient < 0.0);
          // Exact frame: n = orient (grad g, -1)/sqrt(1+|grad g|^2).
          const auto y = param_coords(c, node);
          std::vector<double> grad;
          if (dim == 2) grad = {0.4 * std::cos(2 * y[0])};
          else
            grad = {0.1 * std::cos(y[0]) * std::cos(y[1]) + 0.2 * std::cos(2 * y[0] + y[1]),
                    -0.1 * std::sin(y[0]) * std::sin(y[1]) + 0.1 * std::cos(2 * y[0] + y[1])};
          double len = 1.0;
          for (double g : grad) len += g * g;
          len = std::sqrt(len);
          for (int k = 0; k < dim - 1; ++k) CHECK(std::abs(ex.frame(node).normal[k].value() - orient * grad[k] / len) <= 1e-14);
          CHECK(std::abs(ex.frame(node).normal[dim - 1].value() + orient / len) <= 1e-14);
        }
      }
  }
  SECTION("chart validation") {
    CHECK_THROWS_AS(BoundaryChart(2, ScalarField(GridSpec::cube(2, 4, 0, 1))), TraceError);
    CHECK_THROWS_AS(BoundaryChart(2, ScalarField(GridSpec::cube(1, 4, 0, 1)), 0), TraceError);
    CHECK_THROWS_AS(ChartGeometry<Jet>(BoundaryChart(2, ScalarField(GridSpec::cube(1, 4, 0, 1)))), TraceError);
  }
}

TEST_CASE("trace operators") {
  const auto charts = unit_square_charts(8);
  const ChartGeometry<Jet> top(charts[1], 3);
  SECTION("x^2 y on the edge y = 1") {
    const auto phi = oracle::jet_function(kX2Y);
    const auto g0 = gamma0(phi, top), g1 = gamma1(phi, top), g2 = gamma2(phi, top);
    for (std::size_t i = 0; i < top.nodes(); ++i) {
      const double x = charts[1].point(i)[0];
      CHECK(std::abs(g0.at(i, 0).value() - x * x) <= 1e-15);
      CHECK(std::abs(g1.at(i, 0).value() - x * x) <= 1e-15);
      CHECK(std::abs(g2.at(i, 0).value()) <= 1e-15);
    }
  }
  SECTION("constant and linear data") {
    const AnalyticFn c = [](std::span<const Jet> x) { return x[0].constant(2.5); };
    const AnalyticFn lin = [](std::span<const Jet> x) { return 3.0 * x[0] - 2.0 * x[1] + 1.0; };
    const ChartGeometry<Jet> curved(curved_chart(2, 8), 3);
    for (const auto* geo : {&top, &curved}) {
      const auto c0 = gamma0(c, *geo), c1 = gamma1(c, *geo), c2 = gamma2(c, *geo), l2 = gamma2(lin, *geo);
      for (std::size_t i = 0; i < geo->nodes(); ++i) {
        CHECK(c0.at(i, 0).value() == 2.5);
        CHECK(c1.at(i, 0).value() == 0.0);
        CHECK(c2.at(i, 0).value() == 0.0);
        CHECK(std::abs(l2.at(i, 0).value()) <= 1e-15);
      }
    }
  }
  SECTION("curved chart against the analytic gradient and Hessian") {
    const auto p = oracle::random_poly(2, 3, 11);
    const auto c = curved_chart(2, 16);
    const ChartGeometry<Jet> geo(c, 3);
    const auto g1 = gamma1(oracle::jet_function(p), geo), g2 = gamma2(oracle::jet_function(p), geo);
    for (std::size_t i = 0; i < c.nodes(); ++i) {
      const auto x = c.point(i);
      const double gp = 0.4 * std::cos(2 * x[0]);
      const double len = std::sqrt(1 + gp * gp);
      const double n[2] = {gp / len, -1 / len};
      const auto gr = oracle::derivative_tensor(p, 1, x);
      const auto H = oracle::derivative_tensor(p, 2, x);
      const double d1 = gr[0] * n[0] + gr[1] * n[1];
      double d2 = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) d2 += n[a] * H[a * 2 + b] * n[b];
      CHECK(std::abs(g1.at(i, 0).value() - d1) <= 1e-12);
      CHECK(std::abs(g2.at(i, 0).value() - d2) <= 1e-12);
    }
  }
}

TEST_CASE("volume-field traces") {
  const auto charts = unit_square_charts(16);
  SECTION("exact for x^2 y") {
    const auto vol = oracle::sample_poly(GridSpec::cube(2, 33, 0.0, 1.0), kX2Y);
    const auto g0 = gamma_from_volume(vol, charts[1], 0), g1 = gamma_from_volume(vol, charts[1], 1),
               g2 = gamma_from_volume(vol, charts[1], 2);
    for (std::size_t i = 0; i < charts[1].nodes(); ++i) {
      const double x = charts[1].point(i)[0];
      CHECK(g0.at(i, 0) == Catch::Approx(x * x).margin(1e-13));
      CHECK(g1.at(i, 0) == Catch::Approx(x * x).margin(1e-11));
      CHECK(g2.at(i, 0) == Catch::Approx(0.0).margin(1e-9));
    }
  }
  SECTION("convergence on a curved chart") {
    // The chart is refined with the volume grid: its finite-difference normal is O(h^2).
    const AnalyticFn phi = [](std::span<const Jet> x) { return exp(0.5 * x[0]) * sin(x[1] + 0.3); };
    std::vector<std::pair<double, double>> s1, s2;
    for (std::size_t cells : {32, 64, 128}) {
      const auto c = curved_chart(2, cells);
      const auto ref1 = values_of(gamma(phi, ChartGeometry<Jet>(c, 3), 1));
      const auto ref2 = values_of(gamma(phi, ChartGeometry<Jet>(c, 3), 2));
      const auto g = GridSpec::cube(2, cells + 1, -1.25, 1.25);
      const auto vol = sample(g, [](std::span<const double> x) { return std::exp(0.5 * x[0]) * std::sin(x[1] + 0.3); });
      const auto a = gamma_from_volume(vol, c, 1), b = gamma_from_volume(vol, c, 2);
      double e1 = 0, e2 = 0;
      for (std::size_t i = 0; i < c.nodes(); ++i) {
        e1 = std::max(e1, std::abs(a.at(i, 0) - ref1.at(i, 0)));
        e2 = std::max(e2, std::abs(b.at(i, 0) - ref2.at(i, 0)));
      }
      s1.emplace_back(g.h(0), e1);
      s2.emplace_back(g.h(0), e2);
    }
    INFO(s1[0].second << " " << s1[2].second << " / " << s2[0].second << " " << s2[2].second);
    CHECK(oracle::observed_order(s1) >= 1.8);
    CHECK(oracle::observed_order(s2) >= 0.9);
  }
  SECTION("insufficient stencil room") {
    const auto vol = oracle::sample_poly(GridSpec::cube(2, 17, 0.0, 1.0), kX2Y);
    auto outward = charts[1];
    outward.orientation = 1;  // Omega above y = 1: the stencil leaves the grid
    CHECK_THROWS_WITH(gamma_from_volume(vol, outward, 1), Catch::Matchers::ContainsSubstring("stencil"));
    CHECK_NOTHROW(gamma_from_volume(vol, outward, 0));
    CHECK_THROWS_AS(gamma_from_volume(vol, charts[1], 3), TraceError);
  }
}

TEST_CASE("surface gradient") {
  const auto charts = unit_square_charts(8);
  const ChartGeometry<double> top(charts[1]);
  SECTION("constant gives zero") {
    const auto g = surface_gradient(boundary_scalar(2, std::vector<double>(9, 3.0)), top);
    for (double v : g.values) CHECK(v == 0.0);
  }
  SECTION("flat 3D chart, u = y1") {
    const auto c = cube_face_chart(6);
    const ChartGeometry<double> geo(c);
    std::vector<double> u(c.nodes());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = c.point(i)[0];
    const auto g = surface_gradient(boundary_scalar(3, u), geo);
    for (std::size_t i = 0; i < c.nodes(); ++i) {
      CHECK(g.at(i, 0) == Catch::Approx(1.0).epsilon(1e-14));
      CHECK(std::abs(g.at(i, 1)) <= 1e-14);
      CHECK(g.at(i, 2) == 0.0);
    }
  }
  SECTION("gamma0(x^2 y) on y = 1 has gradient (2x, 0)") {
    const ChartGeometry<Jet> ex(charts[1], 3);
    const auto g0 = gamma0(oracle::jet_function(kX2Y), ex);
    const auto gj = values_of(surface_gradient(g0, ex));
    const auto gf = surface_gradient(values_of(g0), top);
    for (std::size_t i = 0; i < top.nodes(); ++i) {
      const double x = charts[1].point(i)[0];
      for (const auto* g : {&gj, &gf}) {
        CHECK(g->at(i, 0) == Catch::Approx(2 * x).margin(1e-13));
        CHECK(std::abs(g->at(i, 1)) <= 1e-13);
      }
    }
  }
}

TEST_CASE("s and S on the square") {
  const auto charts = unit_square_charts(8);
  const ChartGeometry<Jet> ex(charts[1], 4);
  const ChartGeometry<double> fd(charts[1]);
  const auto tj = traces_of<Jet>(kX2Y, ex, 3);
  const auto td = traces_of<double>(kX2Y, ex, 3);
  SECTION("x^2 y gives s = (2x, x^2) and S = [[2, 2x], [2x, 0]]") {
    const auto sj = build_s(tj[0], tj[1], ex);
    const auto sd = build_s(td[0], td[1], fd);
    const auto Sj = values_of(build_S(sj, tj[2], ex));
    const auto Sd = build_S(sd, td[2], fd);
    for (std::size_t i = 0; i < fd.nodes(); ++i) {
      const double x = charts[1].point(i)[0];
      CHECK(sj.at(i, 0).value() == Catch::Approx(2 * x).margin(1e-14));
      CHECK(sj.at(i, 1).value() == Catch::Approx(x * x).margin(1e-14));
      CHECK(sd.at(i, 0) == Catch::Approx(2 * x).margin(1e-13));
      CHECK(sd.at(i, 1) == Catch::Approx(x * x).margin(1e-13));
      for (const auto* S : {&Sj, &Sd}) {
        CHECK(S->at(i, 0) == Catch::Approx(2.0).margin(1e-12));
        CHECK(S->at(i, 1) == Catch::Approx(2 * x).margin(1e-12));
        CHECK(S->at(i, 2) == Catch::Approx(2 * x).margin(1e-12));
        CHECK(std::abs(S->at(i, 3)) <= 1e-12);
      }
    }
  }
  SECTION("zero data") {
    const auto z = boundary_scalar(2, std::vector<double>(9, 0.0));
    const auto S = build_S(build_s(z, z, fd), z, fd);
    for (double v : S.values) CHECK(v == 0.0);
  }
  SECTION("constant phi0 and phi1 = c give s = c n") {
    const auto s = build_s(boundary_scalar(2, std::vector<double>(9, 4.0)), boundary_scalar(2, std::vector<double>(9, 1.5)), fd);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(s.at(i, 0) == 0.0);
      CHECK(s.at(i, 1) == 1.5);
    }
  }
}

TEST_CASE("S identities on flat, tilted and curved charts") {
  for (int dim : {2, 3}) {
    const auto p = oracle::random_poly(dim, 3, 100 + dim);
    const auto phi = oracle::jet_function(p);
    for (const auto& c : {dim == 2 ? unit_square_charts(6)[0] : cube_face_chart(6), tilted_chart(dim, 6), curved_chart(dim, 6)}) {
      const ChartGeometry<Jet> geo(c, 4);
      const auto t = traces_of<Jet>(p, geo, 3);
      const auto s = build_s(t[0], t[1], geo);
      const auto S = build_S(s, t[2], geo);
      const auto gs = surface_gradient(s, geo);
      const auto Sv = values_of(S);
      double mag = 0.0;
      for (double v : Sv.values) mag = std::max(mag, std::abs(v));
      for (std::size_t node = 0; node < geo.nodes(); ++node) {
        const auto& fr = geo.frame(node);
        // S n n = phi2.
        double snn = 0.0;
        for (int a = 0; a < dim; ++a)
          for (int b = 0; b < dim; ++b) snn += Sv.at(node, a * dim + b) * fr.normal[a].value() * fr.normal[b].value();
        CHECK(std::abs(snn - t[2].at(node, 0).value()) <= 1e-13 * mag);
        // Tangential block of S equals that of grad_Gamma s.
        for (int i = 0; i < dim - 1; ++i)
          for (int j = 0; j < dim - 1; ++j) {
            double lhs = 0.0, rhs = 0.0;
            for (int a = 0; a < dim; ++a)
              for (int b = 0; b < dim; ++b) {
                const double w = fr.tangents[i][a].value() * fr.tangents[j][b].value();
                lhs += Sv.at(node, a * dim + b) * w;
                rhs += gs.at(node, a * dim + b).value() * w;
              }
            CHECK(std::abs(lhs - rhs) <= 1e-13 * mag);
          }
      }
      // S is the ambient Hessian, hence symmetric.
      CHECK(tensor_error(Sv, p, c) <= 1e-12);
      // Lemma 4.3: grad_Gamma phi0_i + phi1_i n = S e_i.
      for (int i = 0; i < dim; ++i) {
        const auto [r0, r1] = lemma43_rows(s, t[2], geo, i);
        const auto lhs = values_of(build_s(r0, r1, geo));
        for (std::size_t node = 0; node < geo.nodes(); ++node)
          for (int a = 0; a < dim; ++a) CHECK(std::abs(lhs.at(node, a) - Sv.at(node, a * dim + i)) <= 1e-10 * mag);
      }
    }
  }
}

TEST_CASE("S is exactly phi2 n n on flat axis-aligned charts") {
  const auto charts = unit_square_charts(8);
  for (const auto& c : charts) {
    const ChartGeometry<double> fd(c);
    const auto t = traces_of<double>(kX2Y, ChartGeometry<Jet>(c, 4), 3);
    const auto S = build_S(build_s(t[0], t[1], fd), t[2], fd);
    for (std::size_t node = 0; node < fd.nodes(); ++node) {
      double snn = 0.0;
      const auto& n = fd.frame(node).normal;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) snn += S.at(node, a * 2 + b) * n[a] * n[b];
      CHECK(snn == t[2].at(node, 0));
    }
  }
}

TEST_CASE("S chain") {
  const auto charts = unit_square_charts(8);
  SECTION("m = 2 and m = 3 reproduce build_s and build_S bitwise") {
    for (const auto& c : {charts[1], curved_chart(2, 8), curved_chart(3, 5)}) {
      const int dim = c.dim;
      const auto p = oracle::random_poly(dim, 3, 7);
      const ChartGeometry<Jet> ex(c, 4);
      const ChartGeometry<double> fd(c);
      const auto tj = traces_of<Jet>(p, ex, 3);
      const auto td = traces_of<double>(p, ex, 3);
      const auto sj = build_s(tj[0], tj[1], ex);
      const auto sd = build_s(td[0], td[1], fd);
      const auto cj2 = build_S_chain(tj, ex, 2);
      const auto cd2 = build_S_chain(td, fd, 2);
      REQUIRE(cj2.size() == 2);
      CHECK(bitwise_equal(cj2[1], sj));
      CHECK(bitwise_equal(cd2[1], sd));
      const auto cj3 = build_S_chain(tj, ex, 3);
      const auto cd3 = build_S_chain(td, fd, 3);
      CHECK(bitwise_equal(cj3[2], build_S(sj, tj[2], ex)));
      CHECK(bitwise_equal(cd3[2], build_S(sd, td[2], fd)));
    }
  }
  SECTION("m = 4 with x^3 y: S_3 is the third derivative tensor") {
    for (const auto& c : charts) {
      const ChartGeometry<Jet> ex(c, 5);
      const auto chain = build_S_chain(traces_of<Jet>(kX3Y, ex, 4), ex, 4);
      const auto S3 = values_of(chain[3]);
      CHECK(tensor_error(S3, kX3Y, c) <= 1e-12);
      double sym = 0.0, mag = 0.0;
      for (std::size_t node = 0; node < S3.nodes; ++node) {
        sym = std::max(sym, detail::swap_defect(std::span(S3.values).subspan(node * 8, 8), 2, 3));
        for (std::size_t e = 0; e < 8; ++e) mag = std::max(mag, std::abs(S3.at(node, e)));
      }
      CHECK(sym <= 1e-8 * mag);
    }
  }
  SECTION("m = 4 on curved 3D charts") {
    const auto p = oracle::random_poly(3, 4, 21);
    for (const auto& c : {tilted_chart(3, 5), curved_chart(3, 5)}) {
      const ChartGeometry<Jet> ex(c, 5);
      const auto chain = build_S_chain(traces_of<Jet>(p, ex, 4), ex, 4);
      for (int q = 0; q < 4; ++q) CHECK(tensor_error(values_of(chain[q]), p, c) <= 1e-11);
    }
  }
  SECTION("finite-difference chain converges at second order away from the chart edges") {
    const auto p = oracle::random_poly(3, 4, 5);
    std::vector<std::pair<double, double>> s2, s3;
    for (std::size_t cells : {16, 32, 64}) {
      const auto c = curved_chart(3, cells);
      const ChartGeometry<double> fd(c);
      const auto chain = build_S_chain(traces_of<double>(p, ChartGeometry<Jet>(c, 5), 4), fd, 4);
      s2.emplace_back(2.0 / double(cells), tensor_error(chain[2], p, c, 3));
      s3.emplace_back(2.0 / double(cells), tensor_error(chain[3], p, c, 3));
    }
    INFO(s2[0].second << " " << s2[2].second << " / " << s3[0].second << " " << s3[2].second);
    CHECK(oracle::observed_order(s2) >= 1.8);
    CHECK(oracle::observed_order(s3) >= 1.8);
  }
  SECTION("order cap") {
    const ChartGeometry<double> fd(charts[0]);
    std::vector<BoundaryField<double>> t(5, boundary_scalar(2, std::vector<double>(9, 0.0)));
    CHECK_THROWS_AS(build_S_chain(t, fd, 5), TraceError);
    CHECK_THROWS_AS(build_S_chain(t, fd, 0), TraceError);
  }
}

TEST_CASE("lemma 4.3 rows") {
  const auto charts = unit_square_charts(8);
  const ChartGeometry<double> fd(charts[1]);
  const ChartGeometry<Jet> ex(charts[1], 4);
  const auto t = traces_of<double>(kX2Y, ex, 3);
  const auto s = build_s(t[0], t[1], fd);
  SECTION("x^2 y, i = x gives the traces of 2xy") {
    const auto [r0, r1] = lemma43_rows(s, t[2], fd, 0);
    for (std::size_t i = 0; i < fd.nodes(); ++i) {
      const double x = charts[1].point(i)[0];
      CHECK(r0.at(i, 0) == Catch::Approx(2 * x).margin(1e-13));
      CHECK(r1.at(i, 0) == Catch::Approx(2 * x).margin(1e-12));
    }
  }
  SECTION("zero data") {
    const auto z = boundary_scalar(2, std::vector<double>(9, 0.0));
    const auto zs = build_s(z, z, fd);
    const auto [r0, r1] = lemma43_rows(zs, z, fd, 1);
    for (double v : r0.values) CHECK(v == 0.0);
    for (double v : r1.values) CHECK(v == 0.0);
  }
  SECTION("e_i = n on a flat chart") {
    const auto [r0, r1] = lemma43_rows(s, t[2], fd, 1);
    for (std::size_t i = 0; i < fd.nodes(); ++i) {
      CHECK(r0.at(i, 0) == t[1].at(i, 0));
      CHECK(r1.at(i, 0) == t[2].at(i, 0));
    }
  }
  SECTION("index range") {
    CHECK_THROWS_AS(lemma43_rows(s, t[2], fd, 2), std::out_of_range);
    CHECK_THROWS_AS(lemma43_rows(s, t[2], fd, -1), std::out_of_range);
  }
}

TEST_CASE("compatibility checker") {
  const auto charts = unit_square_charts(8);
  std::vector<ChartGeometry<Jet>> ex;
  std::vector<ChartGeometry<double>> fd;
  for (const auto& c : charts) {
    ex.emplace_back(c, 4);
    fd.emplace_back(c);
  }
  SECTION("traces of x^2 y are accepted") {
    std::vector<std::vector<BoundaryField<Jet>>> tj;
    std::vector<std::vector<BoundaryField<double>>> td;
    for (const auto& g : ex) {
      tj.push_back(traces_of<Jet>(kX2Y, g, 3));
      td.push_back(traces_of<double>(kX2Y, g, 3));
    }
    const auto rj = check_compatibility(tj, ex, 3, 1e-8);
    CHECK(rj.accept);
    CHECK(rj.symmetry_defect.size() == 3);
    for (double d : rj.overlap_defect) CHECK(d <= 1e-14);
    CHECK(rj.charts.size() == 4);
    CHECK(rj.charts[0].w1p.size() == 2);
    CHECK(rj.charts[0].slobodeckij > 0.0);
    // Polynomial data of degree 3 is differentiated exactly by the chart stencils.
    const auto rd = check_compatibility(td, fd, 3, 1e-8);
    CHECK(rd.accept);
  }
  SECTION("phi2 + 1 on a patch through a corner is rejected") {
    std::vector<std::vector<BoundaryField<double>>> td;
    for (const auto& g : ex) td.push_back(traces_of<double>(kX2Y, g, 3));
    // Bottom edge, x in [0, 0.25].
    for (std::size_t i = 0; i <= 2; ++i) td[0][2].at(i, 0) += 1.0;
    const auto r = check_compatibility(td, fd, 3, 1e-8);
    CHECK_FALSE(r.accept);
    CHECK(r.overlap_defect[2] >= 0.1);
    // n (x) n is symmetric, so the symmetry defect alone cannot see the patch.
    CHECK(r.symmetry_defect[2] <= 1e-12);
  }
  SECTION("zero traces") {
    std::vector<std::vector<BoundaryField<double>>> td(4, std::vector<BoundaryField<double>>(3, boundary_scalar(2, std::vector<double>(9, 0.0))));
    const auto r = check_compatibility(td, fd, 3, 1e-8);
    CHECK(r.accept);
    for (double d : r.symmetry_defect) CHECK(d == 0.0);
    for (double d : r.overlap_defect) CHECK(d == 0.0);
  }
  SECTION("finite-difference overlap defect for smooth data") {
    // Corners are chart end nodes. s carries one one-sided row (second order); S
    // differentiates s again, and a one-sided row applied to an O(h^2) error that
    // jumps between edge and interior rows leaves O(h) there.
    const AnalyticFn phi = [](std::span<const Jet> x) { return sin(2.0 * x[0]) * exp(x[1]); };
    std::vector<std::pair<double, double>> s1, s2;
    for (std::size_t cells : {16, 32, 64}) {
      std::vector<ChartGeometry<double>> geos;
      std::vector<std::vector<BoundaryField<double>>> td;
      for (const auto& c : unit_square_charts(cells)) {
        geos.emplace_back(c);
        td.push_back(sample_traces(phi, c, 3));
      }
      const auto r = check_compatibility(td, geos, 3, 1.0);
      s1.emplace_back(1.0 / double(cells), r.overlap_defect[1]);
      s2.emplace_back(1.0 / double(cells), r.overlap_defect[2]);
    }
    INFO(s1[0].second << " " << s1[2].second << " / " << s2[0].second << " " << s2[2].second);
    CHECK(oracle::observed_order(s1) >= 1.8);
    CHECK(oracle::observed_order(s2) >= 0.9);
  }
  SECTION("finite-difference symmetry defect is second order on a curved 3D chart") {
    const auto p = oracle::random_poly(3, 4, 9);
    std::vector<std::pair<double, double>> s;
    for (std::size_t cells : {8, 16, 32}) {
      const auto c = curved_chart(3, cells);
      std::vector<ChartGeometry<double>> geos{ChartGeometry<double>(c)};
      const auto r = check_compatibility({traces_of<double>(p, ChartGeometry<Jet>(c, 4), 3)}, geos, 3, 1.0);
      s.emplace_back(2.0 / double(cells), r.symmetry_defect[2]);
    }
    INFO(s[0].second << " " << s[1].second << " " << s[2].second);
    CHECK(s.back().second > 0.0);
    CHECK(oracle::observed_order(s) >= 1.8);
  }
  SECTION("argument errors") {
    std::vector<std::vector<BoundaryField<double>>> td(3);
    CHECK_THROWS_AS(check_compatibility(td, fd, 3, 1e-8), TraceError);
    CHECK_THROWS_AS(check_compatibility(std::vector<std::vector<BoundaryField<double>>>(4), fd, 3, 0.0), TraceError);
  }
}
