// Acceptance run: one PASS/FAIL line per criterion, exit 0 iff all pass.
//
// Every reference value comes from an independent oracle (exact polynomial
// arithmetic, truncated Taylor jets, closed-form radial potentials) and never
// from the code under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vecpot/charts.hpp"
#include "vecpot/convergence.hpp"
#include "vecpot/decomposition.hpp"
#include "vecpot/diff_ops.hpp"
#include "vecpot/identities.hpp"
#include "vecpot/newton.hpp"
#include "vecpot/oracle/order.hpp"
#include "vecpot/oracle/poly.hpp"
#include "vecpot/oracle/tensor.hpp"
#include "vecpot/random_fields.hpp"
#include "vecpot/trace.hpp"
#include "vecpot/vector_potential.hpp"

using namespace vecpot;
using oracle::Poly;
using oracle::PolyField;

namespace {

constexpr auto kEdges = StencilMode::one_sided_edges;
using Series = std::vector<std::pair<double, double>>;

// Collects sub-checks of one criterion.
struct Check {
  bool pass = true;
  std::ostringstream notes;
  std::vector<std::string> failed;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failed.push_back(what);
    }
  }
  template <class V>
  void note(const std::string& key, V value) {
    notes << (notes.tellp() > 0 ? ", " : "") << key << "=" << value;
  }
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

std::string fixed(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

double rel_diff(const ScalarField& a, const ScalarField& b) { return safe_ratio(max_abs(a - b), max_abs(b)); }

// ---- 1 ----

void identities(Check& c) {
  double worst = 0.0;
  for (int dim : {2, 3, 4, 5}) {
    const std::size_t n = dim == 5 ? 8 : 16;
    for (auto mode : {StencilMode::periodic, kEdges}) {
      const auto rep = run_identity_suite(dim, n, 1000 + dim, mode, 1e-12);
      for (const auto& r : rep.results) {
        worst = std::max(worst, r.defect);
        c.require(r.pass, r.name + " N=" + std::to_string(dim));
      }
    }
  }
  c.note("worst_defect", sci(worst));
}

// ---- 2 ----

void newton(Check& c) {
  const auto g = GridSpec::cube(3, 16, -1.0, 1.0);
  const auto rho = random_scalar(g, 17, 3, {false, 2});
  const double fd = rel_diff(newton_fast(rho), newton_direct(rho));
  c.require(fd <= 1e-10, "fast vs direct");
  c.note("fast_vs_direct", sci(fd));

  for (const char* name : {"poisson-gaussian-2d", "poisson-gaussian-3d"}) {
    const auto r = run_convergence(name);
    c.require(r.pass, name);
    c.note(std::string(name) + "_order", fixed(r.series[0].slope));
  }

  // Uniform ball of radius R in 3-D: the potential at the centre is R^2/2.
  const double radius = 0.5;
  double worst = 0.0;
  for (std::size_t n : {17, 33, 65}) {
    const auto gb = GridSpec::cube(3, n, -1.0, 1.0);
    const auto ball = sample(gb, [&](std::span<const double> x) {
      return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= radius * radius ? 1.0 : 0.0;
    });
    const std::size_t ctr[3] = {n / 2, n / 2, n / 2};
    const double h = gb.h(0);
    const double err = std::abs(newton_fast(ball)[gb.flat(ctr)] - radius * radius / 2.0);
    c.require(err <= 3.0 * h * h, "ball centre n=" + std::to_string(n));
    worst = std::max(worst, err / (h * h));
  }
  c.note("ball_err_over_h2", fixed(worst));
}

// ---- 3 ----

void pipeline(Check& c) {
  double worst_curl = 0.0;
  for (int dim : {2, 3}) {
    Series div_s;
    std::vector<double> ratios;
    for (std::size_t cells : {16, 32, 64}) {
      const auto g = box_grid(dim, cells);
      const auto d = construct(rotational_bump(g));
      worst_curl = std::max(worst_curl, d.curl_defect_rel);
      c.require(d.curl_defect_rel <= 1e-12, "curl defect N=" + std::to_string(dim));
      div_s.emplace_back(g.h(0), d.div_w_rel);
      ratios.push_back(d.norm_ratio);
    }
    const double order = oracle::observed_order(div_s);
    c.require(order >= 1.8, "div order N=" + std::to_string(dim));
    c.note("div_order_" + std::to_string(dim) + "d", fixed(order));
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    const double spread = *hi / *lo - 1.0;
    c.require(spread <= 0.05, "norm ratio spread N=" + std::to_string(dim));
    c.note("ratio_spread_" + std::to_string(dim) + "d", fixed(spread));

    const auto h = run_convergence("potential-harmonic-" + std::to_string(dim) + "d");
    c.require(h.pass, "harmonic order N=" + std::to_string(dim));
    c.note("harmonic_order_" + std::to_string(dim) + "d", fixed(h.series[0].slope));
  }
  PipelineOptions spec;
  spec.path = PotentialPath::spectral;
  const auto d = construct(rotational_bump(box_grid(3, 32)), spec);
  c.require(d.div_w_rel <= 1e-10, "spectral div at 32^3");
  c.require(d.curl_defect_rel <= 1e-12, "spectral curl at 32^3");
  worst_curl = std::max(worst_curl, d.curl_defect_rel);
  c.note("spectral_div", sci(d.div_w_rel));
  c.note("worst_curl_defect", sci(worst_curl));
}

// ---- 4 ----

void decomposition(Check& c) {
  for (const char* name : {"decompose-gradient-2d", "decompose-scurl-2d"}) {
    const auto r = run_convergence(name);
    double lo = 1e300;
    for (const auto& s : r.series) {
      c.require(s.slope >= 1.8, std::string(name) + " " + s.name);
      lo = std::min(lo, s.slope);
    }
    c.note(std::string(name) + "_min_order", fixed(lo));
  }
  const auto g = box_grid(3, 12);
  const auto v1 = gradient_bump(g, 0.6) + rotational_bump(g, 0.5);
  const auto v2 = rotational_bump(g, 0.7);
  const double a = -1.7;
  const auto r1 = decompose_zero_trace(v1);
  const auto r2 = decompose_zero_trace(v2);
  const auto r = decompose_zero_trace(a * v1 + v2);
  const double lw = safe_ratio(max_abs(r.w - (a * r1.w + r2.w)), max_abs(r.w));
  const double le = safe_ratio(max_abs(r.eta - (a * r1.eta + r2.eta)), max_abs(r.eta));
  c.require(lw <= 1e-10 && le <= 1e-10, "linearity");
  c.note("linearity", sci(std::max(lw, le)));
}

// ---- 5 ----

std::vector<BoundaryField<Jet>> jet_traces(const Poly& p, const ChartGeometry<Jet>& geo, int m) {
  std::vector<BoundaryField<Jet>> out;
  for (int q = 0; q < m; ++q) out.push_back(gamma(oracle::jet_function(p), geo, q));
  return out;
}

bool same_bits(const BoundaryField<Jet>& a, const BoundaryField<Jet>& b) {
  if (a.order != b.order || a.values.size() != b.values.size()) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (a.values[i].coefficients() != b.values[i].coefficients()) return false;
  return true;
}

double max_abs(const BoundaryField<double>& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

// Checks S n n = phi2 (bitwise when `exact`) and the Lemma 4.3 rows on one chart.
void s_identities(Check& c, const ChartGeometry<Jet>& geo, const std::vector<BoundaryField<Jet>>& t, bool exact,
                  double& snn_worst, double& lemma_worst) {
  const int dim = geo.chart().dim;
  const auto s = build_s(t[0], t[1], geo);
  const auto S = build_S(s, t[2], geo);
  const auto Sv = values_of(S);
  const double mag = std::max(max_abs(Sv), 1e-300);
  for (std::size_t node = 0; node < geo.nodes(); ++node) {
    const auto& n = geo.frame(node).normal;
    double snn = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) snn += Sv.at(node, i * dim + j) * n[i].value() * n[j].value();
    const double err = std::abs(snn - t[2].at(node, 0).value());
    snn_worst = std::max(snn_worst, err / mag);
    if (exact) c.require(err == 0.0, "S n n exact on axis-aligned chart");
    else c.require(err <= 1e-13 * mag, "S n n on curved chart");
  }
  for (int i = 0; i < dim; ++i) {
    const auto [r0, r1] = lemma43_rows(s, t[2], geo, i);
    const auto lhs = values_of(build_s(r0, r1, geo));
    for (std::size_t node = 0; node < geo.nodes(); ++node)
      for (int a = 0; a < dim; ++a) {
        const double err = std::abs(lhs.at(node, a) - Sv.at(node, a * dim + i)) / mag;
        lemma_worst = std::max(lemma_worst, err);
      }
  }
  c.require(lemma_worst <= 1e-10, "lemma 4.3 rows");
}

void traces(Check& c) {
  auto functions = [](int dim) {
    auto mono = [dim](int ex, int ey) {
      std::vector<int> e(dim, 0);
      e[0] = ex;
      e[1] = ey;
      return Poly::monomial(dim, e);
    };
    return std::vector<std::pair<std::string, Poly>>{{"x2y", mono(2, 1)},
                                                    {"x3y", mono(3, 1)},
                                                    {"xy+y3", mono(1, 1) + mono(0, 3)},
                                                    {"random3", oracle::random_poly(dim, 3, 2024 + dim)}};
  };
  const double tol = 1e-8;
  double sym_worst = 0.0, snn_worst = 0.0, lemma_worst = 0.0;

  struct Boundary {
    std::string name;
    std::vector<BoundaryChart> charts;
    bool axis_aligned;
  };
  const std::vector<Boundary> boundaries{{"square", unit_square_charts(16), true},
                                         {"cube-face", {cube_face_chart(8)}, true},
                                         {"curved3d", {curved_chart(3, 8)}, false}};
  for (const auto& b : boundaries) {
    std::vector<ChartGeometry<Jet>> geos;
    for (const auto& ch : b.charts) geos.emplace_back(ch, 4);
    for (const auto& [fname, p] : functions(b.charts.front().dim)) {
      std::vector<std::vector<BoundaryField<Jet>>> td;
      for (const auto& g : geos) td.push_back(jet_traces(p, g, 3));
      const auto r = check_compatibility(td, geos, 3, tol);
      c.require(r.accept, b.name + " " + fname + " accepted");
      for (double d : r.symmetry_defect) sym_worst = std::max(sym_worst, d);
      for (std::size_t k = 0; k < geos.size(); ++k) s_identities(c, geos[k], td[k], b.axis_aligned, snn_worst, lemma_worst);
    }
  }
  c.note("sym_defect", sci(sym_worst));
  c.note("snn_err", sci(snn_worst));
  c.note("lemma_err", sci(lemma_worst));

  // +1 on phi_2 over a patch of the bottom edge that contains the corner (0,0).
  {
    const auto charts = unit_square_charts(16);
    std::vector<ChartGeometry<Jet>> geos;
    std::vector<std::vector<BoundaryField<Jet>>> td;
    for (const auto& ch : charts) {
      geos.emplace_back(ch, 4);
      td.push_back(jet_traces(functions(2)[0].second, geos.back(), 3));
    }
    for (std::size_t i = 0; i <= 4; ++i) td[0][2].at(i, 0) += 1.0;
    const auto r = check_compatibility(td, geos, 3, tol);
    const double defect = std::max(*std::max_element(r.symmetry_defect.begin(), r.symmetry_defect.end()),
                                   *std::max_element(r.overlap_defect.begin(), r.overlap_defect.end()));
    c.require(!r.accept && defect >= 0.1, "perturbed phi2 rejected");
    c.note("perturbed_defect", fixed(defect));
  }

  // Chain against build_s / build_S, and S_3 at m = 4.
  {
    const Poly x3y = functions(2)[1].second;
    for (const auto& ch : {unit_square_charts(8)[1], curved_chart(2, 8), curved_chart(3, 5)}) {
      const ChartGeometry<Jet> geo(ch, 4);
      const auto p = oracle::random_poly(ch.dim, 3, 7);
      const auto t = jet_traces(p, geo, 3);
      const auto s = build_s(t[0], t[1], geo);
      c.require(same_bits(build_S_chain(t, geo, 2)[1], s), "chain m=2 bitwise");
      c.require(same_bits(build_S_chain(t, geo, 3)[2], build_S(s, t[2], geo)), "chain m=3 bitwise");
    }
    double s3_worst = 0.0;
    for (const auto& ch : unit_square_charts(8)) {
      const ChartGeometry<Jet> geo(ch, 5);
      const auto S3 = values_of(build_S_chain(jet_traces(x3y, geo, 4), geo, 4)[3]);
      double sym = 0.0;
      for (std::size_t node = 0; node < S3.nodes; ++node)
        sym = std::max(sym, detail::swap_defect(std::span(S3.values).subspan(node * 8, 8), 2, 3));
      s3_worst = std::max(s3_worst, sym / std::max(max_abs(S3), 1e-300));
      // Compare against the exact third-derivative tensor as well.
      for (std::size_t node = 0; node < S3.nodes; ++node) {
        const auto ref = oracle::derivative_tensor(x3y, 3, ch.point(node));
        for (std::size_t e = 0; e < ref.size(); ++e)
          c.require(std::abs(S3.at(node, e) - ref[e]) <= 1e-12 * max_abs(S3), "S3 equals the third derivative");
      }
    }
    c.require(s3_worst <= 1e-8, "S3 symmetric");
    c.note("S3_sym", sci(s3_worst));
  }
}

// ---- 6 ----

void oracle_agreement(Check& c) {
  for (int dim : {2, 3, 4, 5}) {
    const int degree = dim <= 3 ? 4 : 3;
    const auto s = oracle::random_poly_field(PolyField::Kind::scalar, dim, degree, 100 + dim);
    const auto a = oracle::random_poly_field(PolyField::Kind::antisym, dim, degree, 200 + dim);
    const auto v = oracle::random_poly_field(PolyField::Kind::vector, dim, degree, 300 + dim);
    const std::string d = " N=" + std::to_string(dim);
    c.require(oracle::poly_curl(oracle::poly_grad(s)).is_zero(), "symbolic curl grad" + d);
    c.require(oracle::poly_div(oracle::poly_scurl(a)).is_zero(), "symbolic div scurl" + d);
    c.require(oracle::poly_laplacian(v) == oracle::poly_grad(oracle::poly_div(v)) - oracle::poly_scurl(oracle::poly_curl(v)),
              "symbolic laplacian split" + d);
  }
  double exact_worst = 0.0, order_min = 1e300;
  for (int dim : {2, 3}) {
    const auto g = GridSpec::cube(dim, 7, -1.0, 1.0);
    const auto s = oracle::random_poly_field(PolyField::Kind::scalar, dim, 2, 21);
    const auto v = oracle::random_poly_field(PolyField::Kind::vector, dim, 2, 22);
    const auto a = oracle::random_poly_field(PolyField::Kind::antisym, dim, 2, 23);
    const auto sf = oracle::sample_poly(g, s.comps[0]);
    const auto vf = oracle::sample_vector(g, v);
    const auto af = oracle::sample_antisym(g, a);
    auto rel = [](double err, double scale) { return err / std::max(scale, 1.0); };
    const auto gx = oracle::sample_vector(g, oracle::poly_grad(s));
    const auto dx = oracle::sample_poly(g, oracle::poly_div(v).comps[0]);
    const auto cx = oracle::sample_antisym(g, oracle::poly_curl(v));
    const auto sx = oracle::sample_vector(g, oracle::poly_scurl(a));
    const auto lx = oracle::sample_poly(g, oracle::poly_laplacian(s).comps[0]);
    for (double e : {rel(max_abs(grad(sf, kEdges) - gx), max_abs(gx)), rel(max_abs(div(vf, kEdges) - dx), max_abs(dx)),
                     rel(max_abs(curl(vf, kEdges) - cx), max_abs(cx)), rel(max_abs(scurl(af, kEdges) - sx), max_abs(sx)),
                     rel(max_abs(laplacian_wide(sf, kEdges) - lx), max_abs(lx)),
                     rel(max_abs(laplacian_compact(sf, kEdges) - lx), max_abs(lx))})
      exact_worst = std::max(exact_worst, e);

    for (int degree : {3, 4, 5}) {
      const auto sp = oracle::random_poly_field(PolyField::Kind::scalar, dim, degree, 31 + degree);
      const auto vp = oracle::random_poly_field(PolyField::Kind::vector, dim, degree, 41 + degree);
      const auto ap = oracle::random_poly_field(PolyField::Kind::antisym, dim, degree, 51 + degree);
      const auto gs = oracle::poly_grad(sp);
      const auto dv = oracle::poly_div(vp);
      const auto cv = oracle::poly_curl(vp);
      const auto sa = oracle::poly_scurl(ap);
      Series eg, ed, ec, es;
      const std::vector<std::size_t> ladder = dim == 2 ? std::vector<std::size_t>{8, 16, 32} : std::vector<std::size_t>{8, 12, 24};
      for (std::size_t cells : ladder) {
        const auto gg = GridSpec::cube(dim, cells + 1, -1.0, 1.0);
        const auto f = oracle::sample_poly(gg, sp.comps[0]);
        const auto vv = oracle::sample_vector(gg, vp);
        const double h = gg.h(0);
        eg.emplace_back(h, l2(grad(f, kEdges) - oracle::sample_vector(gg, gs)));
        ed.emplace_back(h, l2(div(vv, kEdges) - oracle::sample_poly(gg, dv.comps[0])));
        ec.emplace_back(h, l2(curl(vv, kEdges) - oracle::sample_antisym(gg, cv)));
        es.emplace_back(h, l2(scurl(oracle::sample_antisym(gg, ap), kEdges) - oracle::sample_vector(gg, sa)));
      }
      for (const auto* ser : {&eg, &ed, &ec, &es}) order_min = std::min(order_min, oracle::observed_order(*ser));
    }
  }
  c.require(exact_worst <= 1e-12, "FD exact on degree <= 2");
  c.require(order_min >= 1.8, "FD order on degree 3-5");
  c.note("exact_err", sci(exact_worst));
  c.note("min_order", fixed(order_min));
}

// ---- 7 ----

void cli_contract(Check& c, const std::string& cli, const std::string& script) {
  if (cli.empty() || script.empty()) {
    c.require(false, "CLI or script path not configured");
    return;
  }
  const std::string cmd = "bash '" + script + "' '" + cli + "' > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  c.require(rc == 0, "end-to-end script");
  c.note("script_exit", rc);
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<void(Check&)> run;
};

}  // namespace

int main(int argc, char** argv) {
#ifdef VECPOT_CLI_PATH
  std::string cli = VECPOT_CLI_PATH, script = VECPOT_E2E_SCRIPT;
#else
  std::string cli, script;
#endif
  if (argc >= 3) {
    cli = argv[1];
    script = argv[2];
  }
  const std::vector<Criterion> criteria{
      {1, "identity suite N=2..5", 60, identities},
      {2, "Newton potential", 120, newton},
      {3, "vector potential pipeline", 300, pipeline},
      {4, "zero-trace decomposition", 180, decomposition},
      {5, "trace compatibility", 60, traces},
      {6, "oracle agreement", 60, oracle_agreement},
      {7, "CLI contract", 600, [&](Check& c) { cli_contract(c, cli, script); }},
  };
  bool all = true;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs <= cr.budget_s, "runtime budget");
    all = all && c.pass;
    std::printf("criterion %d: %s  %s [%s] (%.1fs)\n", cr.id, c.pass ? "PASS" : "FAIL", cr.title, c.notes.str().c_str(), secs);
    for (const auto& f : c.failed) std::printf("    failed: %s\n", f.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
