// vecpot: command-line driver for the identity suite, the vector potential
// pipeline, the zero-trace decomposition, the trace checker and the
// convergence studies.
//
// Exit codes: 0 success/accept, 1 mathematical failure/reject, 2 usage, 3 I/O.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vecpot/boundary_io.hpp"
#include "vecpot/charts.hpp"
#include "vecpot/convergence.hpp"
#include "vecpot/decomposition.hpp"
#include "vecpot/field_io.hpp"
#include "vecpot/fields.hpp"
#include "vecpot/identities.hpp"
#include "vecpot/oracle/tensor.hpp"
#include "vecpot/trace.hpp"
#include "vecpot/vector_potential.hpp"

using namespace vecpot;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFail = 1, kUsage = 2, kIo = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json grid_json(const GridSpec& g) {
  return {{"shape", g.shape()}, {"spacing", g.spacing()}, {"origin", g.origin()}};
}

json warnings_json(const Warnings& w) { return w.messages; }

void emit(const json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw IoError("write failed for '" + path + "'");
}

VectorField read_vector(const std::string& path) {
  AnyField f;
  try {
    f = read_field(path);
  } catch (const FieldIoError& e) {
    throw IoError(e.what());
  }
  if (auto* v = std::get_if<VectorField>(&f)) return std::move(*v);
  throw IoError("'" + path + "' holds a " + std::string(detail::kind_name(f)) + " field; a vector field is needed");
}

void write_any(const AnyField& f, const std::string& path) {
  try {
    write_field(f, path);
  } catch (const FieldIoError& e) {
    throw IoError(e.what());
  }
}

PotentialPath parse_method(const std::string& m) {
  if (m == "fd") return PotentialPath::free_space;
  if (m == "spectral") return PotentialPath::spectral;
  throw UsageError("--method must be fd or spectral");
}

// "lo0,lo1:hi0,hi1;..." -> node boxes, bounds inclusive.
std::vector<IndexBox> parse_region(const std::string& text) {
  std::vector<IndexBox> boxes;
  if (text.empty()) return boxes;
  auto numbers = [](const std::string& s) {
    std::vector<std::size_t> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      long long x = -1;
      try {
        x = std::stoll(item, &used);
      } catch (...) {
      }
      if (x < 0 || used != item.size()) throw UsageError("bad index '" + item + "' in --region");
      v.push_back(std::size_t(x));
    }
    return v;
  };
  std::stringstream ss(text);
  std::string box;
  while (std::getline(ss, box, ';')) {
    const auto colon = box.find(':');
    if (colon == std::string::npos) throw UsageError("--region boxes are lo:hi");
    IndexBox b{numbers(box.substr(0, colon)), numbers(box.substr(colon + 1))};
    if (b.lo.size() != b.hi.size()) throw UsageError("--region box corners differ in length");
    boxes.push_back(std::move(b));
  }
  return boxes;
}

// Fills options that were not given on the command line from a JSON object.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open config '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(is);
  } catch (const json::exception& e) {
    throw IoError(std::string("config is not JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError("config key '" + key + "' is not an option of " + sub->get_name());
    }
    if (key == "config" || opt->count() > 0) continue;
    std::string s;
    if (value.is_string()) s = value.get<std::string>();
    else if (value.is_array()) {
      for (const auto& x : value) s += (s.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
    } else s = value.dump();
    opt->add_result(s);
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }
}

// ---- commands ----

struct IdentityArgs {
  int dim = 3;
  std::size_t grid = 16;
  std::uint64_t seed = 7;
  std::string mode = "periodic";
  double tol = 1e-12;
  bool sabotage = false;
  std::string report;
};

int cmd_verify_identities(const IdentityArgs& a) {
  if (a.dim < 2 || a.dim > 5) throw UsageError("--dim must be in [2, 5]");
  if (a.grid < 8) throw UsageError("--grid must be at least 8");
  if (a.mode != "periodic" && a.mode != "edges") throw UsageError("--mode must be periodic or edges");
  if (!(a.tol > 0)) throw UsageError("--tol must be positive");
  const StencilMode mode = a.mode == "periodic" ? StencilMode::periodic : StencilMode::one_sided_edges;
  ScurlFn fn;
  // Test hook: drop the factor 2 of scurl so the adjoint and Laplacian identities must fail.
  if (a.sabotage) fn = [](const AntisymField& A, StencilMode m) { return 0.5 * scurl(A, m); };
  const auto rep = run_identity_suite(a.dim, a.grid, a.seed, mode, a.tol, fn);
  json res = json::array();
  for (const auto& r : rep.results) res.push_back({{"name", r.name}, {"defect", number(r.defect)}, {"pass", r.pass}});
  emit({{"command", "verify-identities"},
        {"dim", a.dim},
        {"grid", a.grid},
        {"seed", a.seed},
        {"mode", a.mode},
        {"tol", a.tol},
        {"results", res},
        {"pass", rep.all_pass()}},
       a.report);
  return rep.all_pass() ? kOk : kFail;
}

struct PotentialArgs {
  std::string input, output, method = "fd", report;
  double curl_tol = 1e-12;
};

int cmd_potential(const PotentialArgs& a) {
  PipelineOptions opt;
  opt.path = parse_method(a.method);
  if (!(a.curl_tol > 0)) throw UsageError("--curl-tol must be positive");
  const auto v = read_vector(a.input);
  const auto d = construct(v, opt);
  write_any(d.w, a.output);
  const bool pass = d.curl_defect_rel <= a.curl_tol;
  emit({{"command", "potential"},
        {"method", a.method},
        {"grid", grid_json(v.grid())},
        {"curl_defect_rel", number(d.curl_defect_rel)},
        {"div_w_rel", number(d.div_w_rel)},
        {"harmonic_residual_rel", number(d.harmonic_residual_rel)},
        {"norm_ratio", number(d.norm_ratio)},
        {"removed_mean", d.removed_mean},
        {"warnings", warnings_json(d.warnings)},
        {"curl_tol", a.curl_tol},
        {"pass", pass}},
       a.report);
  return pass ? kOk : kFail;
}

struct DecomposeArgs {
  std::string input, out_w, out_eta, method = "fd", region, report;
  double recon_tol = 0.05, leak_tol = 0.05, trace_tol = 1e-10;
};

int cmd_decompose(const DecomposeArgs& a) {
  DecompositionOptions opt;
  opt.pipeline.path = parse_method(a.method);
  opt.trace_tol = a.trace_tol;
  if (!(a.recon_tol > 0) || !(a.leak_tol > 0) || !(a.trace_tol > 0)) throw UsageError("tolerances must be positive");
  const Region region(parse_region(a.region));
  const auto v = read_vector(a.input);
  try {
    region.validate(v.grid());
  } catch (const DecompositionError& e) {
    throw UsageError(std::string("--region: ") + e.what());
  }
  json rep{{"command", "decompose"}, {"method", a.method}, {"grid", grid_json(v.grid())},
           {"recon_tol", a.recon_tol}, {"leak_tol", a.leak_tol}, {"trace_tol", a.trace_tol}};
  DecompositionResult r;
  try {
    r = decompose_zero_trace(v, region, opt);
  } catch (const DecompositionError& e) {
    rep["pass"] = false;
    rep["reason"] = e.what();
    emit(rep, a.report);
    return kFail;
  }
  write_any(r.w, a.out_w);
  write_any(r.eta, a.out_eta);
  const bool pass = r.recon_rel <= a.recon_tol && r.boundary_leak <= a.leak_tol;
  rep["recon_rel"] = number(r.recon_rel);
  rep["div_w_rel"] = number(r.div_w_rel);
  rep["boundary_leak"] = number(r.boundary_leak);
  rep["recovery_residual"] = number(r.recovery_residual);
  rep["curl_defect_rel"] = number(r.curl_defect_rel);
  rep["ambient"] = grid_json(r.ambient);
  rep["warnings"] = warnings_json(r.warnings);
  rep["pass"] = pass;
  if (!pass) rep["reason"] = "diagnostics above tolerance";
  emit(rep, a.report);
  return pass ? kOk : kFail;
}

struct TraceArgs {
  int order = 3;
  std::string boundary, data, report;
  double tol = 1e-8, p = 2.0;
};

int cmd_trace_check(const TraceArgs& a) {
  if (a.order < 1 || a.order > kMaxTraceOrder) throw UsageError("--order must be in [1, 4]; higher orders are unsupported");
  if (!(a.tol > 0)) throw UsageError("--tol must be positive");
  if (!(a.p >= 1)) throw UsageError("--p must be at least 1");
  std::vector<BoundaryChart> charts;
  std::vector<std::vector<BoundaryField<double>>> traces;
  try {
    charts = read_boundary(a.boundary);
    traces = read_traces(a.data, charts, a.order);
  } catch (const BoundaryIoError& e) {
    throw IoError(e.what());
  }
  std::vector<ChartGeometry<double>> geos;
  for (const auto& c : charts) geos.emplace_back(c);
  const auto r = check_compatibility(traces, geos, a.order, a.tol, a.p);
  json cj = json::array();
  for (const auto& d : r.charts) {
    json w = json::array();
    for (double x : d.w1p) w.push_back(number(x));
    cj.push_back({{"lipschitz", number(d.lipschitz)}, {"w1p_norms", w}, {"slobodeckij", number(d.slobodeckij)}});
  }
  json sym = json::array(), ovl = json::array();
  for (double x : r.symmetry_defect) sym.push_back(number(x));
  for (double x : r.overlap_defect) ovl.push_back(number(x));
  emit({{"command", "trace-check"},
        {"order", r.m},
        {"tol", r.tol},
        {"p", r.p},
        {"symmetry_defect", sym},
        {"overlap_defect", ovl},
        {"charts", cj},
        {"verdict", r.accept ? "accept" : "reject"}},
       a.report);
  return r.accept ? kOk : kFail;
}

struct ConvergenceArgs {
  std::string name, report;
  std::vector<std::size_t> grids;
  double min_slope = 1.8;
  bool list = false;
};

int cmd_convergence(const ConvergenceArgs& a) {
  if (a.list) {
    json cases = json::array();
    for (const auto& c : convergence_cases())
      cases.push_back({{"name", c.name}, {"description", c.description}, {"default_grids", c.default_grids}, {"series", c.series}});
    emit({{"command", "convergence"}, {"cases", cases}}, a.report);
    return kOk;
  }
  if (a.name.empty()) throw UsageError("--case is required");
  ConvergenceResult r;
  try {
    r = run_convergence(a.name, a.grids, a.min_slope);
  } catch (const ConvergenceUsageError& e) {
    throw UsageError(e.what());
  }
  json series = json::object();
  for (const auto& s : r.series) {
    json e = json::array();
    for (double x : s.errors) e.push_back(number(x));
    series[s.name] = {{"errors", e}, {"slope", number(s.slope)}};
  }
  emit({{"command", "convergence"},
        {"case", r.name},
        {"grids", r.grids},
        {"spacing", r.spacing},
        {"series", series},
        {"min_slope", r.min_slope},
        {"pass", r.pass}},
       a.report);
  return r.pass ? kOk : kFail;
}

// ---- input generators ----

struct SampleFieldArgs {
  std::string kind = "rotational", output;
  int dim = 2;
  std::size_t cells = 32;
  double radius = 0.75;
};

int cmd_sample_field(const SampleFieldArgs& a) {
  if (a.dim < 2 || a.dim > 5) throw UsageError("--dim must be in [2, 5]");
  if (a.cells < 4) throw UsageError("--cells must be at least 4");
  if (!(a.radius > 0 && a.radius < 1)) throw UsageError("--radius must be in (0, 1)");
  const auto g = box_grid(a.dim, a.cells);
  VectorField v = VectorField::zeros(g);
  if (a.kind == "rotational") v = rotational_bump(g, a.radius);
  else if (a.kind == "discrete-rotational") v = discrete_rotational_bump(g, a.radius);
  else if (a.kind == "gradient") v = gradient_bump(g, a.radius);
  else if (a.kind == "mixed") v = rotational_bump(g, a.radius) + gradient_bump(g, 0.8 * a.radius);
  else if (a.kind == "constant") {
    std::vector<ScalarField> c(a.dim, ScalarField(g));
    c[0] = sample(g, [](std::span<const double>) { return 1.0; });
    v = VectorField(std::move(c));
  } else if (a.kind != "zero")
    throw UsageError("--kind must be rotational, discrete-rotational, gradient, mixed, constant or zero");
  write_any(v, a.output);
  return kOk;
}

struct SampleTraceArgs {
  std::string shape = "square", function = "x2y", boundary, data;
  std::size_t cells = 16;
  int order = 3;
  std::uint64_t seed = 1;
  bool perturb = false;
};

int cmd_sample_traces(const SampleTraceArgs& a) {
  if (a.order < 1 || a.order > kMaxTraceOrder) throw UsageError("--order must be in [1, 4]");
  if (a.cells < 2) throw UsageError("--cells must be at least 2");
  std::vector<BoundaryChart> charts;
  if (a.shape == "square") charts = unit_square_charts(a.cells);
  else if (a.shape == "cube-face") charts = {cube_face_chart(a.cells)};
  else if (a.shape == "curved2d") charts = {curved_chart(2, a.cells)};
  else if (a.shape == "curved3d") charts = {curved_chart(3, a.cells)};
  else throw UsageError("--shape must be square, cube-face, curved2d or curved3d");
  const int dim = charts.front().dim;
  oracle::Poly p(dim);
  auto mono = [dim](int ex, int ey) {
    std::vector<int> e(dim, 0);
    e[0] = ex;
    e[1] = ey;
    return oracle::Poly::monomial(dim, e);
  };
  if (a.function == "x2y") p = mono(2, 1);
  else if (a.function == "x3y") p = mono(3, 1);
  else if (a.function == "xy+y3") p = mono(1, 1) + mono(0, 3);
  else if (a.function == "random") p = oracle::random_poly(dim, 3, a.seed);
  else throw UsageError("--function must be x2y, x3y, xy+y3 or random");
  std::vector<std::vector<BoundaryField<double>>> traces;
  for (const auto& c : charts) traces.push_back(sample_traces(oracle::jet_function(p), c, a.order));
  if (a.perturb) {
    if (a.order < 3) throw UsageError("--perturb changes phi_2 and needs --order >= 3");
    // +1 on the first quarter of chart 0, which includes its first corner node.
    auto& f = traces[0][2];
    const auto& pg = charts[0].param_grid();
    std::vector<std::size_t> idx(pg.dim());
    for (std::size_t i = 0; i < f.nodes; ++i) {
      pg.unflatten(i, idx);
      bool in = true;
      for (int k = 0; k < pg.dim(); ++k) in = in && idx[k] * 4 <= pg.extent(k) - 1;
      if (in) f.at(i, 0) += 1.0;
    }
  }
  std::ofstream os(a.boundary, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + a.boundary + "' for writing");
  os << boundary_json(charts);
  if (!os) throw IoError("write failed for '" + a.boundary + "'");
  os.close();
  try {
    write_traces(a.data, charts, traces);
  } catch (const BoundaryIoError& e) {
    throw IoError(e.what());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vector potentials, zero-trace decompositions and trace compatibility on structured grids"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all commands");
  std::string config;

  IdentityArgs ia;
  auto* vi = app.add_subcommand("verify-identities", "Check curl grad = 0, div scurl = 0, adjointness and the Laplacian split");
  vi->add_option("--dim", ia.dim, "Dimension N in [2, 5]")->capture_default_str();
  vi->add_option("--grid", ia.grid, "Nodes per axis (>= 8)")->capture_default_str();
  vi->add_option("--seed", ia.seed, "Random field seed")->capture_default_str();
  vi->add_option("--mode", ia.mode, "periodic | edges")->capture_default_str();
  vi->add_option("--tol", ia.tol, "Relative tolerance")->capture_default_str();
  vi->add_option("--report", ia.report, "Report path (default stdout)");
  vi->add_flag("--sabotage", ia.sabotage)->group("");

  PotentialArgs pa;
  auto* po = app.add_subcommand("potential", "Construct w with curl w = curl v and div w = 0");
  po->add_option("--input", pa.input, "Vector field file")->required();
  po->add_option("--output", pa.output, "Output field file for w")->required();
  po->add_option("--method", pa.method, "fd | spectral")->capture_default_str();
  po->add_option("--curl-tol", pa.curl_tol, "Pass threshold for curl_defect_rel")->capture_default_str();
  po->add_option("--report", pa.report, "Report path (default stdout)");

  DecomposeArgs da;
  auto* de = app.add_subcommand("decompose", "Zero-trace decomposition v = w + grad eta");
  de->add_option("--input", da.input, "Vector field file")->required();
  de->add_option("--out-w", da.out_w, "Output field file for w")->required();
  de->add_option("--out-eta", da.out_eta, "Output field file for eta")->required();
  de->add_option("--method", da.method, "fd | spectral")->capture_default_str();
  de->add_option("--region", da.region, "Union of node boxes lo0,lo1:hi0,hi1;... (default whole grid)");
  de->add_option("--recon-tol", da.recon_tol, "Pass threshold for recon_rel")->capture_default_str();
  de->add_option("--leak-tol", da.leak_tol, "Pass threshold for boundary_leak")->capture_default_str();
  de->add_option("--trace-tol", da.trace_tol, "Relative boundary trace accepted as zero")->capture_default_str();
  de->add_option("--report", da.report, "Report path (default stdout)");

  TraceArgs ta;
  auto* tc = app.add_subcommand("trace-check", "Build S_0..S_{m-1} from boundary traces and check compatibility");
  tc->add_option("--order", ta.order, "m in [1, 4]")->capture_default_str();
  tc->add_option("--boundary", ta.boundary, "Boundary JSON")->required();
  tc->add_option("--data", ta.data, "Trace JSON")->required();
  tc->add_option("--tol", ta.tol, "Symmetry and overlap tolerance")->capture_default_str();
  tc->add_option("--p", ta.p, "Exponent of the diagnostic norms")->capture_default_str();
  tc->add_option("--report", ta.report, "Report path (default stdout)");

  ConvergenceArgs ca;
  auto* cv = app.add_subcommand("convergence", "Run a named refinement study");
  cv->add_option("--case", ca.name, "Case name (see --list)");
  cv->add_option("--grids", ca.grids, "Cells per axis, e.g. 16,32,64")->delimiter(',');
  cv->add_option("--min-slope", ca.min_slope, "Pass threshold for every observed order")->capture_default_str();
  cv->add_flag("--list", ca.list, "List the cases");
  cv->add_option("--report", ca.report, "Report path (default stdout)");

  SampleFieldArgs sf;
  auto* sfc = app.add_subcommand("sample-field", "Write an analytic test field on [-1,1]^N");
  sfc->add_option("--kind", sf.kind, "rotational | discrete-rotational | gradient | mixed | constant | zero")->capture_default_str();
  sfc->add_option("--dim", sf.dim, "Dimension")->capture_default_str();
  sfc->add_option("--cells", sf.cells, "Cells per axis")->capture_default_str();
  sfc->add_option("--radius", sf.radius, "Bump radius")->capture_default_str();
  sfc->add_option("--output", sf.output, "Output field file")->required();

  SampleTraceArgs st;
  auto* stc = app.add_subcommand("sample-traces", "Write a boundary and the traces of a polynomial");
  stc->add_option("--shape", st.shape, "square | cube-face | curved2d | curved3d")->capture_default_str();
  stc->add_option("--function", st.function, "x2y | x3y | xy+y3 | random")->capture_default_str();
  stc->add_option("--cells", st.cells, "Cells per chart axis")->capture_default_str();
  stc->add_option("--order", st.order, "Number of traces m")->capture_default_str();
  stc->add_option("--seed", st.seed, "Seed of the random polynomial")->capture_default_str();
  stc->add_flag("--perturb", st.perturb, "Add 1 to phi_2 on a corner patch of the first chart");
  stc->add_option("--boundary", st.boundary, "Output boundary JSON")->required();
  stc->add_option("--data", st.data, "Output trace JSON")->required();

  for (auto* sub : {vi, po, de, tc, cv, sfc, stc})
    sub->add_option("--config", config, "JSON file of option values; flags override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config(sub, config);
    if (sub == vi) return cmd_verify_identities(ia);
    if (sub == po) return cmd_potential(pa);
    if (sub == de) return cmd_decompose(da);
    if (sub == tc) return cmd_trace_check(ta);
    if (sub == cv) return cmd_convergence(ca);
    if (sub == sfc) return cmd_sample_field(sf);
    if (sub == stc) return cmd_sample_traces(st);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
