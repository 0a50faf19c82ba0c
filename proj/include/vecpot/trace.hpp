#pragma once

// Boundary charts on Lipschitz graphs, the trace operators, and the
// compatibility tensors s, S and S_q of the higher-order trace theorem.
//
// Everything chart-local is templated on the scalar type T:
//   double  tangential derivatives by finite differences on the chart grid;
//   Jet     exact derivatives of an analytic graph and analytic volume data.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "vecpot/diff_ops.hpp"
#include "vecpot/grid.hpp"
#include "vecpot/jet.hpp"

namespace vecpot {

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor order cap: S_q is stored with N^q entries per node.
inline constexpr int kMaxTraceOrder = 4;

/// phi(y') for an analytic chart, or phi(x) for analytic volume data.
using AnalyticFn = std::function<Jet(std::span<const Jet>)>;

/// Boundary piece x_a = phi(y'), where a = normal_axis and y' runs over the
/// other axes in increasing order. orientation +1 puts Omega on the side
/// x_a > phi, -1 on the side x_a < phi.
struct BoundaryChart {
  int dim = 0;
  ScalarField graph;  // on the (dim-1)-dimensional parameter grid
  int orientation = 1;
  int normal_axis = -1;  // -1 means dim-1
  AnalyticFn analytic;   // optional exact graph, consistent with `graph`

  BoundaryChart() = default;
  BoundaryChart(int dim, ScalarField graph, int orientation = 1, int normal_axis = -1)
      : dim(dim), graph(std::move(graph)), orientation(orientation), normal_axis(normal_axis) {
    validate();
  }

  /// Samples `fn` on the parameter grid and keeps it for exact derivatives.
  static BoundaryChart from_function(int dim, const GridSpec& param, AnalyticFn fn, int orientation = 1,
                                     int normal_axis = -1) {
    const auto space = JetSpace::get(1, 0);
    std::vector<Jet> y(param.dim(), Jet(space));
    ScalarField g = sample(param, [&](std::span<const double> p) {
      for (std::size_t k = 0; k < p.size(); ++k) y[k] = Jet(space, p[k]);
      return fn(y).value();
    });
    BoundaryChart c(dim, std::move(g), orientation, normal_axis);
    c.analytic = std::move(fn);
    return c;
  }

  const GridSpec& param_grid() const { return graph.grid(); }
  std::size_t nodes() const { return graph.size(); }
  int axis() const { return normal_axis < 0 ? dim - 1 : normal_axis; }
  /// Ambient axis of parameter axis k.
  int ambient_axis(int k) const { return k < axis() ? k : k + 1; }

  void validate() const {
    if (dim < 2 || dim > 3) throw TraceError("chart dimension must be 2 or 3");
    if (param_grid().dim() != dim - 1) throw TraceError("parameter grid must have dim-1 axes");
    if (orientation != 1 && orientation != -1) throw TraceError("orientation must be +1 or -1");
    if (normal_axis < -1 || normal_axis >= dim) throw TraceError("normal axis out of range");
  }

  /// Ambient position of a parameter node.
  std::vector<double> point(std::size_t node) const {
    const auto& g = param_grid();
    std::vector<std::size_t> idx(g.dim());
    g.unflatten(node, idx);
    std::vector<double> x(dim);
    for (int k = 0; k < g.dim(); ++k) x[ambient_axis(k)] = g.coord(k, idx[k]);
    x[axis()] = graph[node];
    return x;
  }

  /// max |grad phi| by finite differences: the discrete Lipschitz ratio.
  double lipschitz_ratio() const {
    const auto& g = param_grid();
    std::vector<double> sq(nodes(), 0.0);
    for (int k = 0; k < g.dim(); ++k) {
      const auto d = difference(graph.values(), g, k, StencilMode::one_sided_edges);
      for (std::size_t i = 0; i < sq.size(); ++i) sq[i] += d[i] * d[i];
    }
    return std::sqrt(*std::max_element(sq.begin(), sq.end()));
  }
};

/// Orthonormal tangents and outward unit normal; det(tau_1..tau_{N-1}, n) = +1.
template <class T>
struct Frame {
  std::vector<std::vector<T>> tangents;
  std::vector<T> normal;
};

namespace detail {

inline double sqrt(double x) { return std::sqrt(x); }

template <class T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  T s = a[0] * b[0];
  for (std::size_t k = 1; k < a.size(); ++k) s = s + a[k] * b[k];
  return s;
}

inline double det(const std::vector<std::vector<double>>& cols) {
  if (cols.size() == 2) return cols[0][0] * cols[1][1] - cols[0][1] * cols[1][0];
  const auto& a = cols[0];
  const auto& b = cols[1];
  const auto& c = cols[2];
  return a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1]) + c[0] * (a[1] * b[2] - a[2] * b[1]);
}

// Frame from the graph slopes dphi. coef[i][k] expresses tau_i = sum_k coef[i][k] t_k
// in the raw tangents t_k = e_{amb(k)} + dphi_k e_a.
template <class T>
Frame<T> make_frame(const BoundaryChart& chart, const std::vector<T>& dphi, std::vector<std::vector<T>>& coef) {
  const int n = chart.dim, d = n - 1, a = chart.axis();
  const T zero = constant_like(dphi[0], 0.0), one = constant_like(dphi[0], 1.0);
  std::vector<std::vector<T>> raw(d, std::vector<T>(n, zero));
  for (int k = 0; k < d; ++k) {
    raw[k][chart.ambient_axis(k)] = one;
    raw[k][a] = dphi[k];
  }
  Frame<T> f;
  coef.assign(d, std::vector<T>(d, zero));
  for (int i = 0; i < d; ++i) {
    std::vector<T> u = raw[i];
    std::vector<T> c(d, zero);
    c[i] = one;
    for (int j = 0; j < i; ++j) {
      const T p = dot(raw[i], f.tangents[j]);
      for (int e = 0; e < n; ++e) u[e] = u[e] - p * f.tangents[j][e];
      for (int k = 0; k < d; ++k) c[k] = c[k] - p * coef[j][k];
    }
    const double pivot = std::sqrt(value_of(dot(u, u)));
    if (!(pivot >= 1e-12)) throw TraceError("degenerate chart frame");
    const T inv = one / sqrt(dot(u, u));
    for (auto& x : u) x = x * inv;
    for (auto& x : c) x = x * inv;
    f.tangents.push_back(std::move(u));
    coef[i] = std::move(c);
  }
  T g2 = one;
  for (int k = 0; k < d; ++k) g2 = g2 + dphi[k] * dphi[k];
  const T scale = double(chart.orientation) / sqrt(g2);
  f.normal.assign(n, zero);
  for (int k = 0; k < d; ++k) f.normal[chart.ambient_axis(k)] = dphi[k] * scale;
  f.normal[a] = -1.0 * scale;

  std::vector<std::vector<double>> cols;
  for (const auto& t : f.tangents) {
    cols.emplace_back();
    for (const auto& x : t) cols.back().push_back(value_of(x));
  }
  cols.emplace_back();
  for (const auto& x : f.normal) cols.back().push_back(value_of(x));
  if (det(cols) < 0.0) {
    for (auto& x : f.tangents[d - 1]) x = -1.0 * x;
    for (auto& x : coef[d - 1]) x = -1.0 * x;
  }
  return f;
}

}  // namespace detail

/// Per-node geometry of one chart. T = double differentiates on the chart grid
/// with one-sided second-order edge rows; T = Jet differentiates the analytic
/// graph exactly. Jet variables are y'_0..y'_{N-2} and t, the normal offset
/// used by the trace operators.
template <class T>
class ChartGeometry {
 public:
  explicit ChartGeometry(BoundaryChart chart, int degree = 4) : chart_(std::move(chart)) {
    chart_.validate();
    const std::size_t nn = chart_.nodes();
    const int d = chart_.dim - 1;
    const auto& g = chart_.param_grid();
    points_.resize(nn);
    frames_.resize(nn);
    coef_.resize(nn);
    area_.resize(nn);
    std::vector<std::size_t> idx(d);
    if constexpr (std::is_same_v<T, double>) {
      std::vector<std::vector<double>> slopes;
      for (int k = 0; k < d; ++k) slopes.push_back(difference(chart_.graph.values(), g, k, StencilMode::one_sided_edges));
      for (std::size_t i = 0; i < nn; ++i) {
        std::vector<double> dphi(d);
        for (int k = 0; k < d; ++k) dphi[k] = slopes[k][i];
        points_[i] = chart_.point(i);
        finish_node(i, dphi);
      }
    } else {
      if (!chart_.analytic) throw TraceError("exact chart geometry needs an analytic graph");
      space_ = JetSpace::get(chart_.dim, degree);
      for (std::size_t i = 0; i < nn; ++i) {
        g.unflatten(i, idx);
        std::vector<Jet> y;
        for (int k = 0; k < d; ++k) y.push_back(Jet::variable(space_, k, g.coord(k, idx[k])));
        const Jet phi = chart_.analytic(y);
        std::vector<Jet> dphi;
        for (int k = 0; k < d; ++k) dphi.push_back(phi.derivative(k));
        points_[i].assign(chart_.dim, Jet(space_));
        for (int k = 0; k < d; ++k) points_[i][chart_.ambient_axis(k)] = y[k];
        points_[i][chart_.axis()] = phi;
        finish_node(i, dphi);
      }
    }
  }

  const BoundaryChart& chart() const { return chart_; }
  int dim() const { return chart_.dim; }
  std::size_t nodes() const { return chart_.nodes(); }
  const std::vector<T>& point(std::size_t i) const { return points_[i]; }
  const Frame<T>& frame(std::size_t i) const { return frames_[i]; }
  /// d_{tau_i} = sum_k coef(node, i, k) d/dy'_k.
  const T& coef(std::size_t node, int i, int k) const { return coef_[node][i][k]; }
  /// Surface area element sqrt(1 + |grad phi|^2).
  const T& area(std::size_t i) const { return area_[i]; }
  const std::shared_ptr<const JetSpace>& space() const { return space_; }

  /// d/dy'_k of nodal values.
  std::vector<T> partial(const std::vector<T>& f, int k) const {
    if constexpr (std::is_same_v<T, double>) {
      return difference(f, chart_.param_grid(), k, StencilMode::one_sided_edges);
    } else {
      std::vector<T> out;
      out.reserve(f.size());
      for (const auto& x : f) out.push_back(x.derivative(k));
      return out;
    }
  }

  T zero() const {
    if constexpr (std::is_same_v<T, double>) return 0.0;
    else return Jet(space_);
  }

 private:
  void finish_node(std::size_t i, const std::vector<T>& dphi) {
    frames_[i] = detail::make_frame(chart_, dphi, coef_[i]);
    T g2 = constant_like(dphi[0], 1.0);
    for (const auto& s : dphi) g2 = g2 + s * s;
    using detail::sqrt;
    area_[i] = sqrt(g2);
  }

  BoundaryChart chart_;
  std::shared_ptr<const JetSpace> space_;
  std::vector<std::vector<T>> points_;
  std::vector<Frame<T>> frames_;
  std::vector<std::vector<std::vector<T>>> coef_;
  std::vector<T> area_;
};

/// build_frame at a single node, by finite differences on the chart grid.
inline Frame<double> build_frame(const BoundaryChart& chart, std::size_t node) {
  return ChartGeometry<double>(chart).frame(node);
}

/// Order-q tensor per chart node, stored node-major with N^q row-major entries.
template <class T>
struct BoundaryField {
  int dim = 0;
  int order = 0;
  std::size_t nodes = 0;
  std::vector<T> values;

  BoundaryField() = default;
  BoundaryField(int dim, int order, std::size_t nodes, const T& fill)
      : dim(dim), order(order), nodes(nodes), values(nodes * ipow(dim, order), fill) {}

  static std::size_t ipow(int b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= std::size_t(b);
    return r;
  }
  std::size_t width() const { return ipow(dim, order); }
  T& at(std::size_t node, std::size_t comp) { return values[node * width() + comp]; }
  const T& at(std::size_t node, std::size_t comp) const { return values[node * width() + comp]; }

  /// Component `comp` at every node.
  std::vector<T> component(std::size_t comp) const {
    std::vector<T> out;
    out.reserve(nodes);
    for (std::size_t i = 0; i < nodes; ++i) out.push_back(at(i, comp));
    return out;
  }
};

/// Scalar boundary data as an order-0 field.
inline BoundaryField<double> boundary_scalar(int dim, std::vector<double> v) {
  BoundaryField<double> f;
  f.dim = dim;
  f.nodes = v.size();
  f.values = std::move(v);
  return f;
}

inline BoundaryField<double> values_of(const BoundaryField<Jet>& f) {
  BoundaryField<double> out(f.dim, f.order, f.nodes, 0.0);
  for (std::size_t i = 0; i < f.values.size(); ++i) out.values[i] = f.values[i].value();
  return out;
}

// ---- trace operators ----

/// gamma_q(phi) = (n . grad)^q phi on the chart, exact for analytic phi:
/// the t^q Taylor coefficient of phi(X(y') + t n(y')), times q!.
inline BoundaryField<Jet> gamma(const AnalyticFn& phi, const ChartGeometry<Jet>& geo, int q) {
  if (q < 0 || q > geo.space()->degree()) throw TraceError("trace order exceeds the jet degree");
  const int n = geo.dim(), tvar = n - 1;
  BoundaryField<Jet> out(n, 0, geo.nodes(), geo.zero());
  std::vector<Jet> p(n);
  for (std::size_t i = 0; i < geo.nodes(); ++i) {
    const Jet t = Jet::variable(geo.space(), tvar, 0.0);
    for (int a = 0; a < n; ++a) p[a] = geo.point(i)[a] + t * geo.frame(i).normal[a];
    out.at(i, 0) = phi(p).slice(tvar, q);
  }
  return out;
}

inline BoundaryField<Jet> gamma0(const AnalyticFn& phi, const ChartGeometry<Jet>& geo) { return gamma(phi, geo, 0); }
inline BoundaryField<Jet> gamma1(const AnalyticFn& phi, const ChartGeometry<Jet>& geo) { return gamma(phi, geo, 1); }
inline BoundaryField<Jet> gamma2(const AnalyticFn& phi, const ChartGeometry<Jet>& geo) { return gamma(phi, geo, 2); }

/// Traces gamma_0..gamma_{m-1} of analytic phi sampled at the chart nodes.
inline std::vector<BoundaryField<double>> sample_traces(const AnalyticFn& phi, const BoundaryChart& chart, int m) {
  const ChartGeometry<Jet> geo(chart, m + 1);
  std::vector<BoundaryField<double>> out;
  for (int q = 0; q < m; ++q) out.push_back(values_of(gamma(phi, geo, q)));
  return out;
}

namespace detail {

// Tensor-product quadratic interpolation of a volume field at x.
inline double interpolate_quadratic(const ScalarField& f, std::span<const double> x) {
  const auto& g = f.grid();
  const int n = g.dim();
  std::vector<std::size_t> base(n);
  std::vector<std::array<double, 3>> w(n);
  for (int k = 0; k < n; ++k) {
    const double xi = (x[k] - g.origin()[k]) / g.h(k);
    const double last = double(g.extent(k) - 1);
    if (xi < -1e-9 || xi > last + 1e-9) throw TraceError("insufficient stencil room: point leaves the volume grid");
    long b = std::lround(xi) - 1;
    b = std::clamp<long>(b, 0, long(g.extent(k)) - 3);
    base[k] = std::size_t(b);
    const double s = xi - double(b);  // nodes at 0, 1, 2
    w[k] = {(s - 1) * (s - 2) / 2, -s * (s - 2), s * (s - 1) / 2};
  }
  double sum = 0.0;
  std::vector<std::size_t> idx(n);
  const int corners = n == 2 ? 9 : 27;
  for (int c = 0; c < corners; ++c) {
    double wt = 1.0;
    int r = c;
    for (int k = n - 1; k >= 0; --k) {
      const int o = r % 3;
      r /= 3;
      idx[k] = base[k] + std::size_t(o);
      wt *= w[k][o];
    }
    sum += wt * f[g.flat(idx)];
  }
  return sum;
}

}  // namespace detail

/// gamma_q (q <= 2) of a volume field: quadratic interpolation at x - j*delta*n
/// (delta = smallest volume spacing) and one-sided differences along -n.
/// Second order for gamma_1, first order for gamma_2.
inline BoundaryField<double> gamma_from_volume(const ScalarField& vol, const BoundaryChart& chart, int q) {
  if (q < 0 || q > 2) throw TraceError("volume traces support orders 0, 1 and 2");
  const auto& g = vol.grid();
  if (g.dim() != chart.dim) throw TraceError("volume field and chart dimensions differ");
  const ChartGeometry<double> geo(chart);
  double delta = g.h(0);
  for (int k = 1; k < g.dim(); ++k) delta = std::min(delta, g.h(k));
  BoundaryField<double> out(chart.dim, 0, chart.nodes(), 0.0);
  std::vector<double> p(chart.dim);
  for (std::size_t i = 0; i < chart.nodes(); ++i) {
    const auto& x = geo.point(i);
    const auto& nrm = geo.frame(i).normal;
    double f[4];
    for (int j = 0; j <= (q == 0 ? 0 : q + 1); ++j) {
      for (int a = 0; a < chart.dim; ++a) p[a] = x[a] - j * delta * nrm[a];
      f[j] = detail::interpolate_quadratic(vol, p);
    }
    if (q == 0) out.at(i, 0) = f[0];
    else if (q == 1) out.at(i, 0) = -(-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * delta);
    else out.at(i, 0) = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (delta * delta);
  }
  return out;
}

// ---- tangential calculus ----

/// d_{tau_i} u, componentwise.
template <class T>
BoundaryField<T> tau_derivative(const BoundaryField<T>& u, const ChartGeometry<T>& geo, int i) {
  BoundaryField<T> out(u.dim, u.order, u.nodes, geo.zero());
  const int d = geo.dim() - 1;
  for (std::size_t c = 0; c < u.width(); ++c) {
    const auto comp = u.component(c);
    std::vector<std::vector<T>> dk;
    for (int k = 0; k < d; ++k) dk.push_back(geo.partial(comp, k));
    for (std::size_t node = 0; node < u.nodes; ++node) {
      T s = geo.coef(node, i, 0) * dk[0][node];
      for (int k = 1; k < d; ++k) s = s + geo.coef(node, i, k) * dk[k][node];
      out.at(node, c) = s;
    }
  }
  return out;
}

/// grad_Gamma u = sum_i tau_i (x) d_{tau_i} u; the new leading index carries tau_i.
template <class T>
BoundaryField<T> surface_gradient(const BoundaryField<T>& u, const ChartGeometry<T>& geo) {
  const int n = geo.dim();
  std::vector<BoundaryField<T>> dt;
  for (int i = 0; i < n - 1; ++i) dt.push_back(tau_derivative(u, geo, i));
  BoundaryField<T> out(n, u.order + 1, u.nodes, geo.zero());
  const std::size_t w = u.width();
  for (std::size_t node = 0; node < u.nodes; ++node) {
    const auto& tau = geo.frame(node).tangents;
    for (int a = 0; a < n; ++a)
      for (std::size_t r = 0; r < w; ++r) {
        T s = tau[0][a] * dt[0].at(node, r);
        for (int i = 1; i < n - 1; ++i) s = s + tau[i][a] * dt[i].at(node, r);
        out.at(node, a * w + r) = s;
      }
  }
  return out;
}

/// u contracted with n on its last k indices.
template <class T>
BoundaryField<T> contract_last(const BoundaryField<T>& u, const ChartGeometry<T>& geo, int k) {
  const int n = geo.dim();
  BoundaryField<T> out(n, u.order - k, u.nodes, geo.zero());
  const std::size_t tail = BoundaryField<T>::ipow(n, k), w = out.width();
  for (std::size_t node = 0; node < u.nodes; ++node) {
    const auto& nv = geo.frame(node).normal;
    for (std::size_t r = 0; r < w; ++r) {
      T s = geo.zero();
      for (std::size_t e = 0; e < tail; ++e) {
        // n_{e_1} n_{e_2} ... n_{e_k}, e read as k base-n digits.
        std::size_t rest = e, div = tail / std::size_t(n);
        T prod = nv[rest / div];
        for (int j = 1; j < k; ++j) {
          rest %= div;
          div /= std::size_t(n);
          prod = prod * nv[rest / div];
        }
        T term = u.at(node, r * tail + e) * prod;
        s = e == 0 ? term : s + term;
      }
      out.at(node, r) = s;
    }
  }
  return out;
}

namespace detail {

// n_{a_1} ... n_{a_q} for the base-N digits of flat index `idx` of an order-q tensor.
template <class T>
T normal_power(const std::vector<T>& nv, std::size_t idx, int q) {
  const std::size_t n = nv.size();
  std::size_t div = BoundaryField<T>::ipow(int(n), q - 1);
  T prod = nv[idx / div];
  for (int j = 1; j < q; ++j) {
    idx %= div;
    div /= n;
    prod = prod * nv[idx / div];
  }
  return prod;
}

template <class T>
void require_same(const BoundaryField<T>& f, const ChartGeometry<T>& geo, int order, const char* what) {
  if (f.nodes != geo.nodes() || f.dim != geo.dim() || f.order != order)
    throw TraceError(std::string(what) + " does not match the chart");
}

}  // namespace detail

/// s = grad_Gamma phi0 + phi1 n.
template <class T>
BoundaryField<T> build_s(const BoundaryField<T>& phi0, const BoundaryField<T>& phi1, const ChartGeometry<T>& geo) {
  detail::require_same(phi0, geo, 0, "phi0");
  detail::require_same(phi1, geo, 0, "phi1");
  auto s = surface_gradient(phi0, geo);
  for (std::size_t node = 0; node < s.nodes; ++node) {
    const auto& nv = geo.frame(node).normal;
    for (int a = 0; a < geo.dim(); ++a) s.at(node, a) = s.at(node, a) + nv[a] * phi1.at(node, 0);
  }
  return s;
}

/// S = grad_Gamma s + sum_i (d_{tau_i} s . n) n (x) tau_i + phi2 n (x) n.
template <class T>
BoundaryField<T> build_S(const BoundaryField<T>& s, const BoundaryField<T>& phi2, const ChartGeometry<T>& geo) {
  detail::require_same(s, geo, 1, "s");
  detail::require_same(phi2, geo, 0, "phi2");
  const int n = geo.dim();
  auto S = surface_gradient(s, geo);
  std::vector<BoundaryField<T>> dn;
  for (int i = 0; i < n - 1; ++i) dn.push_back(contract_last(tau_derivative(s, geo, i), geo, 1));
  for (std::size_t node = 0; node < S.nodes; ++node) {
    const auto& fr = geo.frame(node);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        T v = S.at(node, a * n + b);
        for (int i = 0; i < n - 1; ++i) v = v + (fr.normal[a] * fr.tangents[i][b]) * dn[i].at(node, 0);
        v = v + (fr.normal[a] * fr.normal[b]) * phi2.at(node, 0);
        S.at(node, a * n + b) = v;
      }
  }
  return S;
}

/// S_q = grad_Gamma S_{q-1} + sum_{k=1}^{q-1} sum_i (n^k) (x) tau_i (x) [d_{tau_i} S_{q-1} . n^k]
///       + (n^q) phi_q,
/// with the n^k contraction on the last k indices. Returns S_0..S_{m-1}.
template <class T>
std::vector<BoundaryField<T>> build_S_chain(const std::vector<BoundaryField<T>>& traces, const ChartGeometry<T>& geo,
                                            int m) {
  if (m < 1) throw TraceError("m must be at least 1");
  if (m > kMaxTraceOrder) throw TraceError("m > 4 is not supported");
  if (int(traces.size()) < m) throw TraceError("need traces phi_0..phi_{m-1}");
  for (int q = 0; q < m; ++q) detail::require_same(traces[q], geo, 0, "trace");
  const int n = geo.dim();
  std::vector<BoundaryField<T>> chain{traces[0]};
  for (int q = 1; q < m; ++q) {
    const auto& prev = chain.back();
    auto S = surface_gradient(prev, geo);
    std::vector<BoundaryField<T>> dt;
    for (int i = 0; i < n - 1; ++i) dt.push_back(tau_derivative(prev, geo, i));
    const std::size_t w = S.width();
    for (int k = 1; k <= q - 1; ++k) {
      std::vector<BoundaryField<T>> ck;
      for (int i = 0; i < n - 1; ++i) ck.push_back(contract_last(dt[i], geo, k));
      // Index layout: k normal slots, one tangent slot, q-1-k contracted-remainder slots.
      const std::size_t rest = BoundaryField<T>::ipow(n, q - 1 - k);
      for (std::size_t node = 0; node < S.nodes; ++node) {
        const auto& fr = geo.frame(node);
        for (std::size_t e = 0; e < w; ++e) {
          const std::size_t head = e / (rest * std::size_t(n)), b = (e / rest) % std::size_t(n), r = e % rest;
          const T np = detail::normal_power(fr.normal, head, k);
          T v = S.at(node, e);
          for (int i = 0; i < n - 1; ++i) v = v + (np * fr.tangents[i][b]) * ck[i].at(node, r);
          S.at(node, e) = v;
        }
      }
    }
    for (std::size_t node = 0; node < S.nodes; ++node) {
      const auto& nv = geo.frame(node).normal;
      for (std::size_t e = 0; e < w; ++e)
        S.at(node, e) = S.at(node, e) + detail::normal_power(nv, e, q) * traces[q].at(node, 0);
    }
    chain.push_back(std::move(S));
  }
  return chain;
}

/// Lemma 4.3 row extraction for axis i (0-based):
/// phi0_i = s . e_i,  phi1_i = sum_j (d_{tau_j} s . n) tau_j . e_i + phi2 n . e_i.
template <class T>
std::pair<BoundaryField<T>, BoundaryField<T>> lemma43_rows(const BoundaryField<T>& s, const BoundaryField<T>& phi2,
                                                           const ChartGeometry<T>& geo, int i) {
  const int n = geo.dim();
  if (i < 0 || i >= n) throw std::out_of_range("row index out of range");
  detail::require_same(s, geo, 1, "s");
  detail::require_same(phi2, geo, 0, "phi2");
  std::vector<BoundaryField<T>> dn;
  for (int j = 0; j < n - 1; ++j) dn.push_back(contract_last(tau_derivative(s, geo, j), geo, 1));
  BoundaryField<T> p0(n, 0, s.nodes, geo.zero()), p1(n, 0, s.nodes, geo.zero());
  for (std::size_t node = 0; node < s.nodes; ++node) {
    const auto& fr = geo.frame(node);
    p0.at(node, 0) = s.at(node, i);
    T v = dn[0].at(node, 0) * fr.tangents[0][i];
    for (int j = 1; j < n - 1; ++j) v = v + dn[j].at(node, 0) * fr.tangents[j][i];
    p1.at(node, 0) = v + phi2.at(node, 0) * fr.normal[i];
  }
  return {std::move(p0), std::move(p1)};
}

// ---- compatibility ----

struct ChartDiagnostics {
  double lipschitz = 0.0;
  std::vector<double> w1p;    // discrete W^{1,p} norm of S_q, q <= m-2
  double slobodeckij = 0.0;   // discrete W^{1-1/p,p} seminorm of S_{m-1}
};

struct CompatibilityReport {
  int m = 0;
  double tol = 0.0;
  double p = 2.0;
  std::vector<double> symmetry_defect;  // per q, relative to max |S_q|
  std::vector<double> overlap_defect;   // per q, at ambient points shared by charts
  std::vector<ChartDiagnostics> charts;
  bool accept = true;
};

namespace detail {

// Largest |T(..i..j..) - T(..j..i..)| over all index-pair swaps at one node.
inline double swap_defect(std::span<const double> t, int n, int q) {
  double worst = 0.0;
  std::vector<int> digits(q);
  const std::size_t w = t.size();
  auto flat = [&](const std::vector<int>& d) {
    std::size_t f = 0;
    for (int x : d) f = f * std::size_t(n) + std::size_t(x);
    return f;
  };
  for (std::size_t e = 0; e < w; ++e) {
    std::size_t r = e;
    for (int j = q - 1; j >= 0; --j) {
      digits[j] = int(r % std::size_t(n));
      r /= std::size_t(n);
    }
    for (int a = 0; a < q; ++a)
      for (int b = a + 1; b < q; ++b) {
        if (digits[a] == digits[b]) continue;
        std::swap(digits[a], digits[b]);
        worst = std::max(worst, std::abs(t[e] - t[flat(digits)]));
        std::swap(digits[a], digits[b]);
      }
  }
  return worst;
}

// Trapezoid weight of a parameter node times the cell volume.
inline double param_weight(const GridSpec& g, std::size_t node) {
  std::vector<std::size_t> idx(g.dim());
  g.unflatten(node, idx);
  double w = g.cell_volume();
  for (int k = 0; k < g.dim(); ++k)
    if (idx[k] == 0 || idx[k] + 1 == g.extent(k)) w *= 0.5;
  return w;
}

}  // namespace detail

/// Builds S_0..S_{m-1} on every chart. Verdict: accept iff every symmetry
/// defect and every overlap defect is <= tol. The W^{1,p} and Slobodeckij
/// numbers are diagnostics only.
template <class T>
CompatibilityReport check_compatibility(const std::vector<std::vector<BoundaryField<T>>>& traces,
                                        const std::vector<ChartGeometry<T>>& geos, int m, double tol, double p = 2.0) {
  if (!(tol > 0.0)) throw TraceError("tolerance must be positive");
  if (!(p >= 1.0)) throw TraceError("p must be at least 1");
  if (traces.size() != geos.size()) throw TraceError("need one trace set per chart");
  if (geos.empty()) throw TraceError("no charts");
  CompatibilityReport rep;
  rep.m = m;
  rep.tol = tol;
  rep.p = p;
  const int n = geos.front().dim();

  std::vector<std::vector<BoundaryField<double>>> chains;
  for (std::size_t c = 0; c < geos.size(); ++c) {
    if (geos[c].dim() != n) throw TraceError("charts of different dimension");
    const auto chain = build_S_chain(traces[c], geos[c], m);
    std::vector<BoundaryField<double>> vals;
    for (const auto& S : chain) {
      if constexpr (std::is_same_v<T, double>) vals.push_back(S);
      else vals.push_back(values_of(S));
    }

    ChartDiagnostics diag;
    diag.lipschitz = geos[c].chart().lipschitz_ratio();
    const auto& pg = geos[c].chart().param_grid();
    std::vector<double> wt(geos[c].nodes());
    for (std::size_t i = 0; i < wt.size(); ++i) wt[i] = detail::param_weight(pg, i) * value_of(geos[c].area(i));
    for (int q = 0; q + 2 <= m; ++q) {
      std::vector<BoundaryField<double>> dts;
      for (int i = 0; i < n - 1; ++i) {
        const auto d = tau_derivative(chain[q], geos[c], i);
        if constexpr (std::is_same_v<T, double>) dts.push_back(d);
        else dts.push_back(values_of(d));
      }
      double sum = 0.0;
      for (std::size_t node = 0; node < wt.size(); ++node) {
        auto frob = [&](const BoundaryField<double>& f) {
          double s = 0.0;
          for (std::size_t e = 0; e < f.width(); ++e) s += f.at(node, e) * f.at(node, e);
          return std::sqrt(s);
        };
        double v = std::pow(frob(vals[q]), p);
        for (const auto& d : dts) v += std::pow(frob(d), p);
        sum += wt[node] * v;
      }
      diag.w1p.push_back(std::pow(sum, 1.0 / p));
    }
    {
      const auto& top = vals[m - 1];
      const double s = 1.0 - 1.0 / p, expo = double(n - 1) + s * p;
      double sum = 0.0;
      std::vector<std::vector<double>> pts;
      for (std::size_t x = 0; x < top.nodes; ++x) pts.push_back(geos[c].chart().point(x));
      for (std::size_t x = 0; x < top.nodes; ++x) {
        const auto& px = pts[x];
        for (std::size_t y = 0; y < top.nodes; ++y) {
          if (x == y) continue;
          const auto& py = pts[y];
          double dist2 = 0.0, diff2 = 0.0;
          for (int a = 0; a < n; ++a) dist2 += (px[a] - py[a]) * (px[a] - py[a]);
          for (std::size_t e = 0; e < top.width(); ++e) {
            const double d = top.at(x, e) - top.at(y, e);
            diff2 += d * d;
          }
          sum += std::pow(std::sqrt(diff2), p) / std::pow(std::sqrt(dist2), expo) * wt[x] * wt[y];
        }
      }
      diag.slobodeckij = std::pow(sum, 1.0 / p);
    }
    rep.charts.push_back(std::move(diag));
    chains.push_back(std::move(vals));
  }

  // Shared ambient points, keyed on coordinates rounded to 1e-8.
  std::map<std::vector<long long>, std::vector<std::pair<std::size_t, std::size_t>>> shared;
  for (std::size_t c = 0; c < geos.size(); ++c)
    for (std::size_t i = 0; i < geos[c].nodes(); ++i) {
      const auto x = geos[c].chart().point(i);
      std::vector<long long> key;
      for (double v : x) key.push_back(std::llround(v * 1e8));
      shared[key].emplace_back(c, i);
    }

  for (int q = 0; q < m; ++q) {
    double mag = 0.0, sym = 0.0, ovl = 0.0;
    for (const auto& ch : chains)
      for (double v : ch[q].values) mag = std::max(mag, std::abs(v));
    for (const auto& ch : chains) {
      const auto& S = ch[q];
      for (std::size_t node = 0; node < S.nodes; ++node)
        sym = std::max(sym, detail::swap_defect(std::span(S.values).subspan(node * S.width(), S.width()), n, q));
    }
    for (const auto& [key, list] : shared)
      for (std::size_t u = 0; u < list.size(); ++u)
        for (std::size_t v = u + 1; v < list.size(); ++v) {
          if (list[u].first == list[v].first) continue;
          const auto& A = chains[list[u].first][q];
          const auto& B = chains[list[v].first][q];
          for (std::size_t e = 0; e < A.width(); ++e)
            ovl = std::max(ovl, std::abs(A.at(list[u].second, e) - B.at(list[v].second, e)));
        }
    rep.symmetry_defect.push_back(mag > 0.0 ? sym / mag : 0.0);
    rep.overlap_defect.push_back(mag > 0.0 ? ovl / mag : 0.0);
    rep.accept = rep.accept && rep.symmetry_defect.back() <= tol && rep.overlap_defect.back() <= tol;
  }
  return rep;
}

}  // namespace vecpot
