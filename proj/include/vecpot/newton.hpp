#pragma once

// Free-space Newton potentials of compactly supported grid densities.
//
// Both paths use the same weight table: lambda(|d|) * cell volume at every
// nonzero offset d, and at d = 0 the integral of lambda over the ball whose
// volume equals one cell. newton_direct sums it explicitly; newton_fast does the
// same linear (zero-padded, not circular) convolution with FFTs.

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "vecpot/diff_ops.hpp"
#include "vecpot/fft.hpp"
#include "vecpot/grid.hpp"
#include "vecpot/norms.hpp"
#include "vecpot/parallel.hpp"

namespace vecpot {

inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

struct KernelSpec {
  int dim = 3;
  double unit_ball_volume = 4.0 * std::numbers::pi / 3.0;
  bool self_rule = true;  ///< equivalent-volume ball for the self cell

  static KernelSpec for_dim(int n) {
    if (n < 2) throw std::invalid_argument("kernel needs dim >= 2");
    return KernelSpec{n, vecpot::unit_ball_volume(n), true};
  }
};

/// Fundamental solution of -Laplace: -(1/2pi) log r for N = 2, r^(2-N) / (N(N-2) V_N) otherwise.
inline double kernel_eval(const KernelSpec& k, double r) {
  if (!(r > 0.0)) throw std::domain_error("kernel_eval needs r > 0");
  if (k.dim == 2) return -std::log(r) / (2.0 * std::numbers::pi);
  return std::pow(r, 2.0 - k.dim) / (k.dim * (k.dim - 2) * k.unit_ball_volume);
}

/// Integral of the kernel over the ball of volume `cell_volume` centered at the origin.
inline double self_cell_weight(const KernelSpec& k, double cell_volume) {
  if (!k.self_rule) return 0.0;
  const double rc = std::pow(cell_volume / k.unit_ball_volume, 1.0 / k.dim);
  if (k.dim == 2) return 0.25 * rc * rc * (1.0 - 2.0 * std::log(rc));
  return rc * rc / (2.0 * (k.dim - 2));
}

/// Smallest number of whole cells between a nonzero sample and the grid edge
/// (grid extent if the field is zero).
inline std::size_t support_margin(const ScalarField& f) {
  const GridSpec& g = f.grid();
  std::size_t best = *std::max_element(g.shape().begin(), g.shape().end());
  for_each_node(g, [&](std::size_t flat, std::span<const std::size_t> idx) {
    if (f[flat] == 0.0) return;
    for (int k = 0; k < g.dim(); ++k) best = std::min({best, idx[k], g.extent(k) - 1 - idx[k]});
  });
  return best;
}

enum class NewtonMethod { direct, fast };

/// Non-fatal findings collected while computing potentials.
struct Warnings {
  std::vector<std::string> messages;
  void add(std::string m) { messages.push_back(std::move(m)); }
};

/// Convolution with the sampled kernel on one grid; the weight table (and its
/// transform on the fast path) is built once and reused across components.
class NewtonOperator {
 public:
  NewtonOperator(const GridSpec& g, NewtonMethod method)
      : grid_(g), kernel_(KernelSpec::for_dim(g.dim())), method_(method) {
    g.require_volume();
    const int d = g.dim();
    // Offsets -(n-1)..(n-1) per axis.
    table_shape_.resize(d);
    for (int k = 0; k < d; ++k) table_shape_[k] = 2 * g.extent(k) - 1;
    table_strides_.assign(d, 1);
    for (int k = d - 1; k > 0; --k) table_strides_[k - 1] = table_strides_[k] * table_shape_[k];
    table_.assign(table_strides_[0] * table_shape_[0], 0.0);
    const double vol = g.cell_volume();
    const double self = self_cell_weight(kernel_, vol);
    std::vector<std::size_t> t(d, 0);
    for (std::size_t f = 0; f < table_.size(); ++f) {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double off = (double(t[k]) - double(g.extent(k) - 1)) * g.h(k);
        r2 += off * off;
      }
      table_[f] = r2 == 0.0 ? self : kernel_eval(kernel_, std::sqrt(r2)) * vol;
      for (int k = d - 1; k >= 0; --k) {
        if (++t[k] < table_shape_[k]) break;
        t[k] = 0;
      }
    }
    if (method_ == NewtonMethod::fast) prepare_fast();
  }

  const GridSpec& grid() const { return grid_; }
  const KernelSpec& kernel() const { return kernel_; }

  /// Weight applied to a density sample at offset `off` (in cells) from the output node.
  double weight(std::span<const long> off) const {
    std::size_t f = 0;
    for (int k = 0; k < grid_.dim(); ++k) f += std::size_t(off[k] + long(grid_.extent(k)) - 1) * table_strides_[k];
    return table_[f];
  }

  ScalarField apply(const ScalarField& density, Warnings* warn = nullptr) const {
    if (!(density.grid() == grid_)) throw GridError("newton potential: density grid mismatch");
    if (warn && support_margin(density) < 2)
      warn->add("density support is closer than 2 cells to the grid edge; the grid no longer stands in for R^N");
    return method_ == NewtonMethod::direct ? apply_direct(density) : apply_fast(density);
  }

 private:
  ScalarField apply_direct(const ScalarField& rho) const {
    const GridSpec& g = grid_;
    const int d = g.dim();
    struct Source {
      std::vector<std::size_t> idx;
      double value;
    };
    std::vector<Source> src;
    for_each_node(g, [&](std::size_t flat, std::span<const std::size_t> idx) {
      if (rho[flat] != 0.0) src.push_back({{idx.begin(), idx.end()}, rho[flat]});
    });
    std::vector<double> out(g.size(), 0.0);
    parallel_for(
        g.size(),
        [&](std::size_t b, std::size_t e) {
          std::vector<std::size_t> x(d);
          for (std::size_t f = b; f < e; ++f) {
            g.unflatten(f, x);
            double s = 0.0;
            for (const auto& y : src) {
              std::size_t t = 0;
              for (int k = 0; k < d; ++k) t += (x[k] + g.extent(k) - 1 - y.idx[k]) * table_strides_[k];
              s += y.value * table_[t];
            }
            out[f] = s;
          }
        },
        64);
    return ScalarField(g, std::move(out));
  }

  void prepare_fast() {
    const int d = grid_.dim();
    std::vector<std::size_t> padded(d);
    for (int k = 0; k < d; ++k) padded[k] = 2 * grid_.extent(k);
    transform_ = std::make_shared<fft::RealTransform>(padded);
    std::vector<double> ker(transform_->real_size(), 0.0);
    std::vector<std::size_t> j(d, 0);
    for (std::size_t f = 0; f < ker.size(); ++f) {
      bool used = true;
      std::size_t t = 0;
      for (int k = 0; k < d; ++k) {
        const long n = long(grid_.extent(k));
        const long off = long(j[k]) < n ? long(j[k]) : long(j[k]) - 2 * n;
        if (off <= -n || off >= n) {
          used = false;
          break;
        }
        t += std::size_t(off + n - 1) * table_strides_[k];
      }
      if (used) ker[f] = table_[t];
      for (int k = d - 1; k >= 0; --k) {
        if (++j[k] < padded[k]) break;
        j[k] = 0;
      }
    }
    kernel_hat_ = transform_->forward(ker);
  }

  ScalarField apply_fast(const ScalarField& rho) const {
    const GridSpec& g = grid_;
    const int d = g.dim();
    const auto& padded = transform_->shape();
    std::vector<double> buf(transform_->real_size(), 0.0);
    std::vector<std::size_t> pstr(d, 1);
    for (int k = d - 1; k > 0; --k) pstr[k - 1] = pstr[k] * padded[k];
    auto padded_flat = [&](std::span<const std::size_t> idx) {
      std::size_t f = 0;
      for (int k = 0; k < d; ++k) f += idx[k] * pstr[k];
      return f;
    };
    for_each_node(g, [&](std::size_t flat, std::span<const std::size_t> idx) { buf[padded_flat(idx)] = rho[flat]; });
    auto hat = transform_->forward(buf);
    for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= kernel_hat_[i];
    const auto conv = transform_->inverse(hat);
    std::vector<double> out(g.size());
    for_each_node(g, [&](std::size_t flat, std::span<const std::size_t> idx) { out[flat] = conv[padded_flat(idx)]; });
    return ScalarField(g, std::move(out));
  }

  GridSpec grid_;
  KernelSpec kernel_;
  NewtonMethod method_;
  std::vector<std::size_t> table_shape_;
  std::vector<std::size_t> table_strides_;
  std::vector<double> table_;
  std::shared_ptr<fft::RealTransform> transform_;  // FFTW execution mutates its buffers
  std::vector<std::complex<double>> kernel_hat_;
};

/// O(M * nnz) direct summation.
inline ScalarField newton_direct(const ScalarField& density, Warnings* warn = nullptr) {
  return NewtonOperator(density.grid(), NewtonMethod::direct).apply(density, warn);
}

/// FFT linear convolution with the same weight table as newton_direct.
inline ScalarField newton_fast(const ScalarField& density, Warnings* warn = nullptr) {
  return NewtonOperator(density.grid(), NewtonMethod::fast).apply(density, warn);
}

/// Componentwise potentials; pairs of an antisymmetric density stay antisymmetric.
inline VectorField vector_potential_of(const VectorField& v, NewtonMethod method = NewtonMethod::fast,
                                       Warnings* warn = nullptr) {
  NewtonOperator op(v.grid(), method);
  std::vector<ScalarField> c;
  for (const auto& x : v.components()) c.push_back(op.apply(x, warn));
  return VectorField(std::move(c));
}

inline AntisymField vector_potential_of(const AntisymField& a, NewtonMethod method = NewtonMethod::fast,
                                        Warnings* warn = nullptr) {
  NewtonOperator op(a.grid(), method);
  std::vector<ScalarField> c;
  for (const auto& x : a.upper()) c.push_back(op.apply(x, warn));
  return AntisymField(std::move(c));
}

inline ScalarField vector_potential_of(const ScalarField& f, NewtonMethod method = NewtonMethod::fast,
                                       Warnings* warn = nullptr) {
  return NewtonOperator(f.grid(), method).apply(f, warn);
}

/// Finite ratios behind the interior and Calderon-Zygmund estimates of a potential.
struct EstimateRatios {
  double interior = 0.0;  ///< |phi|_{W^{2,p}(omega)} / (|phi|_{L^p(omega~)} + |rho|_{L^p(omega~)})
  double cz = 0.0;        ///< |D^2 phi|_{L^p} / |rho|_{L^p}, whole grid
};

inline EstimateRatios estimate_ratios(const ScalarField& phi, const ScalarField& rho, const IndexBox& omega,
                                      double p = 2.0, double dilation = 0.25) {
  const GridSpec& g = phi.grid();
  const IndexBox wide = omega.dilated(g, dilation);
  const NormRegion in{omega, BoxWeights::trapezoid};
  const NormRegion out{wide, BoxWeights::trapezoid};
  EstimateRatios r;
  r.interior = safe_ratio(discrete_norm(phi, {p, 2}, StencilMode::one_sided_edges, in),
                          discrete_norm(phi, {p, 0}, StencilMode::one_sided_edges, out) +
                              discrete_norm(rho, {p, 0}, StencilMode::one_sided_edges, out));
  r.cz = safe_ratio(discrete_seminorm(phi, {p, 2}), discrete_norm(rho, {p, 0}));
  return r;
}

}  // namespace vecpot
