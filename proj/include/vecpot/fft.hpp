#pragma once

// Thin RAII wrappers over FFTW for the transforms used by the fast Newton
// potential, the periodic spectral solves and the Neumann gradient recovery.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numeric>
#include <vector>

namespace vecpot::fft {

namespace detail {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FreeDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using Buffer = std::unique_ptr<T[], FreeDeleter>;

template <class T>
Buffer<T> alloc(std::size_t n) {
  return Buffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1))));
}

inline std::vector<int> to_int(const std::vector<std::size_t>& shape) { return {shape.begin(), shape.end()}; }

}  // namespace detail

/// Real-to-complex transform pair on a fixed row-major shape. The inverse is normalized.
class RealTransform {
 public:
  explicit RealTransform(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    real_size_ = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
    complex_size_ = real_size_ / shape_.back() * (shape_.back() / 2 + 1);
    real_ = detail::alloc<double>(real_size_);
    cplx_ = detail::alloc<fftw_complex>(complex_size_);
    const auto n = detail::to_int(shape_);
    std::lock_guard lock(detail::planner_mutex());
    fwd_.reset(fftw_plan_dft_r2c(int(n.size()), n.data(), real_.get(), cplx_.get(), FFTW_ESTIMATE));
    inv_.reset(fftw_plan_dft_c2r(int(n.size()), n.data(), cplx_.get(), real_.get(), FFTW_ESTIMATE));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }

  std::vector<std::complex<double>> forward(const std::vector<double>& in) {
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute(fwd_.get());
    std::vector<std::complex<double>> out(complex_size_);
    for (std::size_t i = 0; i < complex_size_; ++i) out[i] = {cplx_[i][0], cplx_[i][1]};
    return out;
  }

  std::vector<double> inverse(const std::vector<std::complex<double>>& in) {
    for (std::size_t i = 0; i < complex_size_; ++i) {
      cplx_[i][0] = in[i].real();
      cplx_[i][1] = in[i].imag();
    }
    fftw_execute(inv_.get());
    std::vector<double> out(real_.get(), real_.get() + real_size_);
    const double s = 1.0 / double(real_size_);
    for (auto& x : out) x *= s;
    return out;
  }

  /// Calls fn(flat_complex_index, frequency_index_vector) over the half spectrum.
  template <class Fn>
  void for_each_frequency(Fn&& fn) const {
    std::vector<std::size_t> idx(shape_.size(), 0);
    std::vector<std::size_t> ext(shape_);
    ext.back() = shape_.back() / 2 + 1;
    for (std::size_t f = 0; f < complex_size_; ++f) {
      fn(f, idx);
      for (int k = int(ext.size()) - 1; k >= 0; --k) {
        if (++idx[k] < ext[k]) break;
        idx[k] = 0;
      }
    }
  }

 private:
  std::vector<std::size_t> shape_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  detail::Buffer<double> real_;
  detail::Buffer<fftw_complex> cplx_;
  detail::Plan fwd_;
  detail::Plan inv_;
};

/// DCT-II forward / DCT-III inverse on every axis: the eigenbasis of the node-based
/// Laplacian with natural (zero-flux) ends. The inverse is normalized.
class CosineTransform {
 public:
  explicit CosineTransform(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    size_ = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
    buf_ = detail::alloc<double>(size_);
    const auto n = detail::to_int(shape_);
    std::vector<fftw_r2r_kind> fk(n.size(), FFTW_REDFT10), ik(n.size(), FFTW_REDFT01);
    std::lock_guard lock(detail::planner_mutex());
    fwd_.reset(fftw_plan_r2r(int(n.size()), n.data(), buf_.get(), buf_.get(), fk.data(), FFTW_ESTIMATE));
    inv_.reset(fftw_plan_r2r(int(n.size()), n.data(), buf_.get(), buf_.get(), ik.data(), FFTW_ESTIMATE));
  }

  std::vector<double> forward(const std::vector<double>& in) { return run(fwd_.get(), in, 1.0); }

  std::vector<double> inverse(const std::vector<double>& in) {
    double norm = 1.0;
    for (auto n : shape_) norm *= 2.0 * double(n);
    return run(inv_.get(), in, 1.0 / norm);
  }

 private:
  std::vector<double> run(fftw_plan p, const std::vector<double>& in, double scale) {
    std::copy(in.begin(), in.end(), buf_.get());
    fftw_execute(p);
    std::vector<double> out(buf_.get(), buf_.get() + size_);
    if (scale != 1.0)
      for (auto& x : out) x *= scale;
    return out;
  }

  std::vector<std::size_t> shape_;
  std::size_t size_ = 0;
  detail::Buffer<double> buf_;
  detail::Plan fwd_;
  detail::Plan inv_;
};

}  // namespace vecpot::fft
