#pragma once

// Sampled fields on uniform node-centered Cartesian grids.
//
// Storage is row-major with the last axis fastest. Vector and antisymmetric
// fields keep one ScalarField per component; an AntisymField stores only the
// strictly-upper pairs (i,j), i<j, in lexicographic order, so every matrix it
// reconstructs is skew-symmetric by construction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vecpot {

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GridSpec {
 public:
  GridSpec() = default;

  /// Validates dim >= 1, shape >= 3 and spacing > 0 on every axis.
  /// Volume fields additionally require dim >= 2 (see require_volume()).
  GridSpec(std::vector<std::size_t> shape, std::vector<double> spacing, std::vector<double> origin)
      : shape_(std::move(shape)), spacing_(std::move(spacing)), origin_(std::move(origin)) {
    if (shape_.empty()) throw GridError("grid needs at least one axis");
    if (spacing_.size() != shape_.size() || origin_.size() != shape_.size())
      throw GridError("shape, spacing and origin must have the same length");
    for (std::size_t k = 0; k < shape_.size(); ++k) {
      if (shape_[k] < 3) throw GridError("every axis needs at least 3 samples");
      if (!(spacing_[k] > 0.0) || !std::isfinite(spacing_[k])) throw GridError("spacing must be positive and finite");
      if (!std::isfinite(origin_[k])) throw GridError("origin must be finite");
    }
    strides_.assign(shape_.size(), 1);
    for (std::size_t k = shape_.size() - 1; k > 0; --k) strides_[k - 1] = strides_[k] * shape_[k];
    size_ = strides_[0] * shape_[0];
  }

  /// n nodes per axis spanning [lo, hi] inclusive.
  static GridSpec cube(int dim, std::size_t n, double lo, double hi) {
    return GridSpec(std::vector<std::size_t>(dim, n), std::vector<double>(dim, (hi - lo) / double(n - 1)),
                    std::vector<double>(dim, lo));
  }

  /// n nodes per axis on the period [lo, hi); the node at hi is the image of lo.
  static GridSpec periodic_cube(int dim, std::size_t n, double lo, double hi) {
    return GridSpec(std::vector<std::size_t>(dim, n), std::vector<double>(dim, (hi - lo) / double(n)),
                    std::vector<double>(dim, lo));
  }

  int dim() const { return static_cast<int>(shape_.size()); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<double>& spacing() const { return spacing_; }
  const std::vector<double>& origin() const { return origin_; }
  std::size_t size() const { return size_; }
  std::size_t stride(int axis) const { return strides_[axis]; }
  std::size_t extent(int axis) const { return shape_[axis]; }
  double h(int axis) const { return spacing_[axis]; }

  double cell_volume() const {
    return std::accumulate(spacing_.begin(), spacing_.end(), 1.0, std::multiplies<>());
  }

  std::size_t flat(std::span<const std::size_t> idx) const {
    std::size_t f = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) f += idx[k] * strides_[k];
    return f;
  }

  void unflatten(std::size_t f, std::span<std::size_t> idx) const {
    for (std::size_t k = 0; k < shape_.size(); ++k) {
      idx[k] = f / strides_[k];
      f %= strides_[k];
    }
  }

  double coord(int axis, std::size_t i) const { return origin_[axis] + double(i) * spacing_[axis]; }

  void position(std::span<const std::size_t> idx, std::span<double> x) const {
    for (std::size_t k = 0; k < shape_.size(); ++k) x[k] = coord(int(k), idx[k]);
  }

  void require_volume() const {
    if (dim() < 2) throw GridError("volume fields need dim >= 2");
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.shape_ == b.shape_ && a.spacing_ == b.spacing_ && a.origin_ == b.origin_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> spacing_;
  std::vector<double> origin_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Calls fn(flat, idx) for every node in storage order.
template <class Fn>
void for_each_node(const GridSpec& g, Fn&& fn) {
  std::vector<std::size_t> idx(g.dim(), 0);
  const std::size_t n = g.size();
  for (std::size_t f = 0; f < n; ++f) {
    fn(f, std::span<const std::size_t>(idx));
    for (int k = g.dim() - 1; k >= 0; --k) {
      if (++idx[k] < g.extent(k)) break;
      idx[k] = 0;
    }
  }
}

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridSpec grid) : grid_(std::move(grid)), values_(grid_.size(), 0.0) {}

  /// Rejects a wrong length or any non-finite value.
  ScalarField(GridSpec grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw GridError("value count does not match grid size");
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i])) throw GridError("non-finite value at flat index " + std::to_string(i));
  }

  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

class VectorField {
 public:
  VectorField() = default;

  explicit VectorField(std::vector<ScalarField> components) : components_(std::move(components)) {
    if (components_.empty()) throw GridError("vector field needs components");
    const GridSpec& g = components_.front().grid();
    g.require_volume();
    if (int(components_.size()) != g.dim()) throw GridError("vector field needs exactly dim components");
    for (const auto& c : components_)
      if (!(c.grid() == g)) throw GridError("vector components must share one grid");
  }

  static VectorField zeros(const GridSpec& g) {
    return VectorField(std::vector<ScalarField>(g.dim(), ScalarField(g)));
  }

  const GridSpec& grid() const { return components_.front().grid(); }
  int dim() const { return static_cast<int>(components_.size()); }
  const ScalarField& operator[](int i) const { return components_[i]; }
  const std::vector<ScalarField>& components() const { return components_; }

 private:
  std::vector<ScalarField> components_;
};

/// Number of strictly-upper pairs of an n x n matrix.
constexpr int pair_count(int n) { return n * (n - 1) / 2; }

/// Lexicographic position of the pair (i,j), i<j.
constexpr int pair_index(int n, int i, int j) { return i * n - i * (i + 1) / 2 + (j - i - 1); }

class AntisymField {
 public:
  AntisymField() = default;

  explicit AntisymField(std::vector<ScalarField> upper) : upper_(std::move(upper)) {
    if (upper_.empty()) throw GridError("antisymmetric field needs components");
    const GridSpec& g = upper_.front().grid();
    g.require_volume();
    if (int(upper_.size()) != pair_count(g.dim())) throw GridError("antisymmetric field needs dim*(dim-1)/2 components");
    for (const auto& c : upper_)
      if (!(c.grid() == g)) throw GridError("antisymmetric components must share one grid");
  }

  static AntisymField zeros(const GridSpec& g) {
    return AntisymField(std::vector<ScalarField>(pair_count(g.dim()), ScalarField(g)));
  }

  const GridSpec& grid() const { return upper_.front().grid(); }
  int dim() const { return grid().dim(); }
  const std::vector<ScalarField>& upper() const { return upper_; }
  const ScalarField& upper(int i, int j) const { return upper_[pair_index(dim(), i, j)]; }

  /// Entry A_ij at one node from the skew reconstruction.
  double entry(int i, int j, std::size_t node) const {
    if (i == j) return 0.0;
    return i < j ? upper(i, j)[node] : -upper(j, i)[node];
  }

  /// Full row-major N x N matrix at one node.
  std::vector<double> matrix(std::size_t node) const {
    const int n = dim();
    std::vector<double> a(n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a[i * n + j] = entry(i, j, node);
    return a;
  }

 private:
  std::vector<ScalarField> upper_;
};

// ---- sampling -------------------------------------------------------------

/// values[idx] = f(origin + idx * spacing); a non-finite sample is rejected with its index.
template <class Fn>
ScalarField sample(const GridSpec& g, Fn&& f) {
  std::vector<double> v(g.size());
  std::vector<double> x(g.dim());
  for_each_node(g, [&](std::size_t flat, std::span<const std::size_t> idx) {
    g.position(idx, x);
    const double y = f(std::span<const double>(x));
    if (!std::isfinite(y)) {
      std::string where;
      for (std::size_t k = 0; k < idx.size(); ++k) where += (k ? "," : "") + std::to_string(idx[k]);
      throw GridError("non-finite sample at index (" + where + ")");
    }
    v[flat] = y;
  });
  return ScalarField(g, std::move(v));
}

/// Samples component c of a vector function fn(x, c).
template <class Fn>
VectorField sample_vector(const GridSpec& g, Fn&& fn) {
  std::vector<ScalarField> comps;
  for (int c = 0; c < g.dim(); ++c)
    comps.push_back(sample(g, [&](std::span<const double> x) { return fn(x, c); }));
  return VectorField(std::move(comps));
}

/// Samples pair (i,j), i<j, of an antisymmetric function fn(x, i, j).
template <class Fn>
AntisymField sample_antisym(const GridSpec& g, Fn&& fn) {
  const int n = g.dim();
  std::vector<ScalarField> up;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) up.push_back(sample(g, [&](std::span<const double> x) { return fn(x, i, j); }));
  return AntisymField(std::move(up));
}

// ---- pointwise arithmetic ---------------------------------------------------

namespace detail {
template <class Op>
ScalarField zip(const ScalarField& a, const ScalarField& b, Op op) {
  if (!(a.grid() == b.grid())) throw GridError("grid mismatch");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(a[i], b[i]);
  return ScalarField(a.grid(), std::move(v));
}
}  // namespace detail

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return detail::zip(a, b, std::plus<>());
}
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return detail::zip(a, b, std::minus<>());
}
inline ScalarField operator*(double c, const ScalarField& a) {
  std::vector<double> v(a.values());
  for (auto& x : v) x *= c;
  return ScalarField(a.grid(), std::move(v));
}

inline VectorField operator+(const VectorField& a, const VectorField& b) {
  std::vector<ScalarField> c;
  for (int i = 0; i < a.dim(); ++i) c.push_back(a[i] + b[i]);
  return VectorField(std::move(c));
}
inline VectorField operator-(const VectorField& a, const VectorField& b) {
  std::vector<ScalarField> c;
  for (int i = 0; i < a.dim(); ++i) c.push_back(a[i] - b[i]);
  return VectorField(std::move(c));
}
inline VectorField operator*(double s, const VectorField& a) {
  std::vector<ScalarField> c;
  for (int i = 0; i < a.dim(); ++i) c.push_back(s * a[i]);
  return VectorField(std::move(c));
}

inline AntisymField operator+(const AntisymField& a, const AntisymField& b) {
  std::vector<ScalarField> c;
  for (std::size_t i = 0; i < a.upper().size(); ++i) c.push_back(a.upper()[i] + b.upper()[i]);
  return AntisymField(std::move(c));
}
inline AntisymField operator-(const AntisymField& a, const AntisymField& b) {
  std::vector<ScalarField> c;
  for (std::size_t i = 0; i < a.upper().size(); ++i) c.push_back(a.upper()[i] - b.upper()[i]);
  return AntisymField(std::move(c));
}
inline AntisymField operator*(double s, const AntisymField& a) {
  std::vector<ScalarField> c;
  for (const auto& u : a.upper()) c.push_back(s * u);
  return AntisymField(std::move(c));
}

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.values()) m = std::max(m, std::abs(x));
  return m;
}
inline double max_abs(const VectorField& f) {
  double m = 0.0;
  for (const auto& c : f.components()) m = std::max(m, max_abs(c));
  return m;
}
inline double max_abs(const AntisymField& f) {
  double m = 0.0;
  for (const auto& c : f.upper()) m = std::max(m, max_abs(c));
  return m;
}

// ---- index boxes ------------------------------------------------------------

/// Inclusive node-index box inside a grid.
struct IndexBox {
  std::vector<std::size_t> lo;
  std::vector<std::size_t> hi;

  static IndexBox whole(const GridSpec& g) {
    IndexBox b;
    b.lo.assign(g.dim(), 0);
    for (int k = 0; k < g.dim(); ++k) b.hi.push_back(g.extent(k) - 1);
    return b;
  }

  /// Nodes at least `margin` cells from every grid edge.
  static IndexBox interior(const GridSpec& g, std::size_t margin) {
    IndexBox b;
    for (int k = 0; k < g.dim(); ++k) {
      if (2 * margin >= g.extent(k)) throw GridError("interior margin leaves no nodes");
      b.lo.push_back(margin);
      b.hi.push_back(g.extent(k) - 1 - margin);
    }
    return b;
  }

  bool contains(std::span<const std::size_t> idx) const {
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (idx[k] < lo[k] || idx[k] > hi[k]) return false;
    return true;
  }

  bool on_boundary(std::span<const std::size_t> idx) const {
    if (!contains(idx)) return false;
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (idx[k] == lo[k] || idx[k] == hi[k]) return true;
    return false;
  }

  /// Grows by `cells` per side, clipped to the grid.
  IndexBox grown(const GridSpec& g, std::size_t cells) const {
    IndexBox b = *this;
    for (std::size_t k = 0; k < lo.size(); ++k) {
      b.lo[k] = lo[k] >= cells ? lo[k] - cells : 0;
      b.hi[k] = std::min(g.extent(int(k)) - 1, hi[k] + cells);
    }
    return b;
  }

  /// Dilates about its center by `fraction` of its extent, clipped to the grid.
  IndexBox dilated(const GridSpec& g, double fraction) const {
    IndexBox b = *this;
    for (std::size_t k = 0; k < lo.size(); ++k) {
      const auto grow = static_cast<std::size_t>(std::lround(0.5 * fraction * double(hi[k] - lo[k])));
      b.lo[k] = lo[k] >= grow ? lo[k] - grow : 0;
      b.hi[k] = std::min(g.extent(int(k)) - 1, hi[k] + grow);
    }
    return b;
  }
};

}  // namespace vecpot
