#pragma once

// Truncated multivariate Taylor jets: a polynomial in `vars` variables of total
// degree <= `degree`, carried through arithmetic and elementary functions.
// Used to differentiate analytic boundary data exactly (up to roundoff).

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace vecpot {

/// Monomial layout and product/derivative tables for one (vars, degree) pair.
class JetSpace {
 public:
  static std::shared_ptr<const JetSpace> get(int vars, int degree) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetSpace>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[{vars, degree}];
    if (!slot) slot = std::shared_ptr<const JetSpace>(new JetSpace(vars, degree));
    return slot;
  }

  int vars() const { return vars_; }
  int degree() const { return degree_; }
  std::size_t size() const { return exps_.size(); }
  const std::vector<int>& exponents(std::size_t i) const { return exps_[i]; }
  int total(std::size_t i) const { return totals_[i]; }

  /// Index of a monomial, or size() if its degree exceeds the cap.
  std::size_t index(std::span<const int> e) const {
    int t = 0;
    for (int x : e) t += x;
    if (t > degree_) return size();
    return lookup_.at(std::vector<int>(e.begin(), e.end()));
  }

  struct Term {
    std::size_t a, b, c;
  };
  const std::vector<Term>& products() const { return products_; }

  /// For d/dx_k: (source index, target index, factor).
  struct DTerm {
    std::size_t src, dst;
    double factor;
  };
  const std::vector<DTerm>& derivative(int k) const { return derivs_[k]; }

 private:
  JetSpace(int vars, int degree) : vars_(vars), degree_(degree) {
    if (vars < 1 || degree < 0) throw std::invalid_argument("jet space needs vars >= 1 and degree >= 0");
    // Graded order: degree 0 first, then all degree-1 monomials, ...
    for (int t = 0; t <= degree; ++t) {
      std::vector<int> e(vars, 0);
      enumerate(e, 0, t);
    }
    for (std::size_t i = 0; i < exps_.size(); ++i) lookup_[exps_[i]] = i;
    std::vector<int> sum(vars);
    for (std::size_t a = 0; a < size(); ++a)
      for (std::size_t b = 0; b < size(); ++b) {
        if (totals_[a] + totals_[b] > degree) continue;
        for (int k = 0; k < vars; ++k) sum[k] = exps_[a][k] + exps_[b][k];
        products_.push_back({a, b, lookup_.at(sum)});
      }
    derivs_.resize(vars);
    for (int k = 0; k < vars; ++k)
      for (std::size_t a = 0; a < size(); ++a) {
        if (exps_[a][k] == 0) continue;
        std::vector<int> e = exps_[a];
        --e[k];
        derivs_[k].push_back({a, lookup_.at(e), double(exps_[a][k])});
      }
  }

  void enumerate(std::vector<int>& e, int k, int left) {
    if (k == vars_ - 1) {
      e[k] = left;
      exps_.push_back(e);
      totals_.push_back(0);
      for (int x : e) totals_.back() += x;
      return;
    }
    for (int x = left; x >= 0; --x) {
      e[k] = x;
      enumerate(e, k + 1, left - x);
    }
    e[k] = 0;
  }

  int vars_, degree_;
  std::vector<std::vector<int>> exps_;
  std::vector<int> totals_;
  std::map<std::vector<int>, std::size_t> lookup_;
  std::vector<Term> products_;
  std::vector<std::vector<DTerm>> derivs_;
};

class Jet {
 public:
  Jet() = default;
  explicit Jet(std::shared_ptr<const JetSpace> space, double value = 0.0)
      : space_(std::move(space)), c_(space_->size(), 0.0) {
    c_[0] = value;
  }

  /// The k-th coordinate expanded about x0.
  static Jet variable(std::shared_ptr<const JetSpace> space, int k, double x0) {
    Jet j(std::move(space), x0);
    if (j.space_->degree() >= 1) {
      std::vector<int> e(j.space_->vars(), 0);
      e[k] = 1;
      j.c_[j.space_->index(e)] = 1.0;
    }
    return j;
  }

  const std::shared_ptr<const JetSpace>& space() const { return space_; }
  double value() const { return c_[0]; }
  const std::vector<double>& coefficients() const { return c_; }
  double coefficient(std::span<const int> e) const {
    const std::size_t i = space_->index(e);
    return i < c_.size() ? c_[i] : 0.0;
  }

  /// A constant in the same space.
  Jet constant(double v) const { return Jet(space_, v); }

  /// d/dx_k. The top-degree coefficients of the result are unknown and set to zero.
  Jet derivative(int k) const {
    Jet r(space_);
    for (const auto& t : space_->derivative(k)) r.c_[t.dst] += t.factor * c_[t.src];
    return r;
  }

  /// k! times the coefficient of x_var^k, as a jet in the remaining variables.
  Jet slice(int var, int k) const {
    Jet r(space_);
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    std::vector<int> e;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (space_->exponents(i)[var] != k) continue;
      e = space_->exponents(i);
      e[var] = 0;
      r.c_[space_->index(e)] = fact * c_[i];
    }
    return r;
  }

  Jet& operator+=(const Jet& o) {
    check(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    check(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check(b);
    Jet r(a.space_);
    for (const auto& t : a.space_->products()) r.c_[t.c] += a.c_[t.a] * b.c_[t.b];
    return r;
  }

  /// sum_j d[j] (a - a0)^j, the Taylor composition of a univariate function.
  static Jet compose(const Jet& a, const std::vector<double>& d) {
    Jet delta = a;
    delta.c_[0] = 0.0;
    Jet r(a.space_, d[0]);
    Jet p = a.constant(1.0);
    for (std::size_t j = 1; j < d.size(); ++j) {
      p = p * delta;
      Jet term = p;
      term *= d[j];
      r += term;
    }
    return r;
  }

 private:
  void check(const Jet& o) const {
    if (space_ != o.space_) throw std::invalid_argument("jets from different spaces");
  }

  std::shared_ptr<const JetSpace> space_;
  std::vector<double> c_;
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator-(Jet a) { return a *= -1.0; }
inline Jet operator*(Jet a, double s) { return a *= s; }
inline Jet operator*(double s, Jet a) { return a *= s; }
inline Jet operator+(Jet a, double s) { return a += s; }
inline Jet operator+(double s, Jet a) { return a += s; }
inline Jet operator-(Jet a, double s) { return a += -s; }
inline Jet operator-(double s, Jet a) {
  a *= -1.0;
  return a += s;
}

namespace detail {

// Taylor coefficients f^(j)(x0)/j! for j = 0..n of x^r.
inline std::vector<double> power_series(double x0, double r, int n) {
  std::vector<double> d(n + 1);
  double binom = 1.0;
  for (int j = 0; j <= n; ++j) {
    d[j] = binom * std::pow(x0, r - j);
    binom *= (r - j) / double(j + 1);
  }
  return d;
}

}  // namespace detail

inline Jet reciprocal(const Jet& a) {
  if (a.value() == 0.0) throw std::domain_error("jet division by zero");
  return Jet::compose(a, detail::power_series(a.value(), -1.0, a.space()->degree()));
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
inline Jet operator/(double s, const Jet& b) { return s * reciprocal(b); }

inline Jet sqrt(const Jet& a) {
  if (!(a.value() > 0.0)) throw std::domain_error("jet sqrt needs a positive value");
  return Jet::compose(a, detail::power_series(a.value(), 0.5, a.space()->degree()));
}

inline Jet pow(const Jet& a, int n) {
  if (n < 0) return pow(reciprocal(a), -n);
  Jet r = a.constant(1.0), base = a;
  while (n) {
    if (n & 1) r = r * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return r;
}

inline Jet pow(const Jet& a, double r) {
  if (!(a.value() > 0.0)) throw std::domain_error("jet pow needs a positive base");
  return Jet::compose(a, detail::power_series(a.value(), r, a.space()->degree()));
}

inline Jet exp(const Jet& a) {
  const int n = a.space()->degree();
  std::vector<double> d(n + 1);
  double f = std::exp(a.value());
  for (int j = 0; j <= n; ++j) {
    d[j] = f;
    f /= double(j + 1);
  }
  return Jet::compose(a, d);
}

inline Jet log(const Jet& a) {
  if (!(a.value() > 0.0)) throw std::domain_error("jet log needs a positive value");
  const int n = a.space()->degree();
  std::vector<double> d(n + 1);
  d[0] = std::log(a.value());
  for (int j = 1; j <= n; ++j) d[j] = ((j % 2) ? 1.0 : -1.0) / (j * std::pow(a.value(), j));
  return Jet::compose(a, d);
}

namespace detail {

// phase 0 for sin, 1 for cos: the j-th derivative is the (j + phase)-th of sin.
inline std::vector<double> trig_series(double x0, int phase, int n) {
  const double s = std::sin(x0), c = std::cos(x0);
  const double cyc[4] = {s, c, -s, -c};
  std::vector<double> d(n + 1);
  double fact = 1.0;
  for (int j = 0; j <= n; ++j) {
    if (j > 0) fact *= j;
    d[j] = cyc[(j + phase) % 4] / fact;
  }
  return d;
}

}  // namespace detail

inline Jet sin(const Jet& a) { return Jet::compose(a, detail::trig_series(a.value(), 0, a.space()->degree())); }
inline Jet cos(const Jet& a) { return Jet::compose(a, detail::trig_series(a.value(), 1, a.space()->degree())); }

/// Value part, so generic code can treat double and Jet alike.
inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

/// A constant of the same kind as `like`.
inline double constant_like(double, double v) { return v; }
inline Jet constant_like(const Jet& like, double v) { return like.constant(v); }

}  // namespace vecpot
