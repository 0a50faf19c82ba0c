#pragma once

// Exact multivariate polynomials with rational coefficients, and the vector
// calculus operators applied to them symbolically. Used as the reference for
// the finite-difference operators; equality here is equality, not tolerance.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vecpot/grid.hpp"
#include "vecpot/random_fields.hpp"

namespace vecpot::oracle {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr int kExponentCap = 6;

class PolyCapError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class Poly {
 public:
  using Exponents = std::vector<int>;

  Poly() = default;
  explicit Poly(int nvars) : nvars_(nvars) {}

  static Poly constant(int nvars, const Rational& c) {
    Poly p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
  }

  /// The coordinate function x_axis.
  static Poly coordinate(int nvars, int axis) {
    Poly p(nvars);
    Exponents e(nvars, 0);
    e[axis] = 1;
    p.add_term(e, 1);
    return p;
  }

  static Poly monomial(int nvars, Exponents e, const Rational& c = 1) {
    Poly p(nvars);
    p.add_term(std::move(e), c);
    return p;
  }

  int nvars() const { return nvars_; }
  const std::map<Exponents, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int x : e) s += x;
      d = std::max(d, s);
    }
    return d;
  }

  void add_term(Exponents e, const Rational& c) {
    if (int(e.size()) != nvars_) throw std::invalid_argument("exponent vector length differs from variable count");
    for (int x : e) {
      if (x < 0) throw std::invalid_argument("negative exponent");
      if (x > kExponentCap) throw PolyCapError("exponent " + std::to_string(x) + " exceeds the cap");
    }
    if (c == 0) return;
    auto [it, fresh] = terms_.emplace(std::move(e), c);
    if (!fresh) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  Poly derivative(int axis) const {
    Poly d(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e[axis] == 0) continue;
      Exponents f = e;
      f[axis] -= 1;
      d.add_term(std::move(f), c * e[axis]);
    }
    return d;
  }

  /// Exact value at a point whose coordinates are taken exactly from binary64,
  /// rounded once at the end.
  double operator()(std::span<const double> x) const;

  friend Poly operator+(Poly a, const Poly& b) {
    for (const auto& [e, c] : b.terms_) a.add_term(e, c);
    return a;
  }
  friend Poly operator-(Poly a, const Poly& b) {
    for (const auto& [e, c] : b.terms_) a.add_term(e, -c);
    return a;
  }
  friend Poly operator*(const Rational& s, const Poly& a) {
    Poly r(a.nvars_);
    for (const auto& [e, c] : a.terms_) r.add_term(e, s * c);
    return r;
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly r(a.nvars_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponents e(a.nvars_);
        for (int k = 0; k < a.nvars_; ++k) e[k] = ea[k] + eb[k];
        r.add_term(std::move(e), ca * cb);
      }
    return r;
  }
  friend bool operator==(const Poly& a, const Poly& b) { return a.nvars_ == b.nvars_ && a.terms_ == b.terms_; }

 private:
  int nvars_ = 0;
  std::map<Exponents, Rational> terms_;
};

/// A polynomial prepared for repeated exact evaluation. Coordinates are split
/// into odd integer mantissas and binary exponents, so every term becomes an
/// integer over the common denominator lcm(coefficient denominators) * 2^(s * degree);
/// the final quotient is rounded once to nearest.
class PolyEval {
 public:
  using Int = boost::multiprecision::cpp_int;

  explicit PolyEval(const Poly& p) : nvars_(p.nvars()), deg_(p.degree()) {
    for (const auto& [e, c] : p.terms()) lcm_ = boost::multiprecision::lcm(lcm_, denominator(c));
    for (const auto& [e, c] : p.terms()) terms_.push_back({e, numerator(c) * (lcm_ / denominator(c))});
  }

  double operator()(std::span<const double> x) const {
    if (terms_.empty()) return 0.0;
    int s = 0;
    std::vector<long long> mant(nvars_);
    std::vector<int> ex(nvars_);
    for (int k = 0; k < nvars_; ++k) {
      int e = 53;
      const double m = x[k] == 0.0 ? 0.0 : std::frexp(x[k], &e);
      mant[k] = static_cast<long long>(std::ldexp(m, 53));
      ex[k] = e - 53;
      while (mant[k] != 0 && mant[k] % 2 == 0) {
        mant[k] /= 2;
        ++ex[k];
      }
      s = std::max(s, -ex[k]);
    }
    std::vector<std::vector<Int>> pw(nvars_);
    for (int k = 0; k < nvars_; ++k) {
      pw[k].reserve(kExponentCap + 1);
      pw[k].push_back(1);
      const Int xk = Int(mant[k]) << (ex[k] + s);
      for (int j = 1; j <= kExponentCap; ++j) pw[k].push_back(pw[k].back() * xk);
    }
    Int num = 0;
    for (const auto& t : terms_) {
      Int v = t.coef;
      int d = 0;
      for (int k = 0; k < nvars_; ++k) {
        if (t.exp[k]) v *= pw[k][t.exp[k]];
        d += t.exp[k];
      }
      num += v << (s * (deg_ - d));
    }
    if (num == 0) return 0.0;
    const bool neg = num < 0;
    if (neg) num = -num;
    const Int den = lcm_ << (s * deg_);
    // Quotient with at least 66 significant bits plus a sticky bit rounds correctly.
    const long shift = std::max<long>(0, long(msb(den)) - long(msb(num)) + 66);
    Int q, r;
    divide_qr(Int(num << shift), den, q, r);
    if (r != 0) q |= 1;
    const double v = std::ldexp(q.convert_to<double>(), -int(shift));
    return neg ? -v : v;
  }

 private:
  struct Term {
    std::vector<int> exp;
    Int coef;
  };
  int nvars_;
  int deg_;
  Int lcm_ = 1;
  std::vector<Term> terms_;
};

inline double Poly::operator()(std::span<const double> x) const { return PolyEval(*this)(x); }

/// Per-component polynomials: one for a scalar, N for a vector, N(N-1)/2 strictly-upper
/// pairs for an antisymmetric field.
struct PolyField {
  enum class Kind { scalar, vector, antisym };
  Kind kind = Kind::scalar;
  int dim = 0;
  std::vector<Poly> comps;

  friend bool operator==(const PolyField& a, const PolyField& b) {
    return a.kind == b.kind && a.dim == b.dim && a.comps == b.comps;
  }
  friend PolyField operator+(PolyField a, const PolyField& b) {
    for (std::size_t i = 0; i < a.comps.size(); ++i) a.comps[i] = a.comps[i] + b.comps[i];
    return a;
  }
  friend PolyField operator-(PolyField a, const PolyField& b) {
    for (std::size_t i = 0; i < a.comps.size(); ++i) a.comps[i] = a.comps[i] - b.comps[i];
    return a;
  }
  bool is_zero() const {
    for (const auto& c : comps)
      if (!c.is_zero()) return false;
    return true;
  }
  const Poly& upper(int i, int j) const { return comps[pair_index(dim, i, j)]; }
};

inline PolyField scalar_field(Poly p) {
  const int d = p.nvars();
  return {PolyField::Kind::scalar, d, {std::move(p)}};
}
inline PolyField vector_field(std::vector<Poly> c) {
  const int d = int(c.size());
  return {PolyField::Kind::vector, d, std::move(c)};
}
inline PolyField antisym_field(int dim, std::vector<Poly> upper) {
  if (int(upper.size()) != pair_count(dim)) throw std::invalid_argument("antisymmetric field needs N(N-1)/2 pairs");
  return {PolyField::Kind::antisym, dim, std::move(upper)};
}

inline void expect_kind(const PolyField& f, PolyField::Kind k, const char* op) {
  if (f.kind != k) throw std::invalid_argument(std::string(op) + ": wrong field kind");
}

inline PolyField poly_grad(const PolyField& f) {
  expect_kind(f, PolyField::Kind::scalar, "poly_grad");
  std::vector<Poly> c;
  for (int k = 0; k < f.dim; ++k) c.push_back(f.comps[0].derivative(k));
  return vector_field(std::move(c));
}

inline PolyField poly_div(const PolyField& v) {
  expect_kind(v, PolyField::Kind::vector, "poly_div");
  Poly s(v.dim);
  for (int k = 0; k < v.dim; ++k) s = s + v.comps[k].derivative(k);
  return scalar_field(std::move(s));
}

/// upper(i,j) = (d_i v_j - d_j v_i) / 2.
inline PolyField poly_curl(const PolyField& v) {
  expect_kind(v, PolyField::Kind::vector, "poly_curl");
  std::vector<Poly> up;
  for (int i = 0; i < v.dim; ++i)
    for (int j = i + 1; j < v.dim; ++j)
      up.push_back(Rational(1, 2) * (v.comps[j].derivative(i) - v.comps[i].derivative(j)));
  return antisym_field(v.dim, std::move(up));
}

/// Component i = sum_j 2 d_j A_ij.
inline PolyField poly_scurl(const PolyField& a) {
  expect_kind(a, PolyField::Kind::antisym, "poly_scurl");
  std::vector<Poly> c(a.dim, Poly(a.dim));
  for (int i = 0; i < a.dim; ++i)
    for (int j = i + 1; j < a.dim; ++j) {
      c[i] = c[i] + Rational(2) * a.upper(i, j).derivative(j);
      c[j] = c[j] - Rational(2) * a.upper(i, j).derivative(i);
    }
  return vector_field(std::move(c));
}

inline PolyField poly_laplacian(const PolyField& f) {
  PolyField r = f;
  for (auto& c : r.comps) {
    Poly s(f.dim);
    for (int k = 0; k < f.dim; ++k) s = s + c.derivative(k).derivative(k);
    c = std::move(s);
  }
  return r;
}

/// Random polynomial of total degree <= `degree` with coefficients p/q, |p| <= 9, q in 1..4.
inline Poly random_poly(int nvars, int degree, std::uint64_t seed, std::uint64_t stream = 0) {
  SmoothRandom rng(seed, stream);
  Poly p(nvars);
  std::vector<int> e(nvars, 0);
  // Enumerate every exponent vector with total degree <= degree.
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == nvars) {
      p.add_term(e, Rational(rng.integer(-9, 9), rng.integer(1, 4)));
      return;
    }
    for (int x = 0; x <= std::min(left, kExponentCap); ++x) {
      e[k] = x;
      rec(k + 1, left - x);
    }
    e[k] = 0;
  };
  rec(0, degree);
  return p;
}

inline PolyField random_poly_field(PolyField::Kind kind, int dim, int degree, std::uint64_t seed) {
  const int n = kind == PolyField::Kind::scalar ? 1 : kind == PolyField::Kind::vector ? dim : pair_count(dim);
  std::vector<Poly> c;
  for (int i = 0; i < n; ++i) c.push_back(random_poly(dim, degree, seed, std::uint64_t(i)));
  return {kind, dim, std::move(c)};
}

// ---- sampling onto grids -------------------------------------------------------

inline ScalarField sample_poly(const GridSpec& g, const Poly& p) {
  const PolyEval eval(p);
  return sample(g, [&](std::span<const double> x) { return eval(x); });
}

inline VectorField sample_vector(const GridSpec& g, const PolyField& f) {
  expect_kind(f, PolyField::Kind::vector, "sample_vector");
  std::vector<ScalarField> c;
  for (const auto& p : f.comps) c.push_back(sample_poly(g, p));
  return VectorField(std::move(c));
}

inline AntisymField sample_antisym(const GridSpec& g, const PolyField& f) {
  expect_kind(f, PolyField::Kind::antisym, "sample_antisym");
  std::vector<ScalarField> c;
  for (const auto& p : f.comps) c.push_back(sample_poly(g, p));
  return AntisymField(std::move(c));
}

}  // namespace vecpot::oracle
