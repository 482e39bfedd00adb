#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ktlab/rational.hpp"

namespace ktlab {

// Polynomials with rational coefficients in the phase-space variables
// (t, x^1..x^n, v^1..v^n).  Variable index 0 is t, 1..n are x, n+1..2n are v.
// Canonical form: monomials stored sorted (map over exponent vectors), no
// zero coefficients.
using Monomial = std::vector<std::uint8_t>;

inline int var_t() { return 0; }
inline int var_x(int i, int /*n*/) { return i; }            // i in 1..n
inline int var_v(int i, int n) { return n + i; }            // i in 1..n

class Polynomial {
  public:
    Polynomial() = default;
    explicit Polynomial(int n) : n_(n) {}

    static Polynomial constant(int n, const Rational& c);
    static Polynomial variable(int n, int var);

    int dim() const { return n_; }
    int nvars() const { return 2 * n_ + 1; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    Rational constant_value() const; // throws unless degree 0
    int degree() const;

    const std::map<Monomial, Rational>& terms() const { return terms_; }

    void add_term(const Monomial& m, const Rational& c);

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(const Rational& c) const;
    Polynomial operator-() const;
    bool operator==(const Polynomial& o) const { return n_ == o.n_ && terms_ == o.terms_; }

    // d/d(var)
    Polynomial derivative(int var) const;

    // substitute variable `var` by polynomial `p` (exact expansion)
    Polynomial substitute(int var, const Polynomial& p) const;

    // numeric evaluation; point has nvars() entries ordered (t, x, v)
    double eval(std::span<const double> point) const;

    // collapse to a univariate polynomial in `var`, all other variables fixed
    // at the given point (the entry for `var` is ignored); returns dense
    // coefficients c[k] of var^k
    void collapse(int var, std::span<const double> point, std::vector<double>& coeffs) const;

    std::string to_string() const;

  private:
    int n_ = 0;
    std::map<Monomial, Rational> terms_;
};

std::string monomial_to_string(const Monomial& m, int n);

} // namespace ktlab
