#include "ktlab/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ktlab {

Polynomial Polynomial::constant(int n, const Rational& c) {
    Polynomial p(n);
    if (!c.is_zero()) p.terms_[Monomial(2 * n + 1, 0)] = c;
    return p;
}

Polynomial Polynomial::variable(int n, int var) {
    Polynomial p(n);
    Monomial m(2 * n + 1, 0);
    m.at(var) = 1;
    p.terms_[m] = Rational(1);
    return p;
}

bool Polynomial::is_constant() const {
    if (terms_.empty()) return true;
    if (terms_.size() != 1) return false;
    const auto& m = terms_.begin()->first;
    return std::all_of(m.begin(), m.end(), [](std::uint8_t e) { return e == 0; });
}

Rational Polynomial::constant_value() const {
    if (terms_.empty()) return Rational(0);
    if (!is_constant()) throw std::logic_error("Polynomial: not a constant");
    return terms_.begin()->second;
}

int Polynomial::degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) {
        int s = 0;
        for (auto e : m) s += e;
        d = std::max(d, s);
    }
    return d;
}

void Polynomial::add_term(const Monomial& m, const Rational& c) {
    if (c.is_zero()) return;
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        terms_[m] = c;
    } else {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    Polynomial r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, c);
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    Polynomial r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
    return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    Polynomial r(n_);
    for (const auto& [ma, ca] : terms_) {
        for (const auto& [mb, cb] : o.terms_) {
            Monomial m(ma.size());
            for (std::size_t k = 0; k < m.size(); ++k) {
                int e = ma[k] + mb[k];
                if (e > 255) throw std::overflow_error("Polynomial: exponent overflow");
                m[k] = static_cast<std::uint8_t>(e);
            }
            r.add_term(m, ca * cb);
        }
    }
    return r;
}

Polynomial Polynomial::operator*(const Rational& c) const {
    Polynomial r(n_);
    if (c.is_zero()) return r;
    for (const auto& [m, cc] : terms_) r.terms_[m] = cc * c;
    return r;
}

Polynomial Polynomial::operator-() const { return *this * Rational(-1); }

Polynomial Polynomial::derivative(int var) const {
    Polynomial r(n_);
    for (const auto& [m, c] : terms_) {
        if (m[var] == 0) continue;
        Monomial d = m;
        d[var] -= 1;
        r.add_term(d, c * Rational(m[var]));
    }
    return r;
}

Polynomial Polynomial::substitute(int var, const Polynomial& p) const {
    Polynomial r(n_);
    for (const auto& [m, c] : terms_) {
        Monomial base = m;
        int e = base[var];
        base[var] = 0;
        Polynomial term(n_);
        term.terms_[base] = c;
        for (int k = 0; k < e; ++k) term = term * p;
        r = r + term;
    }
    return r;
}

double Polynomial::eval(std::span<const double> point) const {
    double acc = 0.0;
    for (const auto& [m, c] : terms_) {
        double v = c.to_double();
        for (std::size_t k = 0; k < m.size(); ++k)
            for (int e = 0; e < m[k]; ++e) v *= point[k];
        acc += v;
    }
    return acc;
}

void Polynomial::collapse(int var, std::span<const double> point, std::vector<double>& coeffs) const {
    coeffs.clear();
    for (const auto& [m, c] : terms_) {
        double v = c.to_double();
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (static_cast<int>(k) == var) continue;
            for (int e = 0; e < m[k]; ++e) v *= point[k];
        }
        std::size_t p = m[var];
        if (coeffs.size() <= p) coeffs.resize(p + 1, 0.0);
        coeffs[p] += v;
    }
    if (coeffs.empty()) coeffs.push_back(0.0);
}

std::string monomial_to_string(const Monomial& m, int n) {
    std::string s;
    auto app = [&](const std::string& name, int e) {
        if (e == 0) return;
        if (!s.empty()) s += "*";
        s += name;
        if (e > 1) s += "^" + std::to_string(e);
    };
    app("t", m[0]);
    for (int i = 1; i <= n; ++i) app("x" + std::to_string(i), m[i]);
    for (int i = 1; i <= n; ++i) app("v" + std::to_string(i), m[n + i]);
    return s;
}

std::string Polynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::string s;
    for (const auto& [m, c] : terms_) {
        if (!s.empty()) s += " + ";
        std::string mono = monomial_to_string(m, n_);
        if (mono.empty()) {
            s += c.to_string();
        } else if (c == Rational(1)) {
            s += mono;
        } else {
            s += c.to_string() + "*" + mono;
        }
    }
    return s;
}

} // namespace ktlab
