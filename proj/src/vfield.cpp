#include "ktlab/vfield.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

namespace ktlab {

FieldExpression FieldExpression::first_order(const Polynomial& coeff, int slot) {
    FieldExpression e(coeff.dim());
    DerivKey k(coeff.nvars(), 0);
    k.at(slot) = 1;
    e.add_term(k, coeff);
    return e;
}

FieldExpression FieldExpression::multiplication(const Polynomial& coeff) {
    FieldExpression e(coeff.dim());
    e.add_term(DerivKey(coeff.nvars(), 0), coeff);
    return e;
}

int FieldExpression::order() const {
    int o = 0;
    for (const auto& [k, p] : terms_) {
        int s = 0;
        for (auto e : k) s += e;
        o = std::max(o, s);
    }
    return o;
}

bool FieldExpression::has_time_slot() const {
    for (const auto& [k, p] : terms_)
        if (k[0] != 0) return true;
    return false;
}

void FieldExpression::add_term(const DerivKey& k, const Polynomial& p) {
    if (p.is_zero()) return;
    auto it = terms_.find(k);
    if (it == terms_.end()) {
        terms_[k] = p;
    } else {
        it->second = it->second + p;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

FieldExpression FieldExpression::operator+(const FieldExpression& o) const {
    FieldExpression r = *this;
    for (const auto& [k, p] : o.terms_) r.add_term(k, p);
    return r;
}

FieldExpression FieldExpression::operator-(const FieldExpression& o) const {
    FieldExpression r = *this;
    for (const auto& [k, p] : o.terms_) r.add_term(k, -p);
    return r;
}

FieldExpression FieldExpression::operator*(const Rational& c) const {
    FieldExpression r(n_);
    if (c.is_zero()) return r;
    for (const auto& [k, p] : terms_) r.terms_[k] = p * c;
    return r;
}

FieldExpression FieldExpression::operator-() const { return *this * Rational(-1); }

namespace {

// enumerate gamma <= alpha componentwise (for the Leibniz rule)
void enumerate_subkeys(const DerivKey& alpha, std::size_t pos, DerivKey& cur,
                       const std::function<void(const DerivKey&)>& fn) {
    if (pos == alpha.size()) {
        fn(cur);
        return;
    }
    for (std::uint8_t e = 0; e <= alpha[pos]; ++e) {
        cur[pos] = e;
        enumerate_subkeys(alpha, pos + 1, cur, fn);
    }
    cur[pos] = 0;
}

std::int64_t binomial(int n, int k) {
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace

FieldExpression FieldExpression::compose(const FieldExpression& A, const FieldExpression& B) {
    if (A.n_ != B.n_) throw std::invalid_argument("compose: dimension mismatch");
    FieldExpression r(A.n_);
    // a d^alpha ( b d^beta f ) = sum_{gamma<=alpha} C(alpha,gamma)
    //                            a (d^{alpha-gamma} b) d^{gamma+beta} f
    for (const auto& [alpha, a] : A.terms_) {
        for (const auto& [beta, b] : B.terms_) {
            DerivKey cur(alpha.size(), 0);
            enumerate_subkeys(alpha, 0, cur, [&](const DerivKey& gamma) {
                Polynomial db = b;
                Rational binom(1);
                for (std::size_t v = 0; v < alpha.size(); ++v) {
                    binom *= Rational(binomial(alpha[v], gamma[v]));
                    for (int d = 0; d < alpha[v] - gamma[v]; ++d) db = db.derivative(static_cast<int>(v));
                    if (db.is_zero()) return;
                }
                DerivKey slot(alpha.size());
                for (std::size_t v = 0; v < slot.size(); ++v) {
                    int e = gamma[v] + beta[v];
                    if (e > 255) throw std::overflow_error("compose: slot overflow");
                    slot[v] = static_cast<std::uint8_t>(e);
                }
                r.add_term(slot, (a * db) * binom);
            });
        }
    }
    return r;
}

Polynomial FieldExpression::apply(const Polynomial& f) const {
    Polynomial r(n_);
    for (const auto& [k, c] : terms_) {
        Polynomial d = f;
        for (std::size_t v = 0; v < k.size(); ++v)
            for (int e = 0; e < k[v]; ++e) d = d.derivative(static_cast<int>(v));
        r = r + c * d;
    }
    return r;
}

std::string FieldExpression::to_string() const {
    if (terms_.empty()) return "0";
    std::string s;
    for (const auto& [k, p] : terms_) {
        if (!s.empty()) s += " + ";
        std::string slot;
        auto app = [&](const std::string& nm, int e) {
            if (e == 0) return;
            if (!slot.empty()) slot += " ";
            slot += "d/d" + nm;
            if (e > 1) slot += "^" + std::to_string(e);
        };
        app("t", k[0]);
        for (int i = 1; i <= n_; ++i) app("x" + std::to_string(i), k[i]);
        for (int i = 1; i <= n_; ++i) app("v" + std::to_string(i), k[n_ + i]);
        if (slot.empty())
            s += "(" + p.to_string() + ")";
        else
            s += "(" + p.to_string() + ") " + slot;
    }
    return s;
}

FieldExpression commutator(const FieldExpression& A, const FieldExpression& B) {
    return FieldExpression::compose(A, B) - FieldExpression::compose(B, A);
}

// --- gamma family --------------------------------------------------------

FieldExpression VectorFieldSymbol::expression() const {
    const int nn = n;
    auto one = Polynomial::constant(nn, Rational(1));
    switch (kind) {
        case SymbolKind::Translation:
            return FieldExpression::first_order(one, var_x(i, nn));
        case SymbolKind::Boost: {
            auto t = Polynomial::variable(nn, var_t());
            return FieldExpression::first_order(t, var_x(i, nn)) +
                   FieldExpression::first_order(one, var_v(i, nn));
        }
        case SymbolKind::Rotation: {
            if (i == j) return FieldExpression::zero(nn);
            if (i > j) return -VectorFieldSymbol::rotation(j, i, nn).expression();
            auto xi = Polynomial::variable(nn, var_x(i, nn));
            auto xj = Polynomial::variable(nn, var_x(j, nn));
            auto vi = Polynomial::variable(nn, var_v(i, nn));
            auto vj = Polynomial::variable(nn, var_v(j, nn));
            return FieldExpression::first_order(xi, var_x(j, nn)) -
                   FieldExpression::first_order(xj, var_x(i, nn)) +
                   FieldExpression::first_order(vi, var_v(j, nn)) -
                   FieldExpression::first_order(vj, var_v(i, nn));
        }
        case SymbolKind::Scaling: {
            FieldExpression e(nn);
            for (int a = 1; a <= nn; ++a) {
                e = e + FieldExpression::first_order(Polynomial::variable(nn, var_x(a, nn)), var_x(a, nn));
                e = e + FieldExpression::first_order(Polynomial::variable(nn, var_v(a, nn)), var_v(a, nn));
            }
            return e;
        }
    }
    throw std::logic_error("unreachable");
}

FieldExpression VectorFieldSymbol::macroscopic() const {
    const int nn = n;
    auto one = Polynomial::constant(nn, Rational(1));
    switch (kind) {
        case SymbolKind::Translation:
            return FieldExpression::first_order(one, var_x(i, nn));
        case SymbolKind::Boost:
            return FieldExpression::first_order(Polynomial::variable(nn, var_t()), var_x(i, nn));
        case SymbolKind::Rotation: {
            if (i == j) return FieldExpression::zero(nn);
            if (i > j) return -VectorFieldSymbol::rotation(j, i, nn).macroscopic();
            auto xi = Polynomial::variable(nn, var_x(i, nn));
            auto xj = Polynomial::variable(nn, var_x(j, nn));
            return FieldExpression::first_order(xi, var_x(j, nn)) -
                   FieldExpression::first_order(xj, var_x(i, nn));
        }
        case SymbolKind::Scaling: {
            FieldExpression e(nn);
            for (int a = 1; a <= nn; ++a)
                e = e + FieldExpression::first_order(Polynomial::variable(nn, var_x(a, nn)), var_x(a, nn));
            return e;
        }
    }
    throw std::logic_error("unreachable");
}

std::string VectorFieldSymbol::name() const {
    switch (kind) {
        case SymbolKind::Boost: return "B" + std::to_string(i);
        case SymbolKind::Translation: return "P" + std::to_string(i);
        case SymbolKind::Rotation: return "R" + std::to_string(i) + std::to_string(j);
        case SymbolKind::Scaling: return "S";
    }
    return "?";
}

std::vector<VectorFieldSymbol> make_gamma(int n) {
    if (n < 2) throw std::invalid_argument("make_gamma: n must be >= 2");
    std::vector<VectorFieldSymbol> g;
    g.reserve(gamma_size(n));
    for (int i = 1; i <= n; ++i) g.push_back(VectorFieldSymbol::boost(i, n));
    for (int i = 1; i <= n; ++i) g.push_back(VectorFieldSymbol::translation(i, n));
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) g.push_back(VectorFieldSymbol::rotation(i, j, n));
    g.push_back(VectorFieldSymbol::scaling(n));
    return g;
}

FieldExpression free_transport_operator(int n) {
    auto e = FieldExpression::first_order(Polynomial::constant(n, Rational(1)), var_t());
    for (int i = 1; i <= n; ++i)
        e = e + FieldExpression::first_order(Polynomial::variable(n, var_v(i, n)), var_x(i, n));
    return e;
}

FieldExpression laplacian_operator(int n) {
    FieldExpression e(n);
    for (int i = 1; i <= n; ++i) {
        DerivKey k(2 * n + 1, 0);
        k[var_x(i, n)] = 2;
        e.add_term(k, Polynomial::constant(n, Rational(1)));
    }
    return e;
}

std::vector<MultiIndex> multi_indices_up_to(int n_symbols, int N) {
    std::vector<MultiIndex> out;
    std::vector<MultiIndex> level{MultiIndex{}};
    for (int k = 1; k <= N; ++k) {
        std::vector<MultiIndex> next;
        for (const auto& m : level) {
            for (int s = 0; s < n_symbols; ++s) {
                MultiIndex mm = m;
                mm.push_back(s);
                next.push_back(mm);
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        level = std::move(next);
    }
    return out;
}

// --- express_in_basis ----------------------------------------------------

std::optional<std::vector<Rational>> express_in_basis(const FieldExpression& E,
                                                      const std::vector<FieldExpression>& basis) {
    // rows: distinct (slot, monomial) pairs across E and basis
    std::map<std::pair<DerivKey, Monomial>, std::size_t> rows;
    auto note = [&](const FieldExpression& f) {
        for (const auto& [k, p] : f.terms())
            for (const auto& [m, c] : p.terms())
                rows.emplace(std::make_pair(k, m), rows.size());
    };
    note(E);
    for (const auto& b : basis) note(b);

    const std::size_t R = rows.size(), C = basis.size();
    std::vector<std::vector<Rational>> A(R, std::vector<Rational>(C + 1, Rational(0)));
    auto fill = [&](const FieldExpression& f, std::size_t col) {
        for (const auto& [k, p] : f.terms())
            for (const auto& [m, c] : p.terms())
                A[rows.at({k, m})][col] = c;
    };
    for (std::size_t c = 0; c < C; ++c) fill(basis[c], c);
    fill(E, C);

    // exact Gaussian elimination
    std::size_t row = 0;
    std::vector<std::size_t> pivot_col;
    for (std::size_t col = 0; col < C && row < R; ++col) {
        std::size_t p = row;
        while (p < R && A[p][col].is_zero()) ++p;
        if (p == R) continue;
        std::swap(A[p], A[row]);
        Rational inv = Rational(1) / A[row][col];
        for (auto& v : A[row]) v = v * inv;
        for (std::size_t r = 0; r < R; ++r) {
            if (r == row || A[r][col].is_zero()) continue;
            Rational f = A[r][col];
            for (std::size_t c2 = col; c2 <= C; ++c2) A[r][c2] = A[r][c2] - f * A[row][c2];
        }
        pivot_col.push_back(col);
        ++row;
    }
    // inconsistent rows -> not in span
    for (std::size_t r = row; r < R; ++r)
        if (!A[r][C].is_zero()) return std::nullopt;

    std::vector<Rational> coeff(C, Rational(0));
    for (std::size_t r = 0; r < pivot_col.size(); ++r) coeff[pivot_col[r]] = A[r][C];
    return coeff;
}

// --- structure constants --------------------------------------------------

Rational laplacian_commutation(const VectorFieldSymbol& Z) {
    auto L = laplacian_operator(Z.n);
    auto C = commutator(Z.macroscopic(), L);
    if (C.is_zero()) return Rational(0);
    auto r = express_in_basis(C, {L});
    if (!r) throw std::logic_error("laplacian_commutation: [Z, Laplacian] is not a multiple of Laplacian");
    return (*r)[0];
}

RhoCommutation rho_commutation(const VectorFieldSymbol& Z) {
    // Z_macro rho(f) = rho(Z f) + div_v(b) rho(f) from integration by parts
    // in v; b are the coefficients of the d_v slots.
    auto E = Z.expression();
    const int n = Z.n;
    Polynomial div(n);
    for (const auto& [k, p] : E.terms()) {
        for (int i = 1; i <= n; ++i) {
            DerivKey want(2 * n + 1, 0);
            want[var_v(i, n)] = 1;
            if (k == want) div = div + p.derivative(var_v(i, n));
        }
    }
    if (!div.is_constant())
        throw std::logic_error("rho_commutation: v-divergence not constant");
    Rational c = div.constant_value();
    return {c.is_zero(), c};
}

TphiTemplate commute_with_tphi_order1(const VectorFieldSymbol& Z) {
    return {Z.kind == SymbolKind::Scaling ? Rational(-2) : Rational(0)};
}

bool verify_tphi_template(const VectorFieldSymbol& Z, const Polynomial& phi, const Rational& mu) {
    const int n = Z.n;
    // T_phi = T + mu sum_k d_x^k(phi) d_v^k with the given polynomial phi(t,x)
    auto Tphi = free_transport_operator(n);
    for (int k = 1; k <= n; ++k)
        Tphi = Tphi + FieldExpression::first_order(phi.derivative(var_x(k, n)), var_v(k, n)) * mu;

    auto lhs = commutator(Tphi, Z.expression());

    auto c = commute_with_tphi_order1(Z).c;
    auto zphi = Z.macroscopic().apply(phi);
    FieldExpression rhs(n);
    for (int k = 1; k <= n; ++k) {
        Polynomial factor = (zphi + phi * c).derivative(var_x(k, n));
        rhs = rhs + FieldExpression::first_order(factor, var_v(k, n)) * (-mu);
    }
    return lhs == rhs;
}

bool weighted_derivative_identity_check(int n, const std::vector<std::vector<double>>& points,
                                        double rel_tol, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coeff(-6, 6);
    // a few random quadratic polynomials in x only
    std::vector<Polynomial> polys;
    for (int trial = 0; trial < 4; ++trial) {
        Polynomial p(n);
        Monomial m(2 * n + 1, 0);
        p.add_term(m, Rational(coeff(rng)));
        for (int a = 1; a <= n; ++a) {
            Monomial ma(2 * n + 1, 0);
            ma[var_x(a, n)] = 1;
            p.add_term(ma, Rational(coeff(rng)));
            for (int b = a; b <= n; ++b) {
                Monomial mab(2 * n + 1, 0);
                mab[var_x(a, n)] += 1;
                mab[var_x(b, n)] += 1;
                p.add_term(mab, Rational(coeff(rng)));
            }
        }
        polys.push_back(p);
    }

    auto S = VectorFieldSymbol::scaling(n).macroscopic();
    double worst = 0.0;
    for (const auto& x : points) {
        if (x.size() != static_cast<std::size_t>(n))
            throw std::invalid_argument("weighted_derivative_identity_check: bad point size");
        double r2 = 0.0;
        for (double c : x) r2 += c * c;
        if (r2 == 0.0) throw std::invalid_argument("weighted_derivative_identity_check: x = 0 sample");
        double r = std::sqrt(r2);
        std::vector<double> pt(2 * n + 1, 0.0);
        for (int a = 0; a < n; ++a) pt[1 + a] = x[a];
        for (const auto& p : polys) {
            for (int i = 1; i <= n; ++i) {
                double lhs = r * p.derivative(var_x(i, n)).eval(pt);
                double rhs = 0.0;
                for (int j = 1; j <= n; ++j) {
                    if (j == i) continue;
                    auto om = VectorFieldSymbol::rotation(j, i, n).macroscopic();
                    rhs += x[j - 1] / r * om.apply(p).eval(pt);
                }
                rhs += x[i - 1] / r * S.apply(p).eval(pt);
                double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
                worst = std::max(worst, std::abs(lhs - rhs) / scale);
            }
        }
    }
    return worst < rel_tol;
}

FieldExpression comoving_pullback(const FieldExpression& E) {
    const int n = E.dim();
    // coefficient substitution x_i -> xi_i + t v_i (we reuse the x variable
    // names for xi)
    auto sub = [&](const Polynomial& p) {
        Polynomial q = p;
        for (int i = 1; i <= n; ++i) {
            auto repl = Polynomial::variable(n, var_x(i, n)) +
                        Polynomial::variable(n, var_t()) * Polynomial::variable(n, var_v(i, n));
            q = q.substitute(var_x(i, n), repl);
        }
        return q;
    };
    // slot images: d_x^i -> d_xi^i ; d_v^i -> d_v^i - t d_xi^i ;
    // d_t -> d_t - sum_i v^i d_xi^i
    auto t = Polynomial::variable(n, var_t());
    auto one = Polynomial::constant(n, Rational(1));
    std::vector<FieldExpression> image(2 * n + 1, FieldExpression(n));
    image[var_t()] = FieldExpression::first_order(one, var_t());
    for (int i = 1; i <= n; ++i)
        image[var_t()] = image[var_t()] -
                         FieldExpression::first_order(Polynomial::variable(n, var_v(i, n)), var_x(i, n));
    for (int i = 1; i <= n; ++i) {
        image[var_x(i, n)] = FieldExpression::first_order(one, var_x(i, n));
        image[var_v(i, n)] = FieldExpression::first_order(one, var_v(i, n)) -
                             FieldExpression::first_order(t, var_x(i, n));
    }

    FieldExpression out(n);
    for (const auto& [k, p] : E.terms()) {
        FieldExpression term = FieldExpression::multiplication(sub(p));
        for (std::size_t v = 0; v < k.size(); ++v)
            for (int e = 0; e < k[v]; ++e) term = FieldExpression::compose(term, image[v]);
        out = out + term;
    }
    return out;
}

// --- commuted field-equation sources -------------------------------------

std::vector<SourceTerm> field_source_expansion(bool yukawa, int n, const MultiIndex& gamma) {
    auto symbols = make_gamma(n);
    auto canon = [](std::vector<SourceTerm> terms) {
        std::map<std::pair<int, MultiIndex>, Rational> acc;
        for (auto& t : terms) {
            auto key = std::make_pair(t.convolutions, t.beta);
            auto it = acc.find(key);
            if (it == acc.end())
                acc[key] = t.coeff;
            else
                it->second += t.coeff;
        }
        std::vector<SourceTerm> out;
        for (auto& [k, c] : acc)
            if (!c.is_zero()) out.push_back({k.first, k.second, c});
        return out;
    };

    std::vector<SourceTerm> rhs{{0, {}, Rational(1)}};
    // peel symbols from the innermost outwards: gamma = (g1, ..., gk) with
    // Z^gamma = Z^{g1} ... Z^{gk} f, so the recursion adds g_k first.
    for (auto it = gamma.rbegin(); it != gamma.rend(); ++it) {
        const auto& Z = symbols.at(static_cast<std::size_t>(*it));
        Rational a = -laplacian_commutation(Z); // Delta Z = Z Delta + a Delta
        Rational cp = rho_commutation(Z).c;     // Z rho = rho(Zf) + cp rho
        std::vector<SourceTerm> next;
        for (const auto& term : rhs) {
            // a * (previous RHS) from the [Delta, Z] part
            if (!a.is_zero()) {
                next.push_back({term.convolutions, term.beta, a * term.coeff});
                if (yukawa) // Delta = (Delta - 1) + 1 adds one more kernel hop
                    next.push_back({term.convolutions + 1, term.beta, a * term.coeff});
            }
            // Z applied through the chain
            if (term.convolutions > 0 && Z.kind == SymbolKind::Scaling)
                throw std::invalid_argument(
                    "field_source_expansion: scaling outermost over a convolution chain is unsupported");
            MultiIndex beta = term.beta;
            beta.insert(beta.begin(), *it);
            next.push_back({term.convolutions, beta, term.coeff});
            if (!cp.is_zero()) next.push_back({term.convolutions, term.beta, cp * term.coeff});
        }
        rhs = canon(std::move(next));
    }
    return rhs;
}

} // namespace ktlab
