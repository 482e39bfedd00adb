#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ktlab/vfield.hpp"

using namespace ktlab;

namespace {

Polynomial random_poly(int n, int max_degree, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coeff(-5, 5);
    std::uniform_int_distribution<int> pick(0, 2 * n);
    Polynomial p(n);
    for (int trial = 0; trial < 6; ++trial) {
        Monomial m(static_cast<std::size_t>(2 * n + 1), 0);
        int deg = static_cast<int>(rng() % static_cast<unsigned>(max_degree + 1));
        for (int d = 0; d < deg; ++d) m[static_cast<std::size_t>(pick(rng))] += 1;
        p.add_term(m, Rational(coeff(rng)));
    }
    return p;
}

FieldExpression random_first_order(int n, std::mt19937_64& rng) {
    FieldExpression e(n);
    for (int slot = 0; slot <= 2 * n; ++slot) {
        if (rng() % 2) continue;
        e = e + FieldExpression::first_order(random_poly(n, 2, rng), slot);
    }
    e = e + FieldExpression::multiplication(random_poly(n, 2, rng));
    return e;
}

} // namespace

TEST_CASE("gamma family size and ordering") {
    CHECK(make_gamma(2).size() == 6);  // 2n + n(n-1)/2 + 1
    CHECK(make_gamma(3).size() == 10);
    CHECK(make_gamma(4).size() == 15);
    CHECK_THROWS(make_gamma(1));
    auto g = make_gamma(3);
    for (int i = 0; i < 3; ++i) {
        CHECK(g[static_cast<std::size_t>(i)].kind == SymbolKind::Boost);
        CHECK(g[static_cast<std::size_t>(i)].i == i + 1);
    }
    CHECK(g.back().kind == SymbolKind::Scaling);
}

TEST_CASE("every field in gamma commutes with free transport") {
    for (int n = 2; n <= 6; ++n) {
        auto T = free_transport_operator(n);
        for (const auto& Z : make_gamma(n)) {
            CHECK(commutator(T, Z.expression()).is_zero());
        }
    }
}

TEST_CASE("commutator algebra: antisymmetry and Jacobi") {
    std::mt19937_64 rng(42);
    for (int n : {2, 3}) {
        for (int trial = 0; trial < 5; ++trial) {
            auto A = random_first_order(n, rng);
            auto B = random_first_order(n, rng);
            auto C = random_first_order(n, rng);
            CHECK(commutator(A, A).is_zero());
            CHECK((commutator(A, B) + commutator(B, A)).is_zero());
            auto jac = commutator(A, commutator(B, C)) + commutator(B, commutator(C, A)) +
                       commutator(C, commutator(A, B));
            CHECK(jac.is_zero());
        }
    }
}

TEST_CASE("rotation against translation gives the other translation") {
    const int n = 2;
    auto omega = VectorFieldSymbol::rotation(1, 2, n).expression();
    auto d1 = VectorFieldSymbol::translation(1, n).expression();
    auto d2 = VectorFieldSymbol::translation(2, n).expression();
    CHECK(commutator(omega, d1) == -d2);
}

TEST_CASE("degenerate rotations normalize") {
    CHECK(VectorFieldSymbol::rotation(2, 2, 3).expression().is_zero());
    auto a = VectorFieldSymbol::rotation(2, 1, 3).expression();
    auto b = VectorFieldSymbol::rotation(1, 2, 3).expression();
    CHECK((a + b).is_zero());
}

TEST_CASE("pairwise commutators stay in the span of gamma") {
    for (int n : {2, 3, 4}) {
        auto gamma = make_gamma(n);
        std::vector<FieldExpression> basis;
        for (const auto& Z : gamma) basis.push_back(Z.expression());
        for (const auto& A : gamma) {
            for (const auto& B : gamma) {
                auto C = commutator(A.expression(), B.expression());
                auto coeff = express_in_basis(C, basis);
                REQUIRE(coeff.has_value());
                // verify the expansion reproduces C exactly
                FieldExpression rebuilt(n);
                for (std::size_t i = 0; i < basis.size(); ++i) rebuilt = rebuilt + basis[i] * (*coeff)[i];
                CHECK(rebuilt == C);
            }
        }
    }
}

TEST_CASE("express_in_basis edge cases") {
    const int n = 2;
    std::vector<FieldExpression> dxs;
    for (int i = 1; i <= n; ++i)
        dxs.push_back(VectorFieldSymbol::translation(i, n).expression());
    auto zero = FieldExpression::zero(n);
    auto c = express_in_basis(zero, dxs);
    REQUIRE(c.has_value());
    for (const auto& v : *c) CHECK(v.is_zero());

    auto dt = FieldExpression::first_order(Polynomial::constant(n, Rational(1)), var_t());
    CHECK(!express_in_basis(dt, dxs).has_value());

    // [Z, d_x^i] expands over the translations with constant coefficients
    auto gamma = make_gamma(n);
    for (const auto& Z : gamma) {
        for (int i = 1; i <= n; ++i) {
            auto C = commutator(Z.expression(), VectorFieldSymbol::translation(i, n).expression());
            CHECK(express_in_basis(C, dxs).has_value());
        }
    }
}

TEST_CASE("laplacian commutation constants") {
    for (int n : {2, 3}) {
        for (const auto& Z : make_gamma(n)) {
            Rational c = laplacian_commutation(Z);
            if (Z.kind == SymbolKind::Scaling)
                CHECK(c == Rational(-2));
            else
                CHECK(c.is_zero());
        }
    }
}

TEST_CASE("velocity-average commutation constants") {
    for (int n : {2, 3}) {
        for (const auto& Z : make_gamma(n)) {
            auto rc = rho_commutation(Z);
            if (Z.kind == SymbolKind::Scaling) {
                CHECK(rc.c == Rational(n));
                CHECK(!rc.pass_through);
            } else {
                CHECK(rc.pass_through);
                CHECK(rc.c.is_zero());
            }
        }
    }
}

TEST_CASE("perturbed-transport commutation template") {
    std::mt19937_64 rng(7);
    for (int n : {2, 3}) {
        // random polynomial potential phi(t, x)
        Polynomial phi(n);
        std::uniform_int_distribution<int> coeff(-4, 4);
        for (int trial = 0; trial < 8; ++trial) {
            Monomial m(static_cast<std::size_t>(2 * n + 1), 0);
            m[0] = static_cast<std::uint8_t>(rng() % 2);
            for (int i = 1; i <= n; ++i) m[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng() % 3);
            phi.add_term(m, Rational(coeff(rng)));
        }
        for (const auto& Z : make_gamma(n)) {
            auto tmpl = commute_with_tphi_order1(Z);
            if (Z.kind == SymbolKind::Scaling)
                CHECK(tmpl.c == Rational(-2));
            else
                CHECK(tmpl.c.is_zero());
            CHECK(verify_tphi_template(Z, phi, Rational(1)));
            CHECK(verify_tphi_template(Z, phi, Rational(-1)));
        }
    }
}

TEST_CASE("weighted derivative identity") {
    std::mt19937_64 rng(11);
    for (int n : {2, 3}) {
        std::vector<std::vector<double>> pts;
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> x(static_cast<std::size_t>(n));
            double r2 = 0;
            for (auto& c : x) { c = u(rng); r2 += c * c; }
            if (r2 < 1e-4) x[0] += 1.0;
            pts.push_back(x);
        }
        CHECK(weighted_derivative_identity_check(n, pts));
    }
    // axis-aligned point
    CHECK(weighted_derivative_identity_check(3, {{1.0, 0.0, 0.0}}));
    CHECK_THROWS(weighted_derivative_identity_check(2, {{0.0, 0.0}}));
}

TEST_CASE("free-streaming pullback maps the family to t-independent fields") {
    const int n = 2;
    auto t = Polynomial::variable(n, var_t());
    auto one = Polynomial::constant(n, Rational(1));

    auto boost = VectorFieldSymbol::boost(1, n).expression();
    CHECK(comoving_pullback(boost) == FieldExpression::first_order(one, var_v(1, n)));

    auto trans = VectorFieldSymbol::translation(2, n).expression();
    CHECK(comoving_pullback(trans) == trans);

    CHECK(comoving_pullback(free_transport_operator(n)) ==
          FieldExpression::first_order(one, var_t()));

    // rotation and scaling keep their (xi, v) form
    auto rot = VectorFieldSymbol::rotation(1, 2, n).expression();
    CHECK(comoving_pullback(rot) == rot);
    auto scal = VectorFieldSymbol::scaling(n).expression();
    CHECK(comoving_pullback(scal) == scal);
    (void)t;
}

TEST_CASE("pullback is the exact chain rule on polynomials") {
    std::mt19937_64 rng(5);
    const int n = 2;
    auto subst = [&](const Polynomial& p) {
        Polynomial q = p;
        for (int i = 1; i <= n; ++i) {
            auto repl = Polynomial::variable(n, var_x(i, n)) +
                        Polynomial::variable(n, var_t()) * Polynomial::variable(n, var_v(i, n));
            q = q.substitute(var_x(i, n), repl);
        }
        return q;
    };
    for (int trial = 0; trial < 6; ++trial) {
        auto E = random_first_order(n, rng);
        auto f = random_poly(n, 2, rng);
        CHECK(subst(E.apply(f)) == comoving_pullback(E).apply(subst(f)));
    }
}

TEST_CASE("multi-index enumeration") {
    CHECK(multi_indices_up_to(6, 1).size() == 6);
    CHECK(multi_indices_up_to(6, 2).size() == 42);
    CHECK(multi_indices_up_to(10, 2).size() == 110);
}

TEST_CASE("commuted source expansions at low order") {
    const int n = 2;
    auto gamma = make_gamma(n);
    int scaling_idx = -1, boost_idx = 0;
    for (std::size_t i = 0; i < gamma.size(); ++i)
        if (gamma[i].kind == SymbolKind::Scaling) scaling_idx = static_cast<int>(i);

    // empty index: Delta phi = rho(f)
    auto base = field_source_expansion(false, n, {});
    REQUIRE(base.size() == 1);
    CHECK(base[0].convolutions == 0);
    CHECK(base[0].beta.empty());
    CHECK(base[0].coeff == Rational(1));

    // boost: pass-through
    auto b = field_source_expansion(true, n, {boost_idx});
    REQUIRE(b.size() == 1);
    CHECK(b[0].beta == MultiIndex{boost_idx});
    CHECK(b[0].coeff == Rational(1));

    // scaling, poisson: Delta(S phi) = rho(Sf) + (n+2) rho(f)
    auto sp = field_source_expansion(false, n, {scaling_idx});
    REQUIRE(sp.size() == 2);
    bool saw_s = false, saw_plain = false;
    for (const auto& t : sp) {
        if (t.beta == MultiIndex{scaling_idx}) { saw_s = true; CHECK(t.coeff == Rational(1)); }
        if (t.beta.empty()) { saw_plain = true; CHECK(t.coeff == Rational(n + 2)); CHECK(t.convolutions == 0); }
    }
    CHECK(saw_s);
    CHECK(saw_plain);

    // scaling, yukawa: extra kernel hop with weight 2
    auto sy = field_source_expansion(true, n, {scaling_idx});
    REQUIRE(sy.size() == 3);
    bool saw_conv = false;
    for (const auto& t : sy)
        if (t.convolutions == 1) { saw_conv = true; CHECK(t.beta.empty()); CHECK(t.coeff == Rational(2)); }
    CHECK(saw_conv);

    // scaling twice over the screened chain is the one unsupported case
    CHECK_THROWS(field_source_expansion(true, n, {scaling_idx, scaling_idx}));
    CHECK_NOTHROW(field_source_expansion(false, n, {scaling_idx, scaling_idx}));
    CHECK_NOTHROW(field_source_expansion(true, n, {boost_idx, scaling_idx}));

    // constants stay computable (and finite) through order 3
    for (const auto& alpha : multi_indices_up_to(static_cast<int>(gamma.size()), 3)) {
        bool has_chain_scaling = false;
        // skip the known-unsupported combinations
        try {
            auto terms = field_source_expansion(true, n, alpha);
            for (const auto& t : terms) CHECK(std::abs(t.coeff.to_double()) < 1e6);
        } catch (const std::invalid_argument&) {
            has_chain_scaling = true;
        }
        (void)has_chain_scaling;
        auto terms_p = field_source_expansion(false, n, alpha);
        for (const auto& t : terms_p) CHECK(std::abs(t.coeff.to_double()) < 1e6);
    }
}

TEST_CASE("canonical text form") {
    const int n = 2;
    auto boost = VectorFieldSymbol::boost(1, n).expression();
    CHECK(boost.to_string() == "(1) d/dv1 + (t) d/dx1");
    auto p = Polynomial::variable(n, var_x(1, n)) * Polynomial::variable(n, var_x(1, n)) * Rational(3, 2) +
             Polynomial::constant(n, Rational(-1, 3));
    CHECK(p.to_string() == "-1/3 + 3/2*x1^2");
}
