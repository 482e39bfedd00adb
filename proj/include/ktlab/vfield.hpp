#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ktlab/polynomial.hpp"

namespace ktlab {

// Differential operators with polynomial coefficients in (t, x, v).
// A term maps a derivative multi-slot (exponents over d/dt, d/dx^i, d/dv^i,
// same indexing as the polynomial variables) to its coefficient polynomial;
// the all-zero slot is the multiplication (zeroth-order) part.
using DerivKey = std::vector<std::uint8_t>;

class FieldExpression {
  public:
    FieldExpression() = default;
    explicit FieldExpression(int n) : n_(n) {}

    static FieldExpression zero(int n) { return FieldExpression(n); }
    // coefficient * single derivative slot (var indexing as in polynomial.hpp)
    static FieldExpression first_order(const Polynomial& coeff, int slot);
    static FieldExpression multiplication(const Polynomial& coeff);

    int dim() const { return n_; }
    bool is_zero() const { return terms_.empty(); }
    int order() const;
    bool has_time_slot() const;
    const std::map<DerivKey, Polynomial>& terms() const { return terms_; }

    void add_term(const DerivKey& k, const Polynomial& p);

    FieldExpression operator+(const FieldExpression& o) const;
    FieldExpression operator-(const FieldExpression& o) const;
    FieldExpression operator*(const Rational& c) const;
    FieldExpression operator-() const;
    bool operator==(const FieldExpression& o) const { return n_ == o.n_ && terms_ == o.terms_; }

    // operator composition A∘B via the Leibniz rule (exact)
    static FieldExpression compose(const FieldExpression& A, const FieldExpression& B);

    // apply to a polynomial (the operator acting on a function of (t,x,v))
    Polynomial apply(const Polynomial& f) const;

    std::string to_string() const;

  private:
    int n_ = 0;
    std::map<DerivKey, Polynomial> terms_;
};

// Lie bracket [A,B] = AB - BA
FieldExpression commutator(const FieldExpression& A, const FieldExpression& B);

// --- the commuting family gamma (Def 2.1) ------------------------------

enum class SymbolKind { Boost, Translation, Rotation, Scaling };

struct VectorFieldSymbol {
    SymbolKind kind;
    int i = 0; // 1-based axis; first rotation axis
    int j = 0; // second rotation axis
    int n = 0;

    static VectorFieldSymbol boost(int i, int n) { return {SymbolKind::Boost, i, 0, n}; }
    static VectorFieldSymbol translation(int i, int n) { return {SymbolKind::Translation, i, 0, n}; }
    static VectorFieldSymbol rotation(int i, int j, int n) { return {SymbolKind::Rotation, i, j, n}; }
    static VectorFieldSymbol scaling(int n) { return {SymbolKind::Scaling, 0, 0, n}; }

    // microscopic expression on (t,x,v); degenerate rotations normalize
    // (Omega_ii = 0, Omega_ij = -Omega_ji for i > j)
    FieldExpression expression() const;
    // macroscopic counterpart acting on functions of (t,x): d_x, t d_x,
    // Omega^x, S^x
    FieldExpression macroscopic() const;

    std::string name() const;
};

// Ordered family: boosts 1..n first (paper's ordering convention), then
// translations, rotations in lexicographic (i,j), scaling last.
// Size 2n + n(n-1)/2 + 1. Rejects n < 2.
std::vector<VectorFieldSymbol> make_gamma(int n);

inline std::size_t gamma_size(int n) {
    return static_cast<std::size_t>(2 * n + n * (n - 1) / 2 + 1);
}

// free transport operator T = d_t + sum v^i d_x^i
FieldExpression free_transport_operator(int n);

// Laplacian sum_i d^2/d(x^i)^2 as a second-order expression
FieldExpression laplacian_operator(int n);

// multi-index over the fixed gamma ordering (entries are 0-based indices);
// Z^alpha = Z^{alpha_1} ... Z^{alpha_k} applied right-to-left
using MultiIndex = std::vector<int>;

// all ordered multi-indices with 1 <= |alpha| <= N
std::vector<MultiIndex> multi_indices_up_to(int n_symbols, int N);

// --- structure-constant operations -------------------------------------

// exact rational coordinates of E in span(basis) with constant coefficients,
// or nullopt when E is not in the span
std::optional<std::vector<Rational>> express_in_basis(const FieldExpression& E,
                                                      const std::vector<FieldExpression>& basis);

// c with [Z, Laplacian] = c Laplacian, computed symbolically from the
// macroscopic expression; throws if the bracket is not a constant multiple
Rational laplacian_commutation(const VectorFieldSymbol& Z);

struct RhoCommutation {
    bool pass_through; // c == 0
    Rational c;        // Z rho(f) = rho(Z f) + c rho(f)
};
// computed from the v-divergence of the microscopic v-coefficients
RhoCommutation rho_commutation(const VectorFieldSymbol& Z);

struct TphiTemplate {
    Rational c; // [T_phi, Z] f = -mu sum_k d_x^k (Z phi + c phi) d_v^k f
};
TphiTemplate commute_with_tphi_order1(const VectorFieldSymbol& Z);

// exact check of the order-1 template against a concrete polynomial phi(t,x)
bool verify_tphi_template(const VectorFieldSymbol& Z, const Polynomial& phi, const Rational& mu);

// |x| d_x^i = sum_j (x^j/|x|) Omega^x_{ji} + (x^i/|x|) S^x checked pointwise
// on random polynomials at the given sample points; rejects x = 0 samples
bool weighted_derivative_identity_check(int n, const std::vector<std::vector<double>>& points,
                                        double rel_tol = 1e-12, unsigned seed = 12345);

// --- free-streaming-frame pullback --------------------------------------
// For g(t, xi, v) = f(t, xi + v t, v): substitutes x -> xi + v t in the
// coefficients and maps slots d_x -> d_xi, d_v -> d_v - t d_xi,
// d_t -> d_t - sum_i v^i d_xi^i. Exact; boosts become plain d_v.
FieldExpression comoving_pullback(const FieldExpression& E);

// --- commuted field-equation sources (Poisson / screened Poisson) -------
// Delta Z^gamma phi (poisson) or (Delta - 1) Z^gamma phi (yukawa) equals
// sum over terms of coeff * G1^{*(convolutions)} * rho(Z^beta f).
struct SourceTerm {
    int convolutions = 0; // extra G1 convolutions applied to rho(Z^beta f)
    MultiIndex beta;
    Rational coeff;
};
std::vector<SourceTerm> field_source_expansion(bool yukawa, int n, const MultiIndex& gamma);

} // namespace ktlab
