#include "ktlab/modified.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "ktlab/stencil.hpp"

namespace ktlab {

CoefficientField::CoefficientField(const GridSpec& spec, Frame frame) : spec_(spec), frame_(frame) {
    auto gamma = make_gamma(spec.n);
    for (std::size_t s = 0; s < gamma.size(); ++s) {
        if (gamma[s].kind == SymbolKind::Translation) continue;
        symbol_index_.push_back(static_cast<int>(s));
        std::vector<PhaseDensity> comps;
        for (int k = 0; k < spec.n; ++k) comps.emplace_back(spec, frame, 0.0);
        varphi_.push_back(std::move(comps));
    }
}

bool CoefficientField::stores(int gamma_index) const {
    return std::find(symbol_index_.begin(), symbol_index_.end(), gamma_index) != symbol_index_.end();
}

PhaseDensity& CoefficientField::varphi(int gamma_index, int k) {
    for (std::size_t s = 0; s < symbol_index_.size(); ++s)
        if (symbol_index_[s] == gamma_index) return varphi_[s][static_cast<std::size_t>(k)];
    throw std::invalid_argument("CoefficientField: symbol has no stored coefficients");
}

const PhaseDensity& CoefficientField::varphi(int gamma_index, int k) const {
    return const_cast<CoefficientField*>(this)->varphi(gamma_index, k);
}

void CoefficientField::set_time_tag(double t) {
    time_tag_ = t;
    for (auto& comps : varphi_)
        for (auto& g : comps) g.set_time_tag(t);
}

double CoefficientField::max_abs() const {
    double m = 0.0;
    for (const auto& comps : varphi_)
        for (const auto& g : comps)
            for (double v : g.values()) m = std::max(m, std::abs(v));
    return m;
}

void evolve_coefficients(CoefficientField& coeffs, const StepInfo& info, const PhaseDensity& f_after) {
    if (std::abs(coeffs.time_tag() - info.t0) > 1e-9)
        throw std::invalid_argument("evolve_coefficients: coefficient time tag out of sync");
    const SolverConfig& cfg = *info.cfg;
    if (!cfg.force_enabled || !info.field_mid || !info.field_start) {
        // zero source and zero advection: varphi stays put
        coeffs.set_time_tag(info.t0 + info.dt);
        return;
    }
    const double t0 = info.t0, dt = info.dt;
    const double t_mid = t0 + dt / 2.0;
    const int n = coeffs.n();
    auto gamma = make_gamma(n);

    // macroscopic Z^i phi fields at the midpoint (commuted solves), shared by
    // all components of symbol i
    std::vector<SpatialField> source_fields; // per stored symbol and component: d_x^k (Z^i phi + c_i phi)
    std::vector<int> source_symbol;
    for (int gi : coeffs.stored_symbols()) {
        FieldSolution zphi = commuted_field(f_after, cfg, MultiIndex{gi}, t_mid);
        double ci = commute_with_tphi_order1(gamma[static_cast<std::size_t>(gi)]).c.to_double();
        // combined = Z^i phi + c_i phi
        SpatialField combined = zphi.phi;
        if (ci != 0.0) {
            const double* phi_mid = info.field_mid->phi.component(0);
            double* dst = combined.component(0);
            if (info.field_mid->phi.size() == combined.size()) {
                for (std::int64_t c = 0; c < combined.cells(); ++c) dst[c] += ci * phi_mid[c];
            } else {
                for (std::int64_t c = 0; c < combined.cells(); ++c) {
                    // differing macro grids: interpolate
                    std::int64_t rem = c;
                    double pos[3];
                    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
                    for (int a = n - 2; a >= 0; --a)
                        strides[static_cast<std::size_t>(a)] =
                            strides[static_cast<std::size_t>(a + 1)] * combined.size();
                    for (int a = 0; a < n; ++a) {
                        std::int64_t i = rem / strides[static_cast<std::size_t>(a)];
                        rem %= strides[static_cast<std::size_t>(a)];
                        pos[a] = combined.coord(static_cast<int>(i));
                    }
                    dst[c] += ci * info.field_mid->phi.interpolate(0, pos);
                }
            }
        }
        SpatialField grad = spatial_gradient(combined);
        for (int k = 0; k < n; ++k) {
            SpatialField comp(n, grad.extent(), grad.size(), 1, t_mid);
            const double* src = grad.component(k);
            double* dst = comp.component(0);
            for (std::int64_t c = 0; c < comp.cells(); ++c) dst[c] = src[c];
            source_fields.push_back(std::move(comp));
            source_symbol.push_back(gi);
        }
    }

    // Strang step identical to f's, with the source added at the midpoint
    std::size_t field_idx = 0;
    for (int gi : coeffs.stored_symbols()) {
        for (int k = 0; k < n; ++k, ++field_idx) {
            PhaseDensity& g = coeffs.varphi(gi, k);
            advect_xi_force(g, *info.field_start, cfg.mu, t0 + dt / 4.0, t0 + dt / 4.0, dt / 2.0);
            // midpoint source mu * t * d_x^k (Z^i phi + c_i phi) gathered at
            // x = xi + v t_mid and broadcast across v
            const SpatialField& S = source_fields[field_idx];
            const std::int64_t total = g.spec().total_cells();
            const bool com = g.frame() == Frame::Comoving;
#pragma omp parallel for schedule(static)
            for (std::int64_t idx = 0; idx < total; ++idx) {
                std::int64_t rem = idx;
                double pos[3], vc[3];
                for (int a = 0; a < 2 * n; ++a) {
                    std::int64_t i = rem / g.stride(a);
                    rem %= g.stride(a);
                    if (a < n)
                        pos[a] = g.axis_coord(a, i);
                    else
                        vc[a - n] = g.axis_coord(a, i);
                }
                if (com)
                    for (int a = 0; a < n; ++a) pos[a] += vc[a] * t_mid;
                g.values()[static_cast<std::size_t>(idx)] +=
                    dt * cfg.mu * t_mid * S.interpolate(0, pos);
            }
            advect_v_kick_comoving(g, *info.field_mid, cfg.mu, t_mid, dt);
            advect_xi_force(g, *info.field_mid, cfg.mu, t0 + 3.0 * dt / 4.0, t0 + 3.0 * dt / 4.0,
                            dt / 2.0);
        }
    }
    coeffs.set_time_tag(t0 + dt);
}

PhaseDensity apply_modified_field(const PhaseDensity& f, int gamma_index,
                                  const CoefficientField& coeffs, double t) {
    const int n = f.spec().n;
    auto gamma = make_gamma(n);
    PhaseDensity zf = apply_vfield(f, gamma[static_cast<std::size_t>(gamma_index)].expression(), t);
    if (!coeffs.stores(gamma_index)) return zf; // translations: Y = Z
    for (int k = 0; k < n; ++k) {
        const PhaseDensity& phik = coeffs.varphi(gamma_index, k);
        if (!(phik.spec() == f.spec()))
            throw std::invalid_argument("apply_modified_field: coefficient grid mismatch");
        PhaseDensity dxf = apply_vfield(
            f, FieldExpression::first_order(Polynomial::constant(n, Rational(1)), var_x(k + 1, n)), t);
        double* dst = zf.values().data();
        const double* c = phik.values().data();
        const double* d = dxf.values().data();
        const std::int64_t total = f.spec().total_cells();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < total; ++i) dst[i] -= c[i] * d[i];
    }
    return zf;
}

EnergyBreakdown modified_energy(const PhaseDensity& f, const CoefficientField& coeffs, int N, double t) {
    const int n = f.spec().n;
    if (N < 0 || N > 3) throw std::invalid_argument("modified_energy: N out of the stencil budget");
    auto gamma = make_gamma(n);
    EnergyBreakdown out;
    out.terms.emplace_back(MultiIndex{}, l1_norm(f));
    out.total = out.terms.back().second;
    if (N == 0) return out;
    std::function<void(const PhaseDensity&, const MultiIndex&)> walk =
        [&](const PhaseDensity& parent, const MultiIndex& prefix) {
            if (static_cast<int>(prefix.size()) == N) return;
            for (std::size_t s = 0; s < gamma.size(); ++s) {
                MultiIndex idx = prefix;
                idx.push_back(static_cast<int>(s));
                PhaseDensity child = apply_modified_field(parent, static_cast<int>(s), coeffs, t);
                MultiIndex paper_order(idx.rbegin(), idx.rend());
                double norm = l1_norm(child);
                out.terms.emplace_back(paper_order, norm);
                out.total += norm;
                walk(child, idx);
            }
        };
    walk(f, {});
    return out;
}

double modified_ks_ratio(const PhaseDensity& f, const CoefficientField& coeffs, double t, int macro_n,
                         double margin) {
    const int n = f.spec().n;
    auto en = modified_energy(f, coeffs, n, t);
    if (en.total == 0.0) return 0.0;
    double extent = f.spec().x_extent + f.spec().v_extent * std::abs(t) + margin;
    SpatialField rho_abs = rho_on_grid(f, extent, macro_n, true);
    const double* p = rho_abs.component(0);
    double sup = 0.0;
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a)
        strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * macro_n;
    for (std::int64_t idx = 0; idx < rho_abs.cells(); ++idx) {
        std::int64_t rem = idx;
        double r2 = 0.0;
        for (int a = 0; a < n; ++a) {
            std::int64_t i = rem / strides[static_cast<std::size_t>(a)];
            rem %= strides[static_cast<std::size_t>(a)];
            double c = rho_abs.coord(static_cast<int>(i));
            r2 += c * c;
        }
        sup = std::max(sup, std::pow(1.0 + t + std::sqrt(r2), n) * p[idx]);
    }
    return sup / en.total;
}

CommutationResidual commutation_residual(const PhaseDensity& f, const CoefficientField& coeffs,
                                         int gamma_index, const SolverConfig& cfg, double t) {
    const int n = f.spec().n;
    auto gamma = make_gamma(n);
    const auto& Z = gamma[static_cast<std::size_t>(gamma_index)];
    double ci = commute_with_tphi_order1(Z).c.to_double();

    // field pieces: phi, Z^i phi (commuted solve), second derivatives of phi
    FieldSolution phi_sol = solve_macro(cfg, f).sol;
    FieldSolution zphi = commuted_field(f, cfg, MultiIndex{gamma_index}, t);
    SpatialField combined = zphi.phi;
    {
        double* dst = combined.component(0);
        const double* src = phi_sol.phi.component(0);
        for (std::int64_t c = 0; c < combined.cells(); ++c) dst[c] += ci * src[c];
    }
    SpatialField grad_comb = spatial_gradient(combined); // d_x^k (Z^i phi + c_i phi)

    // derivative grids of f
    std::vector<PhaseDensity> dvf, dxf, zkf;
    for (int k = 0; k < n; ++k) {
        auto dx = FieldExpression::first_order(Polynomial::constant(n, Rational(1)), var_x(k + 1, n));
        auto dv = FieldExpression::first_order(Polynomial::constant(n, Rational(1)), var_v(k + 1, n));
        dxf.push_back(apply_vfield(f, dx, t));
        dvf.push_back(apply_vfield(f, dv, t));
        zkf.push_back(apply_vfield(f, gamma[static_cast<std::size_t>(k)].expression(), t)); // boosts come first
    }
    SpatialField hess[3]; // d_x^k of each grad component handled per use
    for (int j = 0; j < n; ++j) {
        SpatialField comp(n, phi_sol.phi.extent(), phi_sol.phi.size(), 1, t);
        double* dst = comp.component(0);
        const double* src = phi_sol.grad_phi.component(j);
        for (std::int64_t c = 0; c < comp.cells(); ++c) dst[c] = src[c];
        hess[j] = spatial_gradient(comp); // components k: d_k d_j phi
    }

    const double cellw = f.spec().cell_volume();
    const std::int64_t total = f.spec().total_cells();
    const bool com = f.frame() == Frame::Comoving;
    const double mu = cfg.mu;

    double acc_unmod = 0.0, acc_nobad = 0.0, acc_mod = 0.0;
    const int K = 16;
    std::vector<double> pu(K, 0.0), pn(K, 0.0), pm(K, 0.0);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        std::int64_t lo = total * k / K, hi = total * (k + 1) / K;
        double su = 0, sn = 0, sm = 0;
        for (std::int64_t idx = lo; idx < hi; ++idx) {
            std::int64_t rem = idx;
            double pos[3], vc[3];
            for (int a = 0; a < 2 * n; ++a) {
                std::int64_t i = rem / f.stride(a);
                rem %= f.stride(a);
                if (a < n)
                    pos[a] = f.axis_coord(a, i);
                else
                    vc[a - n] = f.axis_coord(a, i);
            }
            if (com)
                for (int a = 0; a < n; ++a) pos[a] += vc[a] * t;
            double term_unmod = 0.0, term_nobad = 0.0, term_mod = 0.0;
            for (int kk = 0; kk < n; ++kk) {
                double gk = grad_comb.interpolate(kk, pos);
                double dv = dvf[static_cast<std::size_t>(kk)].values()[static_cast<std::size_t>(idx)];
                double zk = zkf[static_cast<std::size_t>(kk)].values()[static_cast<std::size_t>(idx)];
                term_unmod += -mu * gk * dv;
                term_nobad += -mu * gk * zk;
            }
            term_mod = term_nobad;
            if (coeffs.stores(gamma_index)) {
                for (int kk = 0; kk < n; ++kk) {
                    double ph = coeffs.varphi(gamma_index, kk).values()[static_cast<std::size_t>(idx)];
                    if (ph == 0.0) continue;
                    for (int j = 0; j < n; ++j) {
                        double hkj = hess[j].interpolate(kk, pos); // d_k d_j phi
                        double zj = zkf[static_cast<std::size_t>(j)].values()[static_cast<std::size_t>(idx)];
                        double dxj = dxf[static_cast<std::size_t>(j)].values()[static_cast<std::size_t>(idx)];
                        term_mod += mu * ph * hkj * zj - mu * t * ph * hkj * dxj;
                    }
                }
            }
            su += std::abs(term_unmod);
            sn += std::abs(term_nobad);
            sm += std::abs(term_mod);
        }
        pu[static_cast<std::size_t>(k)] = su * cellw;
        pn[static_cast<std::size_t>(k)] = sn * cellw;
        pm[static_cast<std::size_t>(k)] = sm * cellw;
    }
    for (int k = 0; k < K; ++k) {
        acc_unmod += pu[static_cast<std::size_t>(k)];
        acc_nobad += pn[static_cast<std::size_t>(k)];
        acc_mod += pm[static_cast<std::size_t>(k)];
    }
    return {acc_unmod, acc_nobad, acc_mod};
}

} // namespace ktlab
