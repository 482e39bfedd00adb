#include "ktlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ktlab/stencil.hpp"

namespace ktlab {

EnergyBreakdown energy_N(const PhaseDensity& f, int N, double t) {
    const int n = f.spec().n;
    // each application consumes 2 cells of one-sided stencil validity
    if (N < 0 || N > 3) throw std::invalid_argument("energy_N: N out of the stencil budget");
    auto gamma = make_gamma(n);
    EnergyBreakdown out;
    out.terms.emplace_back(MultiIndex{}, l1_norm(f));
    out.total = out.terms.back().second;
    if (N == 0) return out;

    // depth-first over the prefix tree so each level reuses its parent grid
    std::function<void(const PhaseDensity&, const MultiIndex&)> walk =
        [&](const PhaseDensity& parent, const MultiIndex& prefix) {
            if (static_cast<int>(prefix.size()) == N) return;
            for (std::size_t s = 0; s < gamma.size(); ++s) {
                // leftmost symbol acts last: extend the prefix on the right so
                // Z^{prefix + s} = Z^{prefix} applied after Z^s... we build
                // compositions outermost-first: child = Z_s applied to parent
                MultiIndex idx = prefix;
                idx.push_back(static_cast<int>(s));
                PhaseDensity child = apply_vfield(parent, gamma[s].expression(), t);
                // idx read right-to-left matches Z^{idx} = Z^{idx_1}...Z^{idx_k}
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

double ks_ratio(const PhaseDensity& f, double t, int macro_n, double margin) {
    const int n = f.spec().n;
    auto en = energy_N(f, n, t);
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
        double w = std::pow(1.0 + t + std::sqrt(r2), n);
        sup = std::max(sup, w * p[idx]);
    }
    return sup / en.total;
}

DecayFit decay_fit(const Series& series, double t0, double t1) {
    DecayFit fit;
    fit.t0 = t0;
    fit.t1 = t1;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < series.t.size(); ++i) {
        double t = series.t[i];
        if (t < t0 - 1e-12 || t > t1 + 1e-12) continue;
        double v = series.v[i];
        if (!(v > 0.0)) throw std::invalid_argument("decay_fit: nonpositive value in window");
        xs.push_back(std::log1p(t));
        ys.push_back(std::log(v));
    }
    fit.points = static_cast<int>(xs.size());
    if (fit.points < 8) throw std::invalid_argument("decay_fit: fewer than 8 points in window");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < fit.points; ++i) {
        sx += xs[static_cast<std::size_t>(i)];
        sy += ys[static_cast<std::size_t>(i)];
        sxx += xs[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(i)];
        sxy += xs[static_cast<std::size_t>(i)] * ys[static_cast<std::size_t>(i)];
    }
    double m = fit.points;
    fit.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.intercept = (sy - fit.exponent * sx) / m;
    double ss = 0;
    for (int i = 0; i < fit.points; ++i) {
        double r = ys[static_cast<std::size_t>(i)] - (fit.intercept + fit.exponent * xs[static_cast<std::size_t>(i)]);
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / m);
    return fit;
}

FieldSolution commuted_field(const PhaseDensity& f, const SolverConfig& cfg, const MultiIndex& gamma,
                             double t) {
    const int n = f.spec().n;
    const bool yukawa = cfg.kernel.kind == KernelKind::Yukawa;
    auto expansion = field_source_expansion(yukawa, n, gamma);
    auto symbols = make_gamma(n);

    const double extent = macro_extent(cfg, f.spec(), t);
    const int N = cfg.macro_n;
    SpatialField source(n, extent, N, 1, t);
    KernelTable table(cfg.kernel, N, extent);
    for (const auto& term : expansion) {
        PhaseDensity zf = apply_multi_index(f, symbols, term.beta, t);
        SpatialField rho_b = cfg.frame == Frame::Lab && f.spec().Nx == N
                                 ? velocity_average(zf, false)
                                 : rho_on_grid(zf, extent, N, false);
        for (int k = 0; k < term.convolutions; ++k) rho_b = convolve_with_kernel(table, rho_b);
        double c = term.coeff.to_double();
        double* dst = source.component(0);
        const double* src = rho_b.component(0);
        for (std::int64_t i = 0; i < source.cells(); ++i) dst[i] += c * src[i];
    }
    return solve_field(cfg.kernel, source);
}

BilinearResult bilinear_term(const PhaseDensity& f, const SolverConfig& cfg, const MultiIndex& gamma,
                             const MultiIndex& beta, double t, double energy_hint) {
    const int n = f.spec().n;
    if (gamma.size() > 2 || beta.size() > 2)
        throw std::invalid_argument("bilinear_term: stencil budget is |gamma|,|beta| <= 2");
    auto symbols = make_gamma(n);
    FieldSolution zphi = commuted_field(f, cfg, gamma, t);
    PhaseDensity zf = apply_multi_index(f, symbols, beta, t);

    // || |grad Z^gamma phi|(x) |Z^beta f|(x,v) ||_L1 with x = xi + v t in the
    // comoving frame
    const double cellw = f.spec().cell_volume();
    const std::int64_t total = f.spec().total_cells();
    const bool com = f.frame() == Frame::Comoving;
    const double* vals = zf.values().data();
    const int K = 64;
    std::vector<double> partial(K, 0.0);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        std::int64_t lo = total * k / K, hi = total * (k + 1) / K;
        double acc = 0.0;
        for (std::int64_t idx = lo; idx < hi; ++idx) {
            double av = std::abs(vals[idx]);
            if (av == 0.0) continue;
            std::int64_t rem = idx;
            double pos[3], vc[3];
            for (int a = 0; a < 2 * n; ++a) {
                std::int64_t i = rem / zf.stride(a);
                rem %= zf.stride(a);
                if (a < n)
                    pos[a] = zf.axis_coord(a, i);
                else
                    vc[a - n] = zf.axis_coord(a, i);
            }
            if (com)
                for (int a = 0; a < n; ++a) pos[a] += vc[a] * t;
            double g2 = 0.0;
            for (int a = 0; a < n; ++a) {
                double g = zphi.grad_phi.interpolate(a, pos);
                g2 += g * g;
            }
            acc += std::sqrt(g2) * av;
        }
        partial[static_cast<std::size_t>(k)] = acc * cellw;
    }
    BilinearResult out;
    out.measured = compensated_sum(partial.data(), K);

    double EN = energy_hint;
    if (EN < 0.0) {
        int N = std::min<int>(2, static_cast<int>(std::max(gamma.size(), beta.size())));
        EN = energy_N(f, N, t).total;
    }
    int pow = cfg.kernel.kind == KernelKind::Yukawa ? n : n - 1;
    out.envelope = EN * EN / std::pow(1.0 + t, pow);
    return out;
}

DecayFit grad_field_decay(const RunRecord& record, const std::string& series_name, double t0,
                          double t1) {
    if (!record.has(series_name)) {
        std::string avail;
        for (const auto& [k, s] : record.series) avail += k + " ";
        throw std::invalid_argument("grad_field_decay: no series '" + series_name +
                                    "'; available: " + avail);
    }
    return decay_fit(record.at(series_name), t0, t1);
}

double commutator_budget(const PhaseDensity& f, const SolverConfig& cfg,
                         const std::vector<std::pair<MultiIndex, MultiIndex>>& pairs, double t) {
    double total = 0.0;
    double hint = -1.0;
    for (const auto& [g, b] : pairs) {
        auto r = bilinear_term(f, cfg, g, b, t, hint <= 0 ? -1.0 : hint);
        total += r.measured;
    }
    return total;
}

double rho_commutation_residual(const PhaseDensity& f, double t) {
    const int n = f.spec().n;
    auto gamma = make_gamma(n);
    double worst = 0.0;
    SpatialField rho = velocity_average(f, false);
    for (const auto& Z : gamma) {
        auto rc = rho_commutation(Z);
        SpatialField lhs = apply_macro_vfield(rho, Z.macroscopic(), t);
        SpatialField rhs = velocity_average(apply_vfield(f, Z.expression(), t), false);
        double scale = std::max(lhs.sup_norm(), rho.sup_norm());
        if (scale == 0.0) continue;
        double c = rc.c.to_double();
        double err = 0.0;
        const double* lp = lhs.component(0);
        const double* rp = rhs.component(0);
        const double* pp = rho.component(0);
        // interior only: one-sided boundary stencils of lhs see the cutoff
        const int N = rho.size();
        std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
        for (int a = n - 2; a >= 0; --a)
            strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * N;
        for (std::int64_t idx = 0; idx < rho.cells(); ++idx) {
            std::int64_t rem = idx;
            bool interior = true;
            for (int a = 0; a < n; ++a) {
                std::int64_t i = rem / strides[static_cast<std::size_t>(a)];
                rem %= strides[static_cast<std::size_t>(a)];
                if (i < 2 || i >= N - 2) { interior = false; break; }
            }
            if (!interior) continue;
            err = std::max(err, std::abs(lp[idx] - rp[idx] - c * pp[idx]));
        }
        worst = std::max(worst, err / scale);
    }
    return worst;
}

} // namespace ktlab
