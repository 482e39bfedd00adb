#include "ktlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ktlab {

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < n; ++a) v *= dx();
    for (int a = 0; a < n; ++a) v *= dv();
    return v;
}

std::int64_t GridSpec::total_cells() const {
    std::int64_t c = 1;
    for (int a = 0; a < n; ++a) c *= Nx;
    for (int a = 0; a < n; ++a) c *= Nv;
    return c;
}

void GridSpec::validate(double memory_budget_bytes) const {
    if (n != 2 && n != 3) throw std::invalid_argument("GridSpec: n must be 2 or 3");
    if (x_extent <= 0 || v_extent <= 0) throw std::invalid_argument("GridSpec: extents must be positive");
    if (Nx < 8 || Nv < 8 || Nx % 2 || Nv % 2)
        throw std::invalid_argument("GridSpec: Nx, Nv must be even and >= 8");
    double bytes = 8.0 * static_cast<double>(total_cells());
    if (bytes > memory_budget_bytes)
        throw std::invalid_argument("GridSpec: grid exceeds the memory budget");
}

PhaseDensity::PhaseDensity(const GridSpec& spec, Frame frame, double time_tag)
    : spec_(spec), frame_(frame), time_tag_(time_tag) {
    spec_.validate();
    const int A = naxes();
    strides_.assign(static_cast<std::size_t>(A), 1);
    for (int a = A - 2; a >= 0; --a)
        strides_[static_cast<std::size_t>(a)] = strides_[static_cast<std::size_t>(a + 1)] * axis_size(a + 1);
    values_.assign(static_cast<std::size_t>(spec_.total_cells()), 0.0);
}

double PhaseDensity::boundary_mass_fraction() const {
    const int A = naxes();
    const std::int64_t total = spec_.total_cells();
    double boundary = 0.0, all = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : boundary, all)
    for (std::int64_t idx = 0; idx < total; ++idx) {
        double av = std::abs(values_[static_cast<std::size_t>(idx)]);
        all += av;
        std::int64_t rem = idx;
        bool edge = false;
        for (int a = 0; a < A; ++a) {
            std::int64_t i = rem / strides_[static_cast<std::size_t>(a)];
            rem %= strides_[static_cast<std::size_t>(a)];
            if (i == 0 || i == axis_size(a) - 1) { edge = true; break; }
        }
        if (edge) boundary += av;
    }
    return all > 0 ? boundary / all : 0.0;
}

bool PhaseDensity::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

SpatialField::SpatialField(int n, double extent, int N, int components, double time_tag)
    : n_(n), extent_(extent), N_(N), components_(components), time_tag_(time_tag) {
    if (components != 1 && components != n)
        throw std::invalid_argument("SpatialField: component count must be 1 or n");
    values_.assign(static_cast<std::size_t>(cells()) * components_, 0.0);
}

std::int64_t SpatialField::cells() const {
    std::int64_t c = 1;
    for (int a = 0; a < n_; ++a) c *= N_;
    return c;
}

double SpatialField::sup_norm(int margin) const {
    double s = 0.0;
    const std::int64_t M = cells();
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n_), 1);
    for (int a = n_ - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * N_;
    for (int c = 0; c < components_; ++c) {
        const double* p = component(c);
        for (std::int64_t idx = 0; idx < M; ++idx) {
            if (margin > 0) {
                std::int64_t rem = idx;
                bool skip = false;
                for (int a = 0; a < n_; ++a) {
                    std::int64_t i = rem / strides[static_cast<std::size_t>(a)];
                    rem %= strides[static_cast<std::size_t>(a)];
                    if (i < margin || i >= N_ - margin) { skip = true; break; }
                }
                if (skip) continue;
            }
            s = std::max(s, std::abs(p[idx]));
        }
    }
    return s;
}

double SpatialField::interpolate(int c, const double* pt) const {
    const double* f = component(c);
    const double h = dx();
    std::array<std::int64_t, 3> base{};
    std::array<double, 3> fr{};
    for (int a = 0; a < n_; ++a) {
        double u = (pt[a] + extent_) / h - 0.5;
        double fl = std::floor(u);
        std::int64_t b = static_cast<std::int64_t>(fl);
        double t = u - fl;
        if (b < 0) { b = 0; t = 0.0; }
        if (b > N_ - 2) { b = N_ - 2; t = 1.0; }
        base[static_cast<std::size_t>(a)] = b;
        fr[static_cast<std::size_t>(a)] = t;
    }
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n_), 1);
    for (int a = n_ - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * N_;
    double acc = 0.0;
    for (int corner = 0; corner < (1 << n_); ++corner) {
        double w = 1.0;
        std::int64_t idx = 0;
        for (int a = 0; a < n_; ++a) {
            int bit = (corner >> a) & 1;
            w *= bit ? fr[static_cast<std::size_t>(a)] : 1.0 - fr[static_cast<std::size_t>(a)];
            idx += (base[static_cast<std::size_t>(a)] + bit) * strides[static_cast<std::size_t>(a)];
        }
        acc += w * f[idx];
    }
    return acc;
}

bool SpatialField::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

double ParticleEnsemble::total_weight() const {
    return compensated_sum(weights.data(), static_cast<std::int64_t>(weights.size()));
}

// --- reductions ------------------------------------------------------------

double compensated_sum(const double* data, std::int64_t count) {
    double s = 0.0, comp = 0.0;
    for (std::int64_t i = 0; i < count; ++i) {
        double v = data[i];
        double t = s + v;
        if (std::abs(s) >= std::abs(v))
            comp += (s - t) + v;
        else
            comp += (v - t) + s;
        s = t;
    }
    return s + comp;
}

namespace {

// deterministic reduction: fixed slab partials combined in slab order,
// independent of the worker count
template <class F>
double slab_reduce(std::int64_t total, const F& partial_of_slab) {
    const int K = 64;
    std::vector<double> partials(K, 0.0);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        std::int64_t lo = total * k / K;
        std::int64_t hi = total * (k + 1) / K;
        partials[static_cast<std::size_t>(k)] = partial_of_slab(lo, hi);
    }
    return compensated_sum(partials.data(), K);
}

} // namespace

double l1_norm(const PhaseDensity& f) {
    const double vol = f.spec().cell_volume();
    const double* p = f.values().data();
    double s = slab_reduce(f.spec().total_cells(), [&](std::int64_t lo, std::int64_t hi) {
        double acc = 0.0, comp = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
            double v = std::abs(p[i]);
            double t = acc + v;
            comp += (std::abs(acc) >= v) ? (acc - t) + v : (v - t) + acc;
            acc = t;
        }
        return acc + comp;
    });
    return s * vol;
}

double mass(const PhaseDensity& f) {
    const double vol = f.spec().cell_volume();
    const double* p = f.values().data();
    double s = slab_reduce(f.spec().total_cells(), [&](std::int64_t lo, std::int64_t hi) {
        return compensated_sum(p + lo, hi - lo);
    });
    return s * vol;
}

// --- sampling and velocity average ------------------------------------------

PhaseDensity sample_function(const GridSpec& spec,
                             const std::function<double(const double*, const double*)>& g,
                             Frame frame) {
    PhaseDensity f(spec, frame, 0.0);
    const int n = spec.n;
    const std::int64_t total = spec.total_cells();
    bool bad = false;
#pragma omp parallel for schedule(static)
    for (std::int64_t idx = 0; idx < total; ++idx) {
        std::int64_t rem = idx;
        double xs[3], vs[3];
        for (int a = 0; a < 2 * n; ++a) {
            std::int64_t i = rem / f.stride(a);
            rem %= f.stride(a);
            if (a < n)
                xs[a] = spec.x_center(static_cast<int>(i));
            else
                vs[a - n] = spec.v_center(static_cast<int>(i));
        }
        double val = g(xs, vs);
        if (!std::isfinite(val)) bad = true;
        f.values()[static_cast<std::size_t>(idx)] = val;
    }
    if (bad) throw std::runtime_error("sample_function: non-finite sample");
    return f;
}

SpatialField velocity_average(const PhaseDensity& f, bool absolute) {
    const auto& spec = f.spec();
    const int n = spec.n;
    SpatialField rho(n, spec.x_extent, spec.Nx, 1, f.time_tag());
    double dvn = 1.0;
    for (int a = 0; a < n; ++a) dvn *= spec.dv();
    std::int64_t xcells = rho.cells();
    std::int64_t vcells = 1;
    for (int a = 0; a < n; ++a) vcells *= spec.Nv;
    const double* p = f.values().data();
    double* out = rho.component(0);
#pragma omp parallel for schedule(static)
    for (std::int64_t xi = 0; xi < xcells; ++xi) {
        const double* row = p + xi * vcells; // v axes are contiguous innermost
        double acc = 0.0, comp = 0.0;
        for (std::int64_t vi = 0; vi < vcells; ++vi) {
            double v = absolute ? std::abs(row[vi]) : row[vi];
            double t = acc + v;
            comp += (std::abs(acc) >= std::abs(v)) ? (acc - t) + v : (v - t) + acc;
            acc = t;
        }
        out[xi] = (acc + comp) * dvn;
    }
    return rho;
}

SpatialField rho_on_grid(const PhaseDensity& f, double extent, int N, bool absolute) {
    const auto& spec = f.spec();
    const int n = spec.n;
    const double t = f.time_tag();
    SpatialField rho(n, extent, N, 1, t);
    const double h = rho.dx();
    const double cellw = spec.cell_volume(); // deposit of f * dxi^n dv^n
    const double inv_vol = 1.0 / std::pow(h, n);
    const std::int64_t total = spec.total_cells();

    std::vector<std::int64_t> xstr(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) xstr[static_cast<std::size_t>(a)] = xstr[static_cast<std::size_t>(a + 1)] * N;

    const int K = 16; // fixed partial grids for a worker-count-independent sum
    std::vector<std::vector<double>> partial(K, std::vector<double>(static_cast<std::size_t>(rho.cells()), 0.0));
#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        std::int64_t lo = total * k / K, hi = total * (k + 1) / K;
        auto& acc = partial[static_cast<std::size_t>(k)];
        const double* p = f.values().data();
        for (std::int64_t idx = lo; idx < hi; ++idx) {
            double val = p[idx];
            if (val == 0.0) continue;
            if (absolute) val = std::abs(val);
            std::int64_t rem = idx;
            double pos[3];
            double vcoord[3];
            for (int a = 0; a < 2 * n; ++a) {
                std::int64_t i = rem / f.stride(a);
                rem %= f.stride(a);
                if (a < n)
                    pos[a] = spec.x_center(static_cast<int>(i));
                else
                    vcoord[a - n] = spec.v_center(static_cast<int>(i));
            }
            if (f.frame() == Frame::Comoving)
                for (int a = 0; a < n; ++a) pos[a] += vcoord[a] * t;
            // CIC
            std::int64_t base[3];
            double fr[3];
            bool outside = false;
            for (int a = 0; a < n; ++a) {
                double u = (pos[a] + extent) / h - 0.5;
                double fl = std::floor(u);
                base[a] = static_cast<std::int64_t>(fl);
                fr[a] = u - fl;
                if (base[a] < 0 || base[a] > N - 2) outside = true;
            }
            if (outside) continue;
            double w0 = val * cellw * inv_vol;
            for (int corner = 0; corner < (1 << n); ++corner) {
                double w = w0;
                std::int64_t oidx = 0;
                for (int a = 0; a < n; ++a) {
                    int bit = (corner >> a) & 1;
                    w *= bit ? fr[a] : 1.0 - fr[a];
                    oidx += (base[a] + bit) * xstr[static_cast<std::size_t>(a)];
                }
                acc[static_cast<std::size_t>(oidx)] += w;
            }
        }
    }
    double* out = rho.component(0);
    for (int k = 0; k < K; ++k) {
        const auto& acc = partial[static_cast<std::size_t>(k)];
        for (std::int64_t i = 0; i < rho.cells(); ++i) out[i] += acc[static_cast<std::size_t>(i)];
    }
    return rho;
}

MacroMoments rho_and_current_on_grid(const PhaseDensity& f, double extent, int N, double map_time) {
    const auto& spec = f.spec();
    const int n = spec.n;
    MacroMoments out{SpatialField(n, extent, N, 1, map_time), SpatialField(n, extent, N, n, map_time)};
    const double h = out.rho.dx();
    const double cellw = spec.cell_volume();
    const double inv_vol = 1.0 / std::pow(h, n);
    const std::int64_t total = spec.total_cells();
    const std::int64_t cells = out.rho.cells();

    std::vector<std::int64_t> xstr(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) xstr[static_cast<std::size_t>(a)] = xstr[static_cast<std::size_t>(a + 1)] * N;

    const int K = 16;
    const int chan = 1 + n;
    std::vector<std::vector<double>> partial(K, std::vector<double>(static_cast<std::size_t>(cells * chan), 0.0));
#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        std::int64_t lo = total * k / K, hi = total * (k + 1) / K;
        auto& acc = partial[static_cast<std::size_t>(k)];
        const double* p = f.values().data();
        for (std::int64_t idx = lo; idx < hi; ++idx) {
            double val = p[idx];
            if (val == 0.0) continue;
            std::int64_t rem = idx;
            double pos[3], vcoord[3];
            for (int a = 0; a < 2 * n; ++a) {
                std::int64_t i = rem / f.stride(a);
                rem %= f.stride(a);
                if (a < n)
                    pos[a] = spec.x_center(static_cast<int>(i));
                else
                    vcoord[a - n] = spec.v_center(static_cast<int>(i));
            }
            if (f.frame() == Frame::Comoving)
                for (int a = 0; a < n; ++a) pos[a] += vcoord[a] * map_time;
            std::int64_t base[3];
            double fr[3];
            bool outside = false;
            for (int a = 0; a < n; ++a) {
                double u = (pos[a] + extent) / h - 0.5;
                double fl = std::floor(u);
                base[a] = static_cast<std::int64_t>(fl);
                fr[a] = u - fl;
                if (base[a] < 0 || base[a] > N - 2) outside = true;
            }
            if (outside) continue;
            double w0 = val * cellw * inv_vol;
            for (int corner = 0; corner < (1 << n); ++corner) {
                double w = w0;
                std::int64_t oidx = 0;
                for (int a = 0; a < n; ++a) {
                    int bit = (corner >> a) & 1;
                    w *= bit ? fr[a] : 1.0 - fr[a];
                    oidx += (base[a] + bit) * xstr[static_cast<std::size_t>(a)];
                }
                acc[static_cast<std::size_t>(oidx)] += w;
                for (int a = 0; a < n; ++a)
                    acc[static_cast<std::size_t>((1 + a) * cells + oidx)] += w * vcoord[a];
            }
        }
    }
    double* rdst = out.rho.component(0);
    for (int k = 0; k < K; ++k) {
        const auto& acc = partial[static_cast<std::size_t>(k)];
        for (std::int64_t i = 0; i < cells; ++i) rdst[i] += acc[static_cast<std::size_t>(i)];
        for (int a = 0; a < n; ++a) {
            double* jdst = out.current.component(a);
            for (std::int64_t i = 0; i < cells; ++i)
                jdst[i] += acc[static_cast<std::size_t>((1 + a) * cells + i)];
        }
    }
    return out;
}

// --- apply_vfield -----------------------------------------------------------

namespace {

struct CompiledTerm {
    int axis; // 0..2n-1
    Polynomial coeff;
};

// 4th-order first derivative along a pencil
void pencil_derivative(const double* in, double* out, std::int64_t count, double h) {
    const double c = 1.0 / (12.0 * h);
    out[0] = c * (-25.0 * in[0] + 48.0 * in[1] - 36.0 * in[2] + 16.0 * in[3] - 3.0 * in[4]);
    out[1] = c * (-3.0 * in[0] - 10.0 * in[1] + 18.0 * in[2] - 6.0 * in[3] + in[4]);
    for (std::int64_t i = 2; i < count - 2; ++i)
        out[i] = c * (in[i - 2] - 8.0 * in[i - 1] + 8.0 * in[i + 1] - in[i + 2]);
    out[count - 2] = -c * (-3.0 * in[count - 1] - 10.0 * in[count - 2] + 18.0 * in[count - 3] -
                           6.0 * in[count - 4] + in[count - 5]);
    out[count - 1] = -c * (-25.0 * in[count - 1] + 48.0 * in[count - 2] - 36.0 * in[count - 3] +
                           16.0 * in[count - 4] - 3.0 * in[count - 5]);
}

} // namespace

PhaseDensity apply_vfield(const PhaseDensity& f, const FieldExpression& E, double t) {
    if (E.order() > 1) throw std::invalid_argument("apply_vfield: operator must be first order");
    if (E.has_time_slot()) throw std::invalid_argument("apply_vfield: d/dt slot not allowed");
    const FieldExpression Eff = (f.frame() == Frame::Comoving) ? comoving_pullback(E) : E;

    const auto& spec = f.spec();
    const int n = spec.n;
    const int A = 2 * n;
    PhaseDensity out(spec, f.frame(), f.time_tag());

    Polynomial zeroth(n);
    std::vector<CompiledTerm> terms;
    for (const auto& [k, p] : Eff.terms()) {
        int order = 0, slot = -1;
        for (std::size_t v = 0; v < k.size(); ++v)
            if (k[v]) { order += k[v]; slot = static_cast<int>(v); }
        if (order == 0) {
            zeroth = zeroth + p;
        } else {
            // slot var index -> axis: x_i (var i, 1..n) -> axis i-1;
            // v_i (var n+i) -> axis n+i-1
            terms.push_back({slot - 1, p});
        }
    }

    const std::int64_t total = spec.total_cells();
    for (const auto& term : terms) {
        const int a = term.axis;
        const std::int64_t len = f.axis_size(a);
        const std::int64_t str = f.stride(a);
        const std::int64_t pencils = total / len;
        const double h = f.axis_step(a);
        const int pvar = a < n ? var_x(a + 1, n) : var_v(a - n + 1, n);

#pragma omp parallel
        {
            std::vector<double> buf(static_cast<std::size_t>(len));
            std::vector<double> der(static_cast<std::size_t>(len));
            std::vector<double> point(static_cast<std::size_t>(2 * n + 1), 0.0);
            std::vector<double> cc;
#pragma omp for schedule(static)
            for (std::int64_t pidx = 0; pidx < pencils; ++pidx) {
                // decompose pencil index into the outer coordinates
                std::int64_t base = 0, rem = pidx;
                point[0] = t;
                for (int b = A - 1; b >= 0; --b) {
                    if (b == a) continue;
                    std::int64_t sz = f.axis_size(b);
                    std::int64_t i = rem % sz;
                    rem /= sz;
                    base += i * f.stride(b);
                    int var = b < n ? var_x(b + 1, n) : var_v(b - n + 1, n);
                    point[static_cast<std::size_t>(var)] = f.axis_coord(b, i);
                }
                const double* src = f.values().data() + base;
                double* dst = out.values().data() + base;
                for (std::int64_t i = 0; i < len; ++i) buf[static_cast<std::size_t>(i)] = src[i * str];
                pencil_derivative(buf.data(), der.data(), len, h);
                term.coeff.collapse(pvar, point, cc);
                for (std::int64_t i = 0; i < len; ++i) {
                    double u = f.axis_coord(a, i);
                    double c = 0.0;
                    for (std::size_t p2 = cc.size(); p2-- > 0;) c = c * u + cc[p2];
                    dst[i * str] += c * der[static_cast<std::size_t>(i)];
                }
            }
        }
    }

    if (!zeroth.is_zero()) {
        // accumulate the multiplication part along innermost pencils
        const int a = A - 1;
        const std::int64_t len = f.axis_size(a);
        const std::int64_t pencils = total / len;
        const int pvar = var_v(n, n);
#pragma omp parallel
        {
            std::vector<double> point(static_cast<std::size_t>(2 * n + 1), 0.0);
            std::vector<double> cc;
#pragma omp for schedule(static)
            for (std::int64_t pidx = 0; pidx < pencils; ++pidx) {
                std::int64_t base = 0, rem = pidx;
                point[0] = t;
                for (int b = A - 2; b >= 0; --b) {
                    std::int64_t sz = f.axis_size(b);
                    std::int64_t i = rem % sz;
                    rem /= sz;
                    base += i * f.stride(b);
                    int var = b < n ? var_x(b + 1, n) : var_v(b - n + 1, n);
                    point[static_cast<std::size_t>(var)] = f.axis_coord(b, i);
                }
                const double* src = f.values().data() + base;
                double* dst = out.values().data() + base;
                zeroth.collapse(pvar, point, cc);
                for (std::int64_t i = 0; i < len; ++i) {
                    double u = f.axis_coord(a, i);
                    double c = 0.0;
                    for (std::size_t p2 = cc.size(); p2-- > 0;) c = c * u + cc[p2];
                    dst[i] += c * src[i];
                }
            }
        }
    }
    return out;
}

PhaseDensity apply_multi_index(const PhaseDensity& f, const std::vector<VectorFieldSymbol>& gamma,
                               const MultiIndex& alpha, double t) {
    if (alpha.empty()) return f;
    PhaseDensity cur = f;
    for (auto it = alpha.rbegin(); it != alpha.rend(); ++it)
        cur = apply_vfield(cur, gamma.at(static_cast<std::size_t>(*it)).expression(), t);
    return cur;
}

DepositResult deposit(const ParticleEnsemble& p, double extent, int N) {
    SpatialField rho(3, extent, N, 1, p.time_tag);
    const double h = rho.dx();
    const double inv_vol = 1.0 / (h * h * h);
    const std::int64_t M = static_cast<std::int64_t>(p.count());
    std::vector<std::int64_t> xstr{static_cast<std::int64_t>(N) * N, N, 1};

    const int K = 16;
    std::vector<std::vector<double>> partial(K, std::vector<double>(static_cast<std::size_t>(rho.cells()), 0.0));
    std::vector<double> off(K, 0.0);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        std::int64_t lo = M * k / K, hi = M * (k + 1) / K;
        auto& acc = partial[static_cast<std::size_t>(k)];
        for (std::int64_t i = lo; i < hi; ++i) {
            std::int64_t base[3];
            double fr[3];
            bool outside = false;
            for (int a = 0; a < 3; ++a) {
                double u = (p.x[a][static_cast<std::size_t>(i)] + extent) / h - 0.5;
                double fl = std::floor(u);
                base[a] = static_cast<std::int64_t>(fl);
                fr[a] = u - fl;
                if (base[a] < 0 || base[a] > N - 2) outside = true;
            }
            double w = p.weights[static_cast<std::size_t>(i)];
            if (outside) {
                off[static_cast<std::size_t>(k)] += w;
                continue;
            }
            double w0 = w * inv_vol;
            for (int corner = 0; corner < 8; ++corner) {
                double ww = w0;
                std::int64_t oidx = 0;
                for (int a = 0; a < 3; ++a) {
                    int bit = (corner >> a) & 1;
                    ww *= bit ? fr[a] : 1.0 - fr[a];
                    oidx += (base[a] + bit) * xstr[static_cast<std::size_t>(a)];
                }
                acc[static_cast<std::size_t>(oidx)] += ww;
            }
        }
    }
    double* out = rho.component(0);
    double off_total = 0.0;
    for (int k = 0; k < K; ++k) {
        off_total += off[static_cast<std::size_t>(k)];
        const auto& acc = partial[static_cast<std::size_t>(k)];
        for (std::int64_t i = 0; i < rho.cells(); ++i) out[i] += acc[static_cast<std::size_t>(i)];
    }
    return {std::move(rho), off_total};
}

} // namespace ktlab
