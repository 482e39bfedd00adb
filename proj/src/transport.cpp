#include "ktlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ktlab {

namespace {
constexpr double pi = std::numbers::pi;
} // namespace

void SolverConfig::validate() const {
    if (cfl_safety <= 0.0 || cfl_safety > 0.9)
        throw std::invalid_argument("SolverConfig: cfl_safety must lie in (0, 0.9]");
    if (t_end < 0.0) throw std::invalid_argument("SolverConfig: t_end must be >= 0");
    if (mu != 1.0 && mu != -1.0) throw std::invalid_argument("SolverConfig: mu must be +1 or -1");
    if (macro_n < 16) throw std::invalid_argument("SolverConfig: macro_n too small");
}

std::uint64_t RunRecord::content_hash() const {
    std::uint64_t h = 1469598103934665603ull; // fnv-1a
    auto mix = [&](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& [name, s] : series) {
        mix(name.data(), name.size());
        mix(s.t.data(), s.t.size() * sizeof(double));
        mix(s.v.data(), s.v.size() * sizeof(double));
    }
    return h;
}

double mass_error(const RunRecord& record) {
    const auto& s = record.at("l1");
    if (s.v.empty()) throw std::invalid_argument("mass_error: empty record");
    double ref = s.v.front();
    if (ref == 0.0) return 0.0;
    double worst = 0.0;
    for (double v : s.v) worst = std::max(worst, std::abs(v - ref) / ref);
    return worst;
}

double free_transport_exact(const std::function<double(const double*, const double*)>& f0, double t,
                            const double* x, const double* v) {
    double y[3];
    for (int a = 0; a < 3; ++a) y[a] = x[a] - v[a] * t;
    return f0(y, v);
}

double gaussian_free_rho(int n, double eps, double t, const double* x) {
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    double s = 1.0 + t * t;
    return eps * std::pow(pi / s, n / 2.0) * std::exp(-r2 / s);
}

double macro_extent(const SolverConfig& cfg, const GridSpec& spec, double t) {
    if (cfg.frame == Frame::Lab) return spec.x_extent;
    return spec.x_extent + spec.v_extent * t + cfg.macro_margin;
}

MacroField solve_macro(const SolverConfig& cfg, const PhaseDensity& f) {
    MacroField m;
    if (cfg.frame == Frame::Lab) {
        m.rho = velocity_average(f, false);
    } else {
        m.rho = rho_on_grid(f, macro_extent(cfg, f.spec(), f.time_tag()), cfg.macro_n, false);
    }
    m.sol = solve_field(cfg.kernel, m.rho);
    return m;
}

// --- 1d cubic shifts --------------------------------------------------------

namespace {

// Lagrange cubic at fractional index p (departure point); values outside the
// pencil are treated as zero (decaying data)
inline double cubic_at(const double* buf, std::int64_t count, double p) {
    double fl = std::floor(p);
    std::int64_t j = static_cast<std::int64_t>(fl);
    double th = p - fl;
    double w0 = -th * (th - 1.0) * (th - 2.0) / 6.0;
    double w1 = (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0;
    double w2 = -(th + 1.0) * th * (th - 2.0) / 2.0;
    double w3 = (th + 1.0) * th * (th - 1.0) / 6.0;
    auto get = [&](std::int64_t i) { return (i < 0 || i >= count) ? 0.0 : buf[i]; };
    return w0 * get(j - 1) + w1 * get(j) + w2 * get(j + 1) + w3 * get(j + 2);
}

struct PencilWalker {
    const PhaseDensity& f;
    int axis;
    std::int64_t len, str, pencils;

    explicit PencilWalker(const PhaseDensity& ff, int a)
        : f(ff), axis(a), len(ff.axis_size(a)), str(ff.stride(a)),
          pencils(ff.spec().total_cells() / ff.axis_size(a)) {}

    // base offset and per-axis coordinates of pencil p (coordinate of `axis`
    // left unset)
    std::int64_t decompose(std::int64_t p, double* coords) const {
        std::int64_t base = 0, rem = p;
        const int A = f.naxes();
        for (int b = A - 1; b >= 0; --b) {
            if (b == axis) continue;
            std::int64_t sz = f.axis_size(b);
            std::int64_t i = rem % sz;
            rem /= sz;
            base += i * f.stride(b);
            coords[b] = f.axis_coord(b, i);
        }
        return base;
    }
};

} // namespace

void advect_x_shear(PhaseDensity& f, double dt) {
    if (dt == 0.0) return;
    const int n = f.spec().n;
    for (int a = 0; a < n; ++a) {
        PencilWalker w(f, a);
        const double h = f.axis_step(a);
#pragma omp parallel
        {
            std::vector<double> buf(static_cast<std::size_t>(w.len));
            double coords[6];
#pragma omp for schedule(static)
            for (std::int64_t p = 0; p < w.pencils; ++p) {
                std::int64_t base = w.decompose(p, coords);
                double shift = coords[n + a] * dt / h; // in cells
                double* dst = f.values().data() + base;
                for (std::int64_t i = 0; i < w.len; ++i) buf[static_cast<std::size_t>(i)] = dst[i * w.str];
                for (std::int64_t i = 0; i < w.len; ++i)
                    dst[i * w.str] = cubic_at(buf.data(), w.len, static_cast<double>(i) - shift);
            }
        }
    }
}

void advect_v_kick_lab(PhaseDensity& f, const FieldSolution& field, double mu, double dt) {
    if (dt == 0.0) return;
    const int n = f.spec().n;
    for (int a = 0; a < n; ++a) {
        PencilWalker w(f, n + a);
        const double h = f.axis_step(n + a);
#pragma omp parallel
        {
            std::vector<double> buf(static_cast<std::size_t>(w.len));
            double coords[6];
#pragma omp for schedule(static)
            for (std::int64_t p = 0; p < w.pencils; ++p) {
                std::int64_t base = w.decompose(p, coords);
                double x[3];
                for (int b = 0; b < n; ++b) x[b] = coords[b];
                double force = mu * field.grad_phi.interpolate(a, x);
                double shift = force * dt / h;
                double* dst = f.values().data() + base;
                for (std::int64_t i = 0; i < w.len; ++i) buf[static_cast<std::size_t>(i)] = dst[i * w.str];
                for (std::int64_t i = 0; i < w.len; ++i)
                    dst[i * w.str] = cubic_at(buf.data(), w.len, static_cast<double>(i) - shift);
            }
        }
    }
}

void advect_xi_force(PhaseDensity& g, const FieldSolution& field, double mu, double t_factor,
                     double t_map, double dt) {
    if (dt == 0.0) return;
    const int n = g.spec().n;
    for (int a = 0; a < n; ++a) {
        PencilWalker w(g, a);
        const double h = g.axis_step(a);
#pragma omp parallel
        {
            std::vector<double> buf(static_cast<std::size_t>(w.len));
            double coords[6];
#pragma omp for schedule(static)
            for (std::int64_t p = 0; p < w.pencils; ++p) {
                std::int64_t base = w.decompose(p, coords);
                double* dst = g.values().data() + base;
                for (std::int64_t i = 0; i < w.len; ++i) buf[static_cast<std::size_t>(i)] = dst[i * w.str];
                double x[3];
                for (std::int64_t i = 0; i < w.len; ++i) {
                    coords[a] = g.axis_coord(a, i);
                    for (int b = 0; b < n; ++b) x[b] = coords[b] + coords[n + b] * t_map;
                    double vel = -mu * t_factor * field.grad_phi.interpolate(a, x);
                    dst[i * w.str] = cubic_at(buf.data(), w.len, static_cast<double>(i) - vel * dt / h);
                }
            }
        }
    }
}

void advect_v_kick_comoving(PhaseDensity& g, const FieldSolution& field, double mu, double t_map,
                            double dt) {
    if (dt == 0.0) return;
    const int n = g.spec().n;
    for (int a = 0; a < n; ++a) {
        PencilWalker w(g, n + a);
        const double h = g.axis_step(n + a);
#pragma omp parallel
        {
            std::vector<double> buf(static_cast<std::size_t>(w.len));
            double coords[6];
#pragma omp for schedule(static)
            for (std::int64_t p = 0; p < w.pencils; ++p) {
                std::int64_t base = w.decompose(p, coords);
                double* dst = g.values().data() + base;
                for (std::int64_t i = 0; i < w.len; ++i) buf[static_cast<std::size_t>(i)] = dst[i * w.str];
                double x[3];
                for (std::int64_t i = 0; i < w.len; ++i) {
                    coords[n + a] = g.axis_coord(n + a, i);
                    for (int b = 0; b < n; ++b) x[b] = coords[b] + coords[n + b] * t_map;
                    double vel = mu * field.grad_phi.interpolate(a, x);
                    dst[i * w.str] = cubic_at(buf.data(), w.len, static_cast<double>(i) - vel * dt / h);
                }
            }
        }
    }
}

// --- Strang step -------------------------------------------------------------

namespace {

double max_force(const FieldSolution& field) {
    return field.grad_phi.sup_norm();
}

void check_cfl(const PhaseDensity& f, const SolverConfig& cfg, double dt, const FieldSolution* field) {
    const auto& spec = f.spec();
    double limit;
    if (cfg.frame == Frame::Lab) {
        limit = cfg.cfl_safety * spec.dx() / spec.v_extent;
        if (cfg.force_enabled && field) {
            double fmax = max_force(*field);
            if (fmax > 0.0) limit = std::min(limit, cfg.cfl_safety * spec.dv() / fmax);
        }
    } else {
        // the shear is absorbed by the frame; only the force bounds dt
        if (!cfg.force_enabled || !field) return;
        double fmax = max_force(*field);
        if (fmax <= 0.0) return;
        double tf = std::max(1.0, f.time_tag() + dt);
        limit = cfg.cfl_safety * std::min(spec.dv() / fmax, spec.dx() / (tf * fmax));
    }
    if (dt > limit + 1e-12)
        throw std::runtime_error("step_semilagrangian: CFL violation, suggested dt <= " +
                                 std::to_string(limit));
}

} // namespace

void step_semilagrangian(PhaseDensity& f, const SolverConfig& cfg, double dt,
                         FieldSolution& field_inout) {
    if (f.spec().n != 2) throw std::invalid_argument("step_semilagrangian: grid solver is n = 2 only");
    if (dt == 0.0) return;
    const double t0 = f.time_tag();
    check_cfl(f, cfg, dt, cfg.force_enabled ? &field_inout : nullptr);

    if (cfg.frame == Frame::Lab) {
        advect_x_shear(f, dt / 2.0);
        f.set_time_tag(t0 + dt / 2.0);
        if (cfg.force_enabled) {
            MacroField m = solve_macro(cfg, f);
            field_inout = std::move(m.sol);
            advect_v_kick_lab(f, field_inout, cfg.mu, dt);
        }
        advect_x_shear(f, dt / 2.0);
        f.set_time_tag(t0 + dt);
        return;
    }

    // comoving: both half-steps are force-driven; with the force off the
    // distribution is exactly stationary
    if (!cfg.force_enabled) {
        f.set_time_tag(t0 + dt);
        return;
    }
    advect_xi_force(f, field_inout, cfg.mu, t0 + dt / 4.0, t0 + dt / 4.0, dt / 2.0);
    f.set_time_tag(t0 + dt / 2.0);
    MacroField m = solve_macro(cfg, f);
    field_inout = std::move(m.sol);
    advect_v_kick_comoving(f, field_inout, cfg.mu, t0 + dt / 2.0, dt);
    advect_xi_force(f, field_inout, cfg.mu, t0 + 3.0 * dt / 4.0, t0 + 3.0 * dt / 4.0, dt / 2.0);
    f.set_time_tag(t0 + dt);
}

// --- grid run -----------------------------------------------------------------

RunRecord run_grid(const SolverConfig& cfg, const PhaseDensity& f0, const SampleHook& on_sample,
                   const StepHook& on_step) {
    cfg.validate();
    RunRecord rec;
    PhaseDensity f = f0;
    MacroField m = solve_macro(cfg, f);
    FieldSolution field = std::move(m.sol);
    SpatialField rho = std::move(m.rho);

    double dt = cfg.dt_max;
    {
        // CFL at t = 0; the force only weakens afterwards in the small-data
        // regime, so a constant dt snapped to the cadence keeps samples exact
        const auto& spec = f.spec();
        if (cfg.frame == Frame::Lab) {
            dt = std::min(dt, cfg.cfl_safety * spec.dx() / spec.v_extent);
            if (cfg.force_enabled) {
                double fm = field.grad_phi.sup_norm();
                if (fm > 0.0) dt = std::min(dt, cfg.cfl_safety * spec.dv() / fm);
            }
        } else if (cfg.force_enabled) {
            double fm = field.grad_phi.sup_norm();
            double tf = std::max(1.0, cfg.t_end);
            if (fm > 0.0)
                dt = std::min(dt, cfg.cfl_safety * std::min(spec.dv() / fm, spec.dx() / (tf * fm)));
        }
        if (cfg.series_every > 0.0 && dt < cfg.series_every)
            dt = cfg.series_every / std::ceil(cfg.series_every / dt - 1e-12);
        else if (cfg.series_every > 0.0)
            dt = cfg.series_every;
    }

    auto sample = [&](double t) {
        rec.at("l1").append(t, l1_norm(f));
        rec.at("mass").append(t, mass(f));
        rec.at("sup_rho").append(t, rho.sup_norm());
        rec.at("boundary_fraction").append(t, f.boundary_mass_fraction());
        if (cfg.force_enabled) {
            rec.at("sup_grad_phi").append(t, field.grad_phi.sup_norm(2));
            rec.at("residual").append(t, field.residual_norm);
        }
        if (on_sample) {
            SampleContext ctx{&f, cfg.force_enabled ? &field : nullptr, &rho, t, &rec};
            on_sample(ctx);
        }
    };
    auto want_snapshot = [&](double t) {
        for (double ts : cfg.snapshot_times)
            if (std::abs(ts - t) < 1e-9) return true;
        return false;
    };
    auto snapshot = [&](double t) {
        if (!want_snapshot(t)) return;
        rec.snapshot_times.push_back(t);
        rec.snapshots.push_back(f);
        rec.field_snapshots.push_back(field);
    };

    sample(0.0);
    snapshot(0.0);
    if (cfg.t_end <= 0.0) return rec;

    const auto steps = static_cast<std::int64_t>(std::llround(std::ceil(cfg.t_end / dt - 1e-9)));
    double next_sample = cfg.series_every > 0 ? cfg.series_every : cfg.t_end;
    for (std::int64_t s = 0; s < steps; ++s) {
        double t0 = f.time_tag();
        double step_dt = std::min(dt, cfg.t_end - t0);
        if (step_dt <= 0) break;
        const FieldSolution field_start = field; // for hooks
        try {
            step_semilagrangian(f, cfg, step_dt, field);
        } catch (const std::exception& e) {
            rec.aborted = true;
            rec.abort_reason = e.what();
            break;
        }
        if (cfg.frame == Frame::Lab && cfg.force_enabled) {
            // refresh the recorded field at the end time for observers
        }
        if (on_step) {
            StepInfo info{t0, step_dt, &field_start, &field, &cfg};
            on_step(info);
        }
        double t = f.time_tag();
        if (t + 1e-9 >= next_sample || s == steps - 1 || t + 1e-9 >= cfg.t_end) {
            if (cfg.force_enabled) {
                MacroField mm = solve_macro(cfg, f);
                field = std::move(mm.sol);
                rho = std::move(mm.rho);
            } else {
                rho = cfg.frame == Frame::Lab
                          ? velocity_average(f, false)
                          : rho_on_grid(f, macro_extent(cfg, f.spec(), t), cfg.macro_n, false);
            }
            sample(t);
            snapshot(t);
            while (next_sample <= t + 1e-9) next_sample += cfg.series_every;
        }
    }
    return rec;
}

// --- particles -----------------------------------------------------------------

ParticleEnsemble make_gaussian_ensemble(std::size_t count, double eps, unsigned long long seed,
                                        double width_x, double width_v) {
    ParticleEnsemble p;
    for (int a = 0; a < 3; ++a) {
        p.x[a].resize(count);
        p.v[a].resize(count);
    }
    p.weights.assign(count, 0.0);
    std::mt19937_64 rng(seed);
    auto uniform = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    auto normal_pair = [&](double& z0, double& z1) {
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        z0 = r * std::cos(2.0 * pi * u2);
        z1 = r * std::sin(2.0 * pi * u2);
    };
    // f0 = eps exp(-|x/wx|^2 - |v/wv|^2): per-axis sigma is w/sqrt(2)
    const double sx = width_x / std::sqrt(2.0), sv = width_v / std::sqrt(2.0);
    const double mass = eps * std::pow(pi * width_x * width_x, 1.5) * std::pow(pi * width_v * width_v, 1.5);
    const double w = mass / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
        double z[6];
        normal_pair(z[0], z[1]);
        normal_pair(z[2], z[3]);
        normal_pair(z[4], z[5]);
        for (int a = 0; a < 3; ++a) {
            p.x[a][i] = sx * z[a];
            p.v[a][i] = sv * z[3 + a];
        }
        p.weights[i] = w;
    }
    return p;
}

namespace {

void deposit_and_solve(ParticleState& st, const SolverConfig& cfg, double t) {
    GridSpec pseudo;
    pseudo.n = 3;
    pseudo.x_extent = 6.0;
    pseudo.v_extent = 6.0;
    double extent = 6.0 + (6.2) * t + cfg.macro_margin;
    auto dep = deposit(st.particles, extent, cfg.macro_n);
    st.off_domain_weight = dep.off_domain_weight;
    st.rho = std::move(dep.rho);
    if (cfg.force_enabled)
        st.field = solve_field(cfg.kernel, st.rho);
}

void kick(ParticleEnsemble& p, const FieldSolution& field, double mu, double dt) {
    const std::int64_t M = static_cast<std::int64_t>(p.count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < M; ++i) {
        double x[3] = {p.x[0][static_cast<std::size_t>(i)], p.x[1][static_cast<std::size_t>(i)],
                       p.x[2][static_cast<std::size_t>(i)]};
        for (int a = 0; a < 3; ++a)
            p.v[a][static_cast<std::size_t>(i)] += mu * dt * field.grad_phi.interpolate(a, x);
    }
}

void drift(ParticleEnsemble& p, double dt) {
    const std::int64_t M = static_cast<std::int64_t>(p.count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < M; ++i)
        for (int a = 0; a < 3; ++a)
            p.x[a][static_cast<std::size_t>(i)] += dt * p.v[a][static_cast<std::size_t>(i)];
}

} // namespace

void step_particles(ParticleState& st, const SolverConfig& cfg, double dt) {
    const double t0 = st.particles.time_tag;
    if (cfg.force_enabled) kick(st.particles, st.field, cfg.mu, dt / 2.0);
    drift(st.particles, dt);
    st.particles.time_tag = t0 + dt;
    deposit_and_solve(st, cfg, st.particles.time_tag);
    if (cfg.force_enabled) kick(st.particles, st.field, cfg.mu, dt / 2.0);
}

RunRecord run_particles(const SolverConfig& cfg, ParticleEnsemble p0,
                        const ParticleSampleHook& on_sample) {
    cfg.validate();
    RunRecord rec;
    ParticleState st;
    st.particles = std::move(p0);
    deposit_and_solve(st, cfg, st.particles.time_tag);

    double dt = cfg.dt_max;
    if (cfg.series_every > 0.0 && dt < cfg.series_every)
        dt = cfg.series_every / std::ceil(cfg.series_every / dt - 1e-12);
    else if (cfg.series_every > 0.0)
        dt = std::min(dt, cfg.series_every);

    auto sample = [&](double t) {
        rec.at("total_weight").append(t, st.particles.total_weight());
        rec.at("sup_rho").append(t, st.rho.sup_norm());
        rec.at("off_domain").append(t, st.off_domain_weight);
        if (cfg.force_enabled) {
            rec.at("sup_grad_phi").append(t, st.field.grad_phi.sup_norm(2));
            rec.at("residual").append(t, st.field.residual_norm);
        }
        if (on_sample) {
            ParticleSampleContext ctx{&st, t, &rec};
            on_sample(ctx);
        }
    };
    sample(0.0);
    if (cfg.t_end <= 0.0) return rec;

    double next_sample = cfg.series_every > 0 ? cfg.series_every : cfg.t_end;
    while (st.particles.time_tag < cfg.t_end - 1e-9) {
        double step_dt = std::min(dt, cfg.t_end - st.particles.time_tag);
        step_particles(st, cfg, step_dt);
        double t = st.particles.time_tag;
        if (t + 1e-9 >= next_sample || t + 1e-9 >= cfg.t_end) {
            sample(t);
            while (next_sample <= t + 1e-9) next_sample += cfg.series_every;
        }
    }
    return rec;
}

} // namespace ktlab
