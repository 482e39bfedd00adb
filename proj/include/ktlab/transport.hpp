#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ktlab/greens.hpp"
#include "ktlab/grid.hpp"

namespace ktlab {

struct SolverConfig {
    double mu = 1.0; // +1 or -1; characteristics are xdot = v, vdot = mu grad phi
    KernelSpec kernel{KernelKind::Yukawa, 2};
    double cfl_safety = 0.9; // sigma_CFL in (0, 0.9]
    double dt_max = 0.25;
    double t_end = 10.0;
    bool force_enabled = true;
    Frame frame = Frame::Comoving;
    int macro_n = 256;         // macroscopic grid points per axis
    double macro_margin = 2.0; // extent beyond the ballistic support estimate
    double series_every = 0.5; // observer cadence
    std::vector<double> snapshot_times;

    void validate() const;
};

struct Series {
    std::vector<double> t;
    std::vector<double> v;
    void append(double time, double value) {
        t.push_back(time);
        v.push_back(value);
    }
};

struct RunRecord {
    std::map<std::string, Series> series;
    std::vector<double> snapshot_times;
    std::vector<PhaseDensity> snapshots;          // grid runs
    std::vector<FieldSolution> field_snapshots;   // field at snapshot times
    std::vector<std::string> config_echo;
    bool aborted = false;
    std::string abort_reason;

    Series& at(const std::string& name) { return series[name]; }
    const Series& at(const std::string& name) const { return series.at(name); }
    bool has(const std::string& name) const { return series.count(name) != 0; }
    std::uint64_t content_hash() const;
};

// max_t |l1(t) - l1(0)| / l1(0) from the recorded series
double mass_error(const RunRecord& record);

// exact free flow f(t,x,v) = f0(x - v t, v)
double free_transport_exact(const std::function<double(const double*, const double*)>& f0, double t,
                            const double* x, const double* v);

// closed-form spatial density of the free-streamed unit-width Gaussian
// eps * exp(-|x|^2 - |v|^2):  rho(t,x) = eps pi^{n/2} (1+t^2)^{-n/2}
//                                        exp(-|x|^2/(1+t^2))
double gaussian_free_rho(int n, double eps, double t, const double* x);

// macroscopic source/field of a phase density at its current time; the grid
// extent follows the ballistic support in the comoving frame
struct MacroField {
    SpatialField rho;
    FieldSolution sol;
};
double macro_extent(const SolverConfig& cfg, const GridSpec& spec, double t);
MacroField solve_macro(const SolverConfig& cfg, const PhaseDensity& f);

// --- semi-Lagrangian sub-steps (exported so coefficient grids can follow
// --- exactly the same traces as f)

// lab frame: x-shift by v dt (constant along each x pencil), cubic
void advect_x_shear(PhaseDensity& f, double dt);
// lab frame: v-shift by mu grad phi(x) dt (constant along each v pencil)
void advect_v_kick_lab(PhaseDensity& f, const FieldSolution& field, double mu, double dt);
// comoving: xi-shift by -mu t_factor grad phi(xi + v t_map) dt
void advect_xi_force(PhaseDensity& g, const FieldSolution& field, double mu, double t_factor,
                     double t_map, double dt);
// comoving: v-shift by mu grad phi(xi + v t_map) dt
void advect_v_kick_comoving(PhaseDensity& g, const FieldSolution& field, double mu, double t_map,
                            double dt);

struct StepInfo {
    double t0 = 0.0;
    double dt = 0.0;
    const FieldSolution* field_start = nullptr; // solve at t0 (null if force off)
    const FieldSolution* field_mid = nullptr;   // solve at t0 + dt/2
    const SolverConfig* cfg = nullptr;
};
using StepHook = std::function<void(const StepInfo&)>;

// one Strang step: half x/xi advection, field solve, v kick, half advection.
// Throws on CFL violation with a suggested dt in the message.
void step_semilagrangian(PhaseDensity& f, const SolverConfig& cfg, double dt,
                         FieldSolution& field_inout);

struct SampleContext {
    const PhaseDensity* f = nullptr;
    const FieldSolution* field = nullptr;
    const SpatialField* rho_macro = nullptr;
    double t = 0.0;
    RunRecord* record = nullptr;
};
using SampleHook = std::function<void(const SampleContext&)>;

// advance to t_end, recording the standard series (mass, l1, sup_rho,
// sup_grad_phi, residual, boundary_fraction) at the configured cadence;
// deterministic for a fixed config
RunRecord run_grid(const SolverConfig& cfg, const PhaseDensity& f0, const SampleHook& on_sample = {},
                   const StepHook& on_step = {});

// --- particles (n = 3) ----------------------------------------------------

ParticleEnsemble make_gaussian_ensemble(std::size_t count, double eps, unsigned long long seed,
                                        double width_x = 1.0, double width_v = 1.0);

struct ParticleState {
    ParticleEnsemble particles;
    FieldSolution field;
    SpatialField rho;
    double off_domain_weight = 0.0;
};

// leapfrog kick-drift-kick with cloud-in-cell deposit and a field re-solve
// between the half kicks; weights never change
void step_particles(ParticleState& st, const SolverConfig& cfg, double dt);

struct ParticleSampleContext {
    const ParticleState* state = nullptr;
    double t = 0.0;
    RunRecord* record = nullptr;
};
using ParticleSampleHook = std::function<void(const ParticleSampleContext&)>;

RunRecord run_particles(const SolverConfig& cfg, ParticleEnsemble p0,
                        const ParticleSampleHook& on_sample = {});

} // namespace ktlab
