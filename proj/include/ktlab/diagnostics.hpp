#pragma once

#include <string>
#include <vector>

#include "ktlab/transport.hpp"

namespace ktlab {

struct EnergyBreakdown {
    double total = 0.0;
    // (multi-index over the gamma ordering, L1 norm); the empty index is f
    std::vector<std::pair<MultiIndex, double>> terms;
};

// E_N[f] = sum_{|alpha|<=N} ||Z^alpha f||_L1, itemized per ordered
// multi-index; rejects N beyond the stencil budget
EnergyBreakdown energy_N(const PhaseDensity& f, int N, double t);

// sup_x (1+t+|x|)^n rho(|f|)(x) / sum_{|alpha|<=n} ||Z^alpha f||_L1;
// 0 for f == 0. The sup is taken over a macroscopic grid wide enough for
// the ballistic support.
double ks_ratio(const PhaseDensity& f, double t, int macro_n = 192, double margin = 2.0);

struct DecayFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double t0 = 0.0, t1 = 0.0;
    double residual_rms = 0.0;
    int points = 0;
};

// least-squares slope of log(value) vs log(1+t) over the window; needs
// >= 8 positive samples in the window
DecayFit decay_fit(const Series& series, double t0, double t1);

// commuted-field solve: returns Z^gamma phi for the current f via the
// source expansion of the commuted Poisson / screened-Poisson equation
FieldSolution commuted_field(const PhaseDensity& f, const SolverConfig& cfg,
                             const MultiIndex& gamma, double t);

struct BilinearResult {
    double measured = 0.0; // || |grad Z^gamma phi| |Z^beta f| ||_L1
    double envelope = 0.0; // E_N^2 / (1+t)^{n-1 or n}
};
BilinearResult bilinear_term(const PhaseDensity& f, const SolverConfig& cfg, const MultiIndex& gamma,
                             const MultiIndex& beta, double t, double energy_hint = -1.0);

// fit of a recorded sup|grad Z^alpha phi| series against (1+t)
DecayFit grad_field_decay(const RunRecord& record, const std::string& series_name, double t0, double t1);

// sum of bilinear budget terms (the commutator budget integrand) for the
// listed (gamma, beta) pairs; used by the epsilon-scaling sweeps
double commutator_budget(const PhaseDensity& f, const SolverConfig& cfg,
                         const std::vector<std::pair<MultiIndex, MultiIndex>>& pairs, double t);

// grid check of Z rho(f) = rho(Z f) + c rho(f) at finite-difference order;
// returns the worst relative mismatch over the family
double rho_commutation_residual(const PhaseDensity& f, double t);

} // namespace ktlab
