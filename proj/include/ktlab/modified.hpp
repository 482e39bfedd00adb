#pragma once

#include "ktlab/diagnostics.hpp"
#include "ktlab/transport.hpp"

namespace ktlab {

// Coefficient functions varphi_k^i of the modified fields
// Y^i = Z^i - sum_k varphi_k^i(t,x,v) d_x^k. Translations carry identically
// zero coefficients and are not stored. varphi == 0 at t = 0.
class CoefficientField {
  public:
    CoefficientField() = default;
    CoefficientField(const GridSpec& spec, Frame frame);

    double time_tag() const { return time_tag_; }
    int n() const { return spec_.n; }
    const GridSpec& spec() const { return spec_; }

    // gamma indices of the stored (non-translation) symbols
    const std::vector<int>& stored_symbols() const { return symbol_index_; }
    bool stores(int gamma_index) const;
    // varphi for symbol gamma_index, component k (0-based); throws for
    // translations
    PhaseDensity& varphi(int gamma_index, int k);
    const PhaseDensity& varphi(int gamma_index, int k) const;

    void set_time_tag(double t);

    double max_abs() const;

  private:
    GridSpec spec_;
    Frame frame_ = Frame::Comoving;
    double time_tag_ = 0.0;
    std::vector<int> symbol_index_;
    std::vector<std::vector<PhaseDensity>> varphi_; // [stored symbol][component]
};

// advance the coefficients through one Strang step with the same sub-step
// traces as f, plus the midpoint source mu t d_x^k (Z^i phi + c_i phi);
// f_after is the phase density after the step (used for the commuted
// source solves)
void evolve_coefficients(CoefficientField& coeffs, const StepInfo& info, const PhaseDensity& f_after);

// Y^i f = Z^i f - sum_k varphi_k^i (d_x^k f); equals Z^i f for translations
// and whenever the coefficients vanish
PhaseDensity apply_modified_field(const PhaseDensity& f, int gamma_index,
                                  const CoefficientField& coeffs, double t);

// E_N with Y compositions
EnergyBreakdown modified_energy(const PhaseDensity& f, const CoefficientField& coeffs, int N, double t);

// modified Klainerman-Sobolev ratio: sup (1+t+|x|)^n rho(|f|) / sum ||Y^a f||
double modified_ks_ratio(const PhaseDensity& f, const CoefficientField& coeffs, double t,
                         int macro_n = 192, double margin = 2.0);

struct CommutationResidual {
    double unmodified = 0.0;     // ||[T_phi, Z^i] f||_L1
    double without_bad = 0.0;    // same with the t-growing term removed
    double modified = 0.0;       // ||[T_phi, Y^i] f||_L1
};
// measures how much of the commutator the coefficient correction removes
CommutationResidual commutation_residual(const PhaseDensity& f, const CoefficientField& coeffs,
                                         int gamma_index, const SolverConfig& cfg, double t);

} // namespace ktlab
