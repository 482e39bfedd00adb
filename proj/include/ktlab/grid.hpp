#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "ktlab/vfield.hpp"

namespace ktlab {

// Frame of the phase-space grid. Lab is the plain (x, v) tensor grid; in the
// free-streaming frame the first n axes hold xi = x - v t, which keeps the
// support compact along ballistic spreading (x = xi + v t).
enum class Frame { Lab, Comoving };

struct GridSpec {
    int n = 2;
    double x_extent = 6.0; // half-widths
    double v_extent = 6.0;
    int Nx = 32;
    int Nv = 32;

    double dx() const { return 2.0 * x_extent / Nx; }
    double dv() const { return 2.0 * v_extent / Nv; }
    double cell_volume() const;
    std::int64_t total_cells() const;
    double x_center(int i) const { return -x_extent + (i + 0.5) * dx(); }
    double v_center(int i) const { return -v_extent + (i + 0.5) * dv(); }

    // Nx, Nv >= 8 and even; extents positive; storage within the budget
    void validate(double memory_budget_bytes = 8.0e9) const;
    bool operator==(const GridSpec& o) const = default;
};

class PhaseDensity {
  public:
    PhaseDensity() = default;
    PhaseDensity(const GridSpec& spec, Frame frame, double time_tag);

    const GridSpec& spec() const { return spec_; }
    Frame frame() const { return frame_; }
    double time_tag() const { return time_tag_; }
    void set_time_tag(double t) { time_tag_ = t; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    int naxes() const { return 2 * spec_.n; }
    std::int64_t axis_size(int a) const { return a < spec_.n ? spec_.Nx : spec_.Nv; }
    double axis_step(int a) const { return a < spec_.n ? spec_.dx() : spec_.dv(); }
    double axis_coord(int a, std::int64_t i) const {
        return a < spec_.n ? spec_.x_center(static_cast<int>(i)) : spec_.v_center(static_cast<int>(i));
    }
    std::int64_t stride(int a) const { return strides_[static_cast<std::size_t>(a)]; }

    // fraction of sum |f| living within one cell of any boundary
    double boundary_mass_fraction() const;
    bool support_ok(double tol = 1e-10) const { return boundary_mass_fraction() <= tol; }
    bool all_finite() const;

  private:
    GridSpec spec_;
    Frame frame_ = Frame::Lab;
    double time_tag_ = 0.0;
    std::vector<std::int64_t> strides_;
    std::vector<double> values_;
};

class SpatialField {
  public:
    SpatialField() = default;
    SpatialField(int n, double extent, int N, int components, double time_tag = 0.0);

    int dim() const { return n_; }
    double extent() const { return extent_; }
    int size() const { return N_; }
    int components() const { return components_; }
    double time_tag() const { return time_tag_; }
    void set_time_tag(double t) { time_tag_ = t; }
    double dx() const { return 2.0 * extent_ / N_; }
    double coord(int i) const { return -extent_ + (i + 0.5) * dx(); }
    std::int64_t cells() const;

    double* component(int c) { return values_.data() + c * cells(); }
    const double* component(int c) const { return values_.data() + c * cells(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double sup_norm(int margin = 0) const;
    // multilinear interpolation of component c at point p (clamped to domain)
    double interpolate(int c, const double* p) const;
    bool all_finite() const;

  private:
    int n_ = 2;
    double extent_ = 1.0;
    int N_ = 0;
    int components_ = 1;
    double time_tag_ = 0.0;
    std::vector<double> values_;
};

struct ParticleEnsemble {
    std::vector<double> x[3];
    std::vector<double> v[3];
    std::vector<double> weights;
    double time_tag = 0.0;

    std::size_t count() const { return weights.size(); }
    double total_weight() const;
};

// --- operations ----------------------------------------------------------

// pointwise sampling at cell centers; time_tag = 0; aborts on non-finite
// samples
PhaseDensity sample_function(const GridSpec& spec,
                             const std::function<double(const double*, const double*)>& g,
                             Frame frame = Frame::Lab);

// rho(f) (or rho(|f|)) by the midpoint rule in v; lab frame (or t = 0)
SpatialField velocity_average(const PhaseDensity& f, bool absolute = false);

// rho on an arbitrary macroscopic grid by cloud-in-cell deposit of the phase
// cells at x = xi + v t (comoving) or x (lab); works at any time
SpatialField rho_on_grid(const PhaseDensity& f, double extent, int N, bool absolute = false);

struct MacroMoments {
    SpatialField rho;     // scalar
    SpatialField current; // n components, int v f dv
};
// charge and current deposited in one pass with an explicit map time
// (x = xi + v * map_time for comoving data); the current feeds the field's
// time derivative through the continuity equation
MacroMoments rho_and_current_on_grid(const PhaseDensity& f, double extent, int N, double map_time);

// integral of |f| (compensated summation, deterministic reduction)
double l1_norm(const PhaseDensity& f);
// signed integral of f
double mass(const PhaseDensity& f);

// discrete application of a first-order operator with polynomial
// coefficients; 4th-order central differences, one-sided stencils of the
// same order at the boundary. E is given in lab variables; the comoving
// pullback is applied internally when f lives in the free-streaming frame.
// Rejects expressions with a d/dt slot.
PhaseDensity apply_vfield(const PhaseDensity& f, const FieldExpression& E, double t);

// composition Z^alpha f (rightmost symbol applied first)
PhaseDensity apply_multi_index(const PhaseDensity& f, const std::vector<VectorFieldSymbol>& gamma,
                               const MultiIndex& alpha, double t);

struct DepositResult {
    SpatialField rho;
    double off_domain_weight = 0.0;
};
// cloud-in-cell deposition normalized by cell volume
DepositResult deposit(const ParticleEnsemble& p, double extent, int N);

// deterministic compensated sum of a span (Neumaier)
double compensated_sum(const double* data, std::int64_t count);

} // namespace ktlab
