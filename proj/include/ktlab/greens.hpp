#pragma once

#include <string>
#include <vector>

#include "ktlab/grid.hpp"

namespace ktlab {

enum class KernelKind { Poisson, Yukawa };

struct KernelSpec {
    KernelKind kind = KernelKind::Yukawa;
    int n = 2;
    // screened mass is fixed to 1 for yukawa; poisson needs n >= 3
    void validate() const;
    double m2() const { return kind == KernelKind::Yukawa ? 1.0 : 0.0; }
};

// K_nu(r) by adaptive quadrature of the integral representation
// int_0^inf exp(-r cosh l) cosh(nu l) dl; relative error <= 1e-10.
double bessel_k(double nu, double r, double rel_tol = 1e-11);

// envelope (e^-r / sqrt r)(1 + r^{-(nu-1/2)}); domain nu >= 1/2, r > 0
double bessel_k_bound(double nu, double r);

// normalized fundamental solution value at radius r > 0:
//   poisson n=3: -1/(4 pi r)
//   yukawa  n=2: -K0(r)/(2 pi)
//   yukawa  n=3: -exp(-r)/(4 pi r)
double kernel_value(const KernelSpec& spec, double r);

// radial L1 masses of the kernel and its gradient (finite for yukawa)
double kernel_l1(const KernelSpec& spec);
double kernel_grad_l1(const KernelSpec& spec);

struct FieldSolution {
    SpatialField phi;
    SpatialField grad_phi;
    double residual_norm = 0.0;
    std::string method; // "fast" or "direct"
    bool valid = true;  // false when the source touched the boundary margin
};

// Pre-tabulated kernel on the padded grid (shared by the fast and direct
// routes). The singular origin cell carries its exact cell average; the
// origin and axis-neighbour cells carry windowed moment-matching corrections
// so the convolution keeps 4th-order consistency with the discrete operator.
class KernelTable {
  public:
    KernelTable(const KernelSpec& spec, int n_cells, double extent);

    const KernelSpec& spec() const { return spec_; }
    int padded() const { return padded_; }
    double dx() const { return dx_; }
    // value at padded lattice offset (wrapped indices)
    double at(const std::vector<int>& offset) const;
    const std::vector<double>& values() const { return values_; }

  private:
    KernelSpec spec_;
    int base_ = 0, padded_ = 0;
    double dx_ = 0.0;
    std::vector<double> values_;
};

// phi = G * rho by zero-padded FFT convolution; grad by 4th-order
// differences; residual recorded.
FieldSolution solve_field(const KernelSpec& spec, const SpatialField& rho);

// O(M^2) direct-sum oracle using the same kernel table
FieldSolution solve_field_direct(const KernelSpec& spec, const SpatialField& rho);

// relative L2 norm of (discrete Laplacian phi - m^2 phi - rho) over the
// interior (2-cell margin), 4th-order stencil; returns 0 for rho = phi = 0
double field_residual(const KernelSpec& spec, const SpatialField& phi, const SpatialField& rho);

// k-fold repeated convolution (k = 0 returns rho unchanged)
SpatialField iterated_yukawa_convolution(const SpatialField& rho, int k, int n = 2);

// Kernel-decay integral J_n(x) = int dy / (|y|^{n-1} (1+|x+y|)^n) by
// adaptive radial quadrature split at (2/3)|x| and 2|x|; `region` selects
// all of it or the middle annulus only.
enum class DecayRegion { All, R2 };
double kernel_decay_integral(int n, double x, DecayRegion region = DecayRegion::All,
                             double rel_tol = 1e-10);

// generic n-d convolution with the sampled kernel table (used internally
// and by the iterated convolution)
SpatialField convolve_with_kernel(const KernelTable& table, const SpatialField& rho);

} // namespace ktlab
