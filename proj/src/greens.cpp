#include "ktlab/greens.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

#include "ktlab/quadrature.hpp"
#include "ktlab/stencil.hpp"

namespace ktlab {

namespace {
constexpr double pi = std::numbers::pi;
std::mutex fftw_planner_mutex;
} // namespace

void KernelSpec::validate() const {
    if (kind == KernelKind::Poisson && n < 3)
        throw std::invalid_argument("KernelSpec: poisson needs n >= 3");
    if (kind == KernelKind::Yukawa && n < 2)
        throw std::invalid_argument("KernelSpec: yukawa needs n >= 2");
    if (n > 3) throw std::invalid_argument("KernelSpec: grids support n in {2,3}");
}

// --- Bessel K ----------------------------------------------------------------

double bessel_k(double nu, double r, double rel_tol) {
    if (!(r > 0.0)) throw std::domain_error("bessel_k: r must be positive");
    if (nu < 0.0) nu = -nu; // K_nu is even in nu
    // cutoff: r(cosh l - 1) - nu l >= 46 keeps the integrand below
    // ~1e-20 * exp(-r)
    double lmax = std::acosh(1.0 + 46.0 / r);
    lmax = std::acosh(1.0 + (48.0 + nu * lmax) / r);
    auto integrand = [&](double l) { return std::exp(-r * std::cosh(l)) * std::cosh(nu * l); };
    auto q = quad_adaptive(integrand, 0.0, lmax, rel_tol, 0.0, 6000);
    if (!q.converged)
        throw std::runtime_error("bessel_k: quadrature did not converge, error " + std::to_string(q.error));
    return q.value;
}

double bessel_k_bound(double nu, double r) {
    if (!(r > 0.0)) throw std::domain_error("bessel_k_bound: r must be positive");
    if (nu < 0.5) throw std::domain_error("bessel_k_bound: nu must be >= 1/2");
    return std::exp(-r) / std::sqrt(r) * (1.0 + std::pow(r, -(nu - 0.5)));
}

double kernel_value(const KernelSpec& spec, double r) {
    spec.validate();
    if (!(r > 0.0)) throw std::domain_error("kernel_value: r must be positive");
    if (spec.kind == KernelKind::Poisson) return -1.0 / (4.0 * pi * r);
    if (spec.n == 2) return -bessel_k(0.0, r) / (2.0 * pi);
    return -std::exp(-r) / (4.0 * pi * r);
}

double kernel_l1(const KernelSpec& spec) {
    spec.validate();
    if (spec.kind == KernelKind::Poisson)
        throw std::domain_error("kernel_l1: the poisson kernel is not integrable");
    auto f = [&](double r) {
        double surf = spec.n == 2 ? 2.0 * pi * r : 4.0 * pi * r * r;
        return std::abs(kernel_value(spec, r)) * surf;
    };
    auto q = quad_adaptive(f, 1e-10, 60.0, 1e-9);
    return q.value;
}

double kernel_grad_l1(const KernelSpec& spec) {
    spec.validate();
    if (spec.kind == KernelKind::Poisson)
        throw std::domain_error("kernel_grad_l1: the poisson gradient is not integrable");
    auto df = [&](double r) {
        if (spec.n == 2) return bessel_k(1.0, r) / (2.0 * pi); // K0' = -K1
        return (1.0 + r) * std::exp(-r) / (4.0 * pi * r * r);
    };
    auto f = [&](double r) {
        double surf = spec.n == 2 ? 2.0 * pi * r : 4.0 * pi * r * r;
        return df(r) * surf;
    };
    auto q = quad_adaptive(f, 1e-10, 60.0, 1e-9);
    return q.value;
}

// --- radial evaluator for fast kernel sampling -------------------------------

namespace {

// log-spaced table with 4-point Lagrange interpolation; used to sample the
// n=2 yukawa kernel (K0) over the whole padded lattice without re-running
// the quadrature per cell
class RadialTable {
  public:
    RadialTable(double rmin, double rmax, int count, const std::function<double(double)>& f)
        : u0_(std::log(rmin)), du_((std::log(rmax) - std::log(rmin)) / (count - 1)), vals_(count) {
        for (int i = 0; i < count; ++i) vals_[static_cast<std::size_t>(i)] = f(std::exp(u0_ + i * du_));
    }
    double operator()(double r) const {
        double u = (std::log(r) - u0_) / du_;
        auto N = static_cast<std::int64_t>(vals_.size());
        std::int64_t i = static_cast<std::int64_t>(std::floor(u));
        i = std::clamp<std::int64_t>(i, 1, N - 3);
        double s = u - i;
        const double* v = vals_.data() + (i - 1);
        double w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        double w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        double w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        double w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        return w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3];
    }

  private:
    double u0_, du_;
    std::vector<double> vals_;
};

double taper(double r, double r0, double r1) {
    if (r <= r0) return 1.0;
    if (r >= r1) return 0.0;
    double s = (r - r0) / (r1 - r0);
    return 1.0 - s * s * s * s * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s * s * s);
}

// cell average over the origin cell: polar wedges in 2d, face pyramids in 3d
double origin_cell_average(const std::function<double(double)>& g, int n, double h) {
    std::vector<double> gn, gw;
    gauss_legendre(48, gn, gw);
    if (n == 2) {
        double acc = 0.0;
        for (std::size_t it = 0; it < gn.size(); ++it) {
            double th = (pi / 8.0) * (gn[it] + 1.0);
            double wth = gw[it] * (pi / 8.0);
            double rmax = (h / 2.0) / std::cos(th);
            double inner = 0.0;
            for (std::size_t ir = 0; ir < gn.size(); ++ir) {
                double r = 0.5 * rmax * (gn[ir] + 1.0);
                inner += gw[ir] * 0.5 * rmax * r * g(r);
            }
            acc += wth * inner;
        }
        return 8.0 * acc / (h * h);
    }
    // n == 3: cube = 6 pyramids over the faces; cone parametrization
    double a = h / 2.0;
    double acc = 0.0;
    for (std::size_t iu = 0; iu < gn.size(); ++iu) {
        double u = a * gn[iu];
        for (std::size_t iv = 0; iv < gn.size(); ++iv) {
            double v = a * gn[iv];
            double rp = std::sqrt(u * u + v * v + a * a);
            double inner = 0.0;
            for (std::size_t is = 0; is < gn.size(); ++is) {
                double s = 0.5 * (gn[is] + 1.0);
                inner += gw[is] * 0.5 * s * s * g(s * rp);
            }
            acc += gw[iu] * a * gw[iv] * a * a * inner;
        }
    }
    return 6.0 * acc / (h * h * h);
}

} // namespace

KernelTable::KernelTable(const KernelSpec& spec, int n_cells, double extent) : spec_(spec) {
    spec_.validate();
    base_ = n_cells;
    padded_ = 2 * n_cells;
    dx_ = 2.0 * extent / n_cells;
    const int n = spec.n;
    const double h = dx_;
    const double diag = std::sqrt(static_cast<double>(n)) * padded_ * h;

    std::function<double(double)> g;
    if (spec.kind == KernelKind::Poisson) {
        g = [](double r) { return -1.0 / (4.0 * pi * r); };
    } else if (n == 3) {
        g = [](double r) { return -std::exp(-r) / (4.0 * pi * r); };
    } else {
        auto tab = std::make_shared<RadialTable>(std::min(1e-4, h * 1e-3), diag * 1.05, 4096,
                                                 [](double r) { return bessel_k(0.0, r); });
        g = [tab](double r) { return -(*tab)(r) / (2.0 * pi); };
    }

    // sample at wrapped lattice offsets
    const int M = padded_;
    std::int64_t cells = 1;
    for (int a = 0; a < n; ++a) cells *= M;
    values_.assign(static_cast<std::size_t>(cells), 0.0);
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * M;
#pragma omp parallel for schedule(static)
    for (std::int64_t idx = 0; idx < cells; ++idx) {
        std::int64_t rem = idx;
        double r2 = 0.0;
        for (int a = 0; a < n; ++a) {
            std::int64_t i = rem / strides[static_cast<std::size_t>(a)];
            rem %= strides[static_cast<std::size_t>(a)];
            std::int64_t off = i <= M / 2 ? i : i - M;
            double d = off * h;
            r2 += d * d;
        }
        if (r2 == 0.0) continue;
        values_[static_cast<std::size_t>(idx)] = g(std::sqrt(r2));
    }
    values_[0] = origin_cell_average(g, n, h);

    // windowed moment-matching corrections (0th and 2nd moment defects of the
    // sampled kernel against a fixed radial taper), cancelled on the origin
    // cell and its axis neighbours; keeps the convolution 4th-order
    // consistent with the discrete operator
    const double r0 = 0.25 * extent, r1 = 0.5 * extent;
    double hn = std::pow(h, n);
    double L0 = 0.0, L2 = 0.0;
    {
        const int B = static_cast<int>(std::ceil(r1 / h)) + 1;
        std::vector<std::int64_t> box(static_cast<std::size_t>(n), 0);
        std::function<void(int)> rec = [&](int axis) {
            if (axis == n) {
                double r2 = 0.0;
                std::int64_t idx = 0;
                for (int a = 0; a < n; ++a) {
                    double d = box[static_cast<std::size_t>(a)] * h;
                    r2 += d * d;
                    std::int64_t wrapped =
                        box[static_cast<std::size_t>(a)] >= 0 ? box[static_cast<std::size_t>(a)]
                                                              : box[static_cast<std::size_t>(a)] + M;
                    idx += wrapped * strides[static_cast<std::size_t>(a)];
                }
                double r = std::sqrt(r2);
                if (r > r1) return;
                double w = taper(r, r0, r1);
                double val = values_[static_cast<std::size_t>(idx)];
                L0 += val * w * hn;
                double d0 = box[0] * h;
                L2 += val * w * d0 * d0 * hn;
                return;
            }
            for (int i = -B; i <= B; ++i) {
                box[static_cast<std::size_t>(axis)] = i;
                rec(axis + 1);
            }
        };
        rec(0);
    }
    auto radial_moment = [&](int power) {
        auto f = [&](double r) {
            double surf = n == 2 ? 2.0 * pi * r : 4.0 * pi * r * r;
            double mom = power == 0 ? 1.0 : r * r / n;
            return g(r) * taper(r, r0, r1) * surf * mom;
        };
        return quad_adaptive(f, 1e-12, r1, 1e-12).value;
    };
    double D0 = radial_moment(0) - L0;
    double D2 = radial_moment(2) - L2;
    double d1 = D2 / (2.0 * std::pow(h, n + 2));
    double d0 = D0 / hn - 2.0 * n * d1;
    values_[0] += d0;
    for (int a = 0; a < n; ++a) {
        values_[static_cast<std::size_t>(strides[static_cast<std::size_t>(a)])] += d1;
        values_[static_cast<std::size_t>((M - 1) * strides[static_cast<std::size_t>(a)])] += d1;
    }
}

double KernelTable::at(const std::vector<int>& offset) const {
    const int n = spec_.n;
    const int M = padded_;
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * M;
    std::int64_t idx = 0;
    for (int a = 0; a < n; ++a) {
        int o = offset[static_cast<std::size_t>(a)];
        int wrapped = ((o % M) + M) % M;
        idx += wrapped * strides[static_cast<std::size_t>(a)];
    }
    return values_[static_cast<std::size_t>(idx)];
}

// --- convolution --------------------------------------------------------------

SpatialField convolve_with_kernel(const KernelTable& table, const SpatialField& rho) {
    const int n = rho.dim();
    const int N = rho.size();
    const int M = table.padded();
    if (M != 2 * N) throw std::invalid_argument("convolve_with_kernel: kernel/grid size mismatch");
    const double hn = std::pow(rho.dx(), n);

    std::vector<int> dims(static_cast<std::size_t>(n), M);
    std::int64_t real_cells = 1;
    for (int a = 0; a < n; ++a) real_cells *= M;
    std::int64_t cplx_cells = real_cells / M * (M / 2 + 1);

    std::vector<double> pad(static_cast<std::size_t>(real_cells), 0.0);
    std::vector<std::complex<double>> krho(static_cast<std::size_t>(cplx_cells));
    std::vector<std::complex<double>> kker(static_cast<std::size_t>(cplx_cells));

    // embed rho into the padded grid
    {
        std::vector<std::int64_t> pstr(static_cast<std::size_t>(n), 1), rstr(static_cast<std::size_t>(n), 1);
        for (int a = n - 2; a >= 0; --a) {
            pstr[static_cast<std::size_t>(a)] = pstr[static_cast<std::size_t>(a + 1)] * M;
            rstr[static_cast<std::size_t>(a)] = rstr[static_cast<std::size_t>(a + 1)] * N;
        }
        const double* src = rho.component(0);
        for (std::int64_t idx = 0; idx < rho.cells(); ++idx) {
            std::int64_t rem = idx, pidx = 0;
            for (int a = 0; a < n; ++a) {
                std::int64_t i = rem / rstr[static_cast<std::size_t>(a)];
                rem %= rstr[static_cast<std::size_t>(a)];
                pidx += i * pstr[static_cast<std::size_t>(a)];
            }
            pad[static_cast<std::size_t>(pidx)] = src[idx];
        }
    }

    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex);
        fftw_plan pf = fftw_plan_dft_r2c(n, dims.data(), pad.data(),
                                         reinterpret_cast<fftw_complex*>(krho.data()), FFTW_ESTIMATE);
        fftw_execute(pf);
        fftw_destroy_plan(pf);
        std::vector<double> ker = table.values();
        fftw_plan pk = fftw_plan_dft_r2c(n, dims.data(), ker.data(),
                                         reinterpret_cast<fftw_complex*>(kker.data()), FFTW_ESTIMATE);
        fftw_execute(pk);
        fftw_destroy_plan(pk);
    }

    const double scale = hn / static_cast<double>(real_cells);
    for (std::int64_t i = 0; i < cplx_cells; ++i)
        krho[static_cast<std::size_t>(i)] *= kker[static_cast<std::size_t>(i)] * scale;

    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex);
        fftw_plan pb = fftw_plan_dft_c2r(n, dims.data(), reinterpret_cast<fftw_complex*>(krho.data()),
                                         pad.data(), FFTW_ESTIMATE);
        fftw_execute(pb);
        fftw_destroy_plan(pb);
    }

    SpatialField phi(n, rho.extent(), N, 1, rho.time_tag());
    {
        std::vector<std::int64_t> pstr(static_cast<std::size_t>(n), 1), rstr(static_cast<std::size_t>(n), 1);
        for (int a = n - 2; a >= 0; --a) {
            pstr[static_cast<std::size_t>(a)] = pstr[static_cast<std::size_t>(a + 1)] * M;
            rstr[static_cast<std::size_t>(a)] = rstr[static_cast<std::size_t>(a + 1)] * N;
        }
        double* dst = phi.component(0);
        for (std::int64_t idx = 0; idx < phi.cells(); ++idx) {
            std::int64_t rem = idx, pidx = 0;
            for (int a = 0; a < n; ++a) {
                std::int64_t i = rem / rstr[static_cast<std::size_t>(a)];
                rem %= rstr[static_cast<std::size_t>(a)];
                pidx += i * pstr[static_cast<std::size_t>(a)];
            }
            dst[idx] = pad[static_cast<std::size_t>(pidx)];
        }
    }
    return phi;
}

namespace {

bool boundary_clear(const SpatialField& rho) {
    // source within 2 cells of the box edge above 1e-8 of the sup flags the
    // solve invalid
    const double cutoff = 1e-8 * rho.sup_norm();
    const int n = rho.dim();
    const int N = rho.size();
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * N;
    const double* p = rho.component(0);
    for (std::int64_t idx = 0; idx < rho.cells(); ++idx) {
        std::int64_t rem = idx;
        bool edge = false;
        for (int a = 0; a < n; ++a) {
            std::int64_t i = rem / strides[static_cast<std::size_t>(a)];
            rem %= strides[static_cast<std::size_t>(a)];
            if (i < 2 || i >= N - 2) { edge = true; break; }
        }
        if (edge && std::abs(p[idx]) > cutoff) return false;
    }
    return true;
}

FieldSolution finish_solution(const KernelSpec& spec, SpatialField phi, const SpatialField& rho,
                              const char* method) {
    FieldSolution sol;
    sol.valid = boundary_clear(rho);
    sol.grad_phi = spatial_gradient(phi);
    sol.phi = std::move(phi);
    sol.method = method;
    sol.residual_norm = field_residual(spec, sol.phi, rho);
    return sol;
}

} // namespace

FieldSolution solve_field(const KernelSpec& spec, const SpatialField& rho) {
    spec.validate();
    if (rho.components() != 1) throw std::invalid_argument("solve_field: scalar source expected");
    if (rho.dim() != spec.n) throw std::invalid_argument("solve_field: dimension mismatch");
    KernelTable table(spec, rho.size(), rho.extent());
    SpatialField phi = convolve_with_kernel(table, rho);
    return finish_solution(spec, std::move(phi), rho, "fast");
}

FieldSolution solve_field_direct(const KernelSpec& spec, const SpatialField& rho) {
    spec.validate();
    if (rho.dim() != spec.n) throw std::invalid_argument("solve_field_direct: dimension mismatch");
    const int n = spec.n;
    const int N = rho.size();
    KernelTable table(spec, N, rho.extent());
    SpatialField phi(n, rho.extent(), N, 1, rho.time_tag());
    const double hn = std::pow(rho.dx(), n);
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * N;
    const double* src = rho.component(0);
    double* dst = phi.component(0);
    const std::int64_t cells = rho.cells();
#pragma omp parallel for schedule(static)
    for (std::int64_t ti = 0; ti < cells; ++ti) {
        std::vector<int> off(static_cast<std::size_t>(n));
        std::vector<std::int64_t> tidx(static_cast<std::size_t>(n));
        std::int64_t rem = ti;
        for (int a = 0; a < n; ++a) {
            tidx[static_cast<std::size_t>(a)] = rem / strides[static_cast<std::size_t>(a)];
            rem %= strides[static_cast<std::size_t>(a)];
        }
        double acc = 0.0, comp = 0.0;
        for (std::int64_t si = 0; si < cells; ++si) {
            std::int64_t r2 = si;
            for (int a = 0; a < n; ++a) {
                std::int64_t s = r2 / strides[static_cast<std::size_t>(a)];
                r2 %= strides[static_cast<std::size_t>(a)];
                off[static_cast<std::size_t>(a)] = static_cast<int>(tidx[static_cast<std::size_t>(a)] - s);
            }
            double v = table.at(off) * src[si];
            double t = acc + v;
            comp += (std::abs(acc) >= std::abs(v)) ? (acc - t) + v : (v - t) + acc;
            acc = t;
        }
        dst[ti] = (acc + comp) * hn;
    }
    return finish_solution(spec, std::move(phi), rho, "direct");
}

double field_residual(const KernelSpec& spec, const SpatialField& phi, const SpatialField& rho) {
    if (phi.size() != rho.size() || phi.dim() != rho.dim())
        throw std::invalid_argument("field_residual: grids differ");
    SpatialField lap = spatial_laplacian(phi);
    const double m2 = spec.m2();
    const int n = phi.dim();
    const int N = phi.size();
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * N;
    const double* lp = lap.component(0);
    const double* pp = phi.component(0);
    const double* rp = rho.component(0);
    double num = 0.0, den = 0.0;
    for (std::int64_t idx = 0; idx < phi.cells(); ++idx) {
        std::int64_t rem = idx;
        bool interior = true;
        for (int a = 0; a < n; ++a) {
            std::int64_t i = rem / strides[static_cast<std::size_t>(a)];
            rem %= strides[static_cast<std::size_t>(a)];
            if (i < 2 || i >= N - 2) { interior = false; break; }
        }
        if (!interior) continue;
        double r = lp[idx] - m2 * pp[idx] - rp[idx];
        num += r * r;
        den += rp[idx] * rp[idx];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::sqrt(num);
    return std::sqrt(num / den);
}

SpatialField iterated_yukawa_convolution(const SpatialField& rho, int k, int n) {
    if (k < 0) throw std::invalid_argument("iterated_yukawa_convolution: k must be >= 0");
    if (k == 0) return rho;
    KernelSpec spec{KernelKind::Yukawa, n};
    KernelTable table(spec, rho.size(), rho.extent());
    SpatialField cur = rho;
    for (int i = 0; i < k; ++i) cur = convolve_with_kernel(table, cur);
    return cur;
}

// --- kernel decay integral -----------------------------------------------------

namespace {

double angular_factor(int n, double r, double x) {
    if (x == 0.0) {
        double surf = n == 2 ? 2.0 * pi : 4.0 * pi;
        return surf / std::pow(1.0 + r, n);
    }
    if (n == 3) {
        auto F = [](double w) { return 1.0 / (2.0 * (1.0 + w) * (1.0 + w)) - 1.0 / (1.0 + w); };
        double lo = std::abs(r - x), hi = r + x;
        return 2.0 * pi / (r * x) * (F(hi) - F(lo));
    }
    auto f = [&](double th) {
        double w = std::sqrt(r * r + x * x + 2.0 * r * x * std::cos(th));
        return 1.0 / ((1.0 + w) * (1.0 + w));
    };
    return 2.0 * quad_adaptive(f, 0.0, pi, 1e-11, 0.0, 600).value;
}

} // namespace

double kernel_decay_integral(int n, double x, DecayRegion region, double rel_tol) {
    if (n != 2 && n != 3) throw std::invalid_argument("kernel_decay_integral: n must be 2 or 3");
    if (x < 0) throw std::invalid_argument("kernel_decay_integral: |x| must be >= 0");
    auto radial = [&](double r) { return angular_factor(n, r, x); };

    if (region == DecayRegion::R2) {
        if (x == 0.0) return 0.0;
        return quad_adaptive(radial, 2.0 * x / 3.0, 2.0 * x, rel_tol).value;
    }
    // splits mirror the proof regions R1 / R2 / R3, plus a mapped tail
    std::vector<double> brk{0.0};
    if (x > 0) {
        brk.push_back(2.0 * x / 3.0);
        brk.push_back(2.0 * x);
    }
    double far = std::max(2.0 * x, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < brk.size(); ++i)
        total += quad_adaptive(radial, brk[i], brk[i + 1], rel_tol).value;
    total += quad_adaptive(radial, brk.back(), far, rel_tol).value;
    // tail: r = far + (1-s)/s maps (0,1] to [far, inf)
    auto tail = [&](double s) {
        double r = far + (1.0 - s) / s;
        return radial(r) / (s * s);
    };
    total += quad_adaptive(tail, 1e-8, 1.0, rel_tol).value;
    return total;
}

// --- Gauss-Legendre -------------------------------------------------------------

void gauss_legendre(int npts, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(static_cast<std::size_t>(npts));
    weights.resize(static_cast<std::size_t>(npts));
    for (int i = 0; i < npts; ++i) {
        double x = std::cos(pi * (i + 0.75) / (npts + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < npts; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            double dp = npts * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < npts; ++j) {
            double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        double dp = npts * (x * p0 - p1) / (x * x - 1.0);
        nodes[static_cast<std::size_t>(i)] = x;
        weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

} // namespace ktlab
