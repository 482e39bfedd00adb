#include "ktlab/stencil.hpp"

#include <stdexcept>

namespace ktlab {

namespace {

void axis_sweep(const SpatialField& in, int comp_in, SpatialField& out, int comp_out, int axis,
                bool second_pass_for_laplacian = false) {
    (void)second_pass_for_laplacian;
    const int n = in.dim();
    const int N = in.size();
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * N;
    const std::int64_t str = strides[static_cast<std::size_t>(axis)];
    const std::int64_t total = in.cells();
    const std::int64_t pencils = total / N;
    const double h = in.dx();
    const double* src0 = in.component(comp_in);
    double* dst0 = out.component(comp_out);

#pragma omp parallel
    {
        std::vector<double> buf(static_cast<std::size_t>(N)), der(static_cast<std::size_t>(N));
#pragma omp for schedule(static)
        for (std::int64_t p = 0; p < pencils; ++p) {
            std::int64_t base = 0, rem = p;
            for (int b = n - 1; b >= 0; --b) {
                if (b == axis) continue;
                std::int64_t i = rem % N;
                rem /= N;
                base += i * strides[static_cast<std::size_t>(b)];
            }
            for (int i = 0; i < N; ++i) buf[static_cast<std::size_t>(i)] = src0[base + i * str];
            pencil_derivative4(buf.data(), der.data(), N, h);
            for (int i = 0; i < N; ++i) dst0[base + i * str] += der[static_cast<std::size_t>(i)];
        }
    }
}

} // namespace

SpatialField spatial_gradient(const SpatialField& phi) {
    if (phi.components() != 1) throw std::invalid_argument("spatial_gradient: scalar input expected");
    SpatialField g(phi.dim(), phi.extent(), phi.size(), phi.dim(), phi.time_tag());
    for (int a = 0; a < phi.dim(); ++a) axis_sweep(phi, 0, g, a, a);
    return g;
}

SpatialField spatial_laplacian(const SpatialField& phi) {
    if (phi.components() != 1) throw std::invalid_argument("spatial_laplacian: scalar input expected");
    const int n = phi.dim();
    const int N = phi.size();
    SpatialField lap(n, phi.extent(), N, 1, phi.time_tag());
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * N;
    const double h2 = phi.dx() * phi.dx();
    const std::int64_t total = phi.cells();
    const double* src = phi.component(0);
    double* dst = lap.component(0);

    for (int axis = 0; axis < n; ++axis) {
        const std::int64_t str = strides[static_cast<std::size_t>(axis)];
        const std::int64_t pencils = total / N;
#pragma omp parallel
        {
            std::vector<double> buf(static_cast<std::size_t>(N));
#pragma omp for schedule(static)
            for (std::int64_t p = 0; p < pencils; ++p) {
                std::int64_t base = 0, rem = p;
                for (int b = n - 1; b >= 0; --b) {
                    if (b == axis) continue;
                    std::int64_t i = rem % N;
                    rem /= N;
                    base += i * strides[static_cast<std::size_t>(b)];
                }
                for (int i = 0; i < N; ++i) buf[static_cast<std::size_t>(i)] = src[base + i * str];
                // 4th-order second derivative; 2-cell one-sided fallback at
                // the ends (2nd order there, outside the reported interior)
                for (int i = 0; i < N; ++i) {
                    double d2;
                    if (i >= 2 && i <= N - 3) {
                        d2 = (-buf[static_cast<std::size_t>(i - 2)] + 16.0 * buf[static_cast<std::size_t>(i - 1)] -
                              30.0 * buf[static_cast<std::size_t>(i)] + 16.0 * buf[static_cast<std::size_t>(i + 1)] -
                              buf[static_cast<std::size_t>(i + 2)]) /
                             (12.0 * h2);
                    } else {
                        int j = std::min(std::max(i, 1), N - 2);
                        d2 = (buf[static_cast<std::size_t>(j - 1)] - 2.0 * buf[static_cast<std::size_t>(j)] +
                              buf[static_cast<std::size_t>(j + 1)]) /
                             h2;
                    }
                    dst[base + i * str] += d2;
                }
            }
        }
    }
    return lap;
}

SpatialField apply_macro_vfield(const SpatialField& phi, const FieldExpression& E, double t) {
    if (phi.components() != 1) throw std::invalid_argument("apply_macro_vfield: scalar input expected");
    if (E.order() > 1) throw std::invalid_argument("apply_macro_vfield: first-order operators only");
    if (E.has_time_slot()) throw std::invalid_argument("apply_macro_vfield: d/dt slot not allowed");
    const int n = phi.dim();
    const int N = phi.size();
    SpatialField out(n, phi.extent(), N, 1, phi.time_tag());
    std::vector<std::int64_t> strides(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a) strides[static_cast<std::size_t>(a)] = strides[static_cast<std::size_t>(a + 1)] * N;

    for (const auto& [k, coeff] : E.terms()) {
        int slot = -1, order = 0;
        for (std::size_t v = 0; v < k.size(); ++v)
            if (k[v]) { order += k[v]; slot = static_cast<int>(v); }
        if (order == 0) {
            // multiplication term
            const std::int64_t total = phi.cells();
            double* dst = out.component(0);
            const double* src = phi.component(0);
#pragma omp parallel for schedule(static)
            for (std::int64_t idx = 0; idx < total; ++idx) {
                std::int64_t rem = idx;
                std::vector<double> point(static_cast<std::size_t>(2 * n + 1), 0.0);
                point[0] = t;
                for (int a = 0; a < n; ++a) {
                    std::int64_t i = rem / strides[static_cast<std::size_t>(a)];
                    rem %= strides[static_cast<std::size_t>(a)];
                    point[static_cast<std::size_t>(var_x(a + 1, n))] = phi.coord(static_cast<int>(i));
                }
                dst[idx] += coeff.eval(point) * src[idx];
            }
            continue;
        }
        if (slot > n) throw std::invalid_argument("apply_macro_vfield: v-slot on a macroscopic field");
        const int axis = slot - 1;
        const std::int64_t str = strides[static_cast<std::size_t>(axis)];
        const std::int64_t pencils = phi.cells() / N;
        const double h = phi.dx();
        const double* src = phi.component(0);
        double* dst = out.component(0);
#pragma omp parallel
        {
            std::vector<double> buf(static_cast<std::size_t>(N)), der(static_cast<std::size_t>(N));
            std::vector<double> point(static_cast<std::size_t>(2 * n + 1), 0.0);
            std::vector<double> cc;
#pragma omp for schedule(static)
            for (std::int64_t p = 0; p < pencils; ++p) {
                std::int64_t base = 0, rem = p;
                point[0] = t;
                for (int b = n - 1; b >= 0; --b) {
                    if (b == axis) continue;
                    std::int64_t i = rem % N;
                    rem /= N;
                    base += i * strides[static_cast<std::size_t>(b)];
                    point[static_cast<std::size_t>(var_x(b + 1, n))] = phi.coord(static_cast<int>(i));
                }
                for (int i = 0; i < N; ++i) buf[static_cast<std::size_t>(i)] = src[base + i * str];
                pencil_derivative4(buf.data(), der.data(), N, h);
                coeff.collapse(var_x(axis + 1, n), point, cc);
                for (int i = 0; i < N; ++i) {
                    double u = phi.coord(i);
                    double c = 0.0;
                    for (std::size_t q = cc.size(); q-- > 0;) c = c * u + cc[q];
                    dst[base + i * str] += c * der[static_cast<std::size_t>(i)];
                }
            }
        }
    }
    return out;
}

} // namespace ktlab
