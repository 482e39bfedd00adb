#pragma once

#include <cstdint>
#include <vector>

#include "ktlab/grid.hpp"

namespace ktlab {

// 4th-order first derivative along a contiguous pencil; one-sided stencils
// of the same order at the ends. count >= 5.
inline void pencil_derivative4(const double* in, double* out, std::int64_t count, double h) {
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

// gradient of a scalar field, 4th-order differences, n components
SpatialField spatial_gradient(const SpatialField& phi);

// 4th-order discrete Laplacian of a scalar field (interior values only are
// meaningful up to a 2-cell margin; boundary cells use one-sided first
// derivatives twice)
SpatialField spatial_laplacian(const SpatialField& phi);

// apply a macroscopic first-order operator (in (t,x) variables) to a scalar
// field by 4th-order differences; coefficients evaluated at cell centers
SpatialField apply_macro_vfield(const SpatialField& phi, const FieldExpression& E, double t);

} // namespace ktlab
