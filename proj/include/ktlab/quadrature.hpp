#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ktlab {

// Gauss-Kronrod 7-15 panel; returns the K15 value and an error estimate.
template <class F>
double quad_g7k15(const F& f, double a, double b, double& err) {
    // nodes, G7 weights, K15 weights
    static const double nw[8][3] = {
        {0.000000000000000, 0.417959183673469, 0.209482141084728},
        {0.405845151377397, 0.381830050505119, 0.190350578064785},
        {0.741531185599394, 0.279705391489277, 0.140653259715525},
        {0.949107912342759, 0.129484966168870, 0.063092092629979},
        {0.207784955007898, 0.0, 0.204432940075298},
        {0.586087235467691, 0.0, 0.169004726639267},
        {0.864864423359769, 0.0, 0.104790010322250},
        {0.991455371120813, 0.0, 0.022935322010529}};
    const double x0 = 0.5 * (a + b);
    const double m = b - x0;
    double y0 = f(x0);
    double g7 = nw[0][1] * y0;
    double k15 = nw[0][2] * y0;
    for (int i = 1; i < 8; ++i) {
        double mx = m * nw[i][0];
        double yi = f(x0 + mx) + f(x0 - mx);
        k15 += nw[i][2] * yi;
        g7 += nw[i][1] * yi;
    }
    g7 *= m;
    k15 *= m;
    err = std::abs(g7 - k15);
    return k15;
}

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
};

// Adaptive bisection on [a,b]; splits the worst panel until the summed error
// estimate meets the tolerance.
template <class F>
QuadResult quad_adaptive(const F& f, double a, double b, double rel_tol = 1e-12,
                         double abs_tol = 0.0, std::size_t max_panels = 4000) {
    struct Panel {
        double a, b, val, err;
    };
    std::vector<Panel> panels;
    double e0;
    double v0 = quad_g7k15(f, a, b, e0);
    panels.push_back({a, b, v0, e0});
    auto totals = [&]() {
        double v = 0, e = 0;
        for (const auto& p : panels) { v += p.val; e += p.err; }
        return std::pair<double, double>(v, e);
    };
    while (panels.size() < max_panels) {
        auto [v, e] = totals();
        if (e <= std::max(abs_tol, rel_tol * std::abs(v))) return {v, e, true};
        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].err > panels[worst].err) worst = i;
        Panel p = panels[worst];
        panels.erase(panels.begin() + static_cast<std::ptrdiff_t>(worst));
        double mid = 0.5 * (p.a + p.b);
        double e1, e2;
        double v1 = quad_g7k15(f, p.a, mid, e1);
        double v2 = quad_g7k15(f, mid, p.b, e2);
        panels.push_back({p.a, mid, v1, e1});
        panels.push_back({mid, p.b, v2, e2});
    }
    auto [v, e] = totals();
    return {v, e, e <= std::max(abs_tol, rel_tol * std::abs(v))};
}

// fixed-order Gauss-Legendre nodes/weights on [-1,1]
void gauss_legendre(int npts, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace ktlab
