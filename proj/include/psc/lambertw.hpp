#pragma once

#include <cmath>
#include <stdexcept>

namespace psc {

// Principal-branch Lambert W for x >= 0, solving w * exp(w) = x.
// Halley iteration from w0 = log(1 + x); converges in a handful of steps
// everywhere on the nonnegative axis.
inline double lambert_w0(double x) {
    if (std::isnan(x) || x < 0.0)
        throw std::domain_error("lambert_w0: argument must be nonnegative");
    if (x == 0.0) return 0.0;

    double w = std::log1p(x);
    const double tol = 1e-12 * std::max(1.0, x);
    for (int it = 0; it < 50; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        if (std::fabs(f) <= tol) return w;
        const double fp = ew * (w + 1.0);
        const double fpp = ew * (w + 2.0);
        const double step = f / (fp - 0.5 * f * fpp / fp);
        w -= step;
        if (std::fabs(step) <= 1e-16 * std::max(1.0, std::fabs(w))) {
            if (std::fabs(w * std::exp(w) - x) <= tol) return w;
        }
    }
    if (std::fabs(w * std::exp(w) - x) <= 1e-10 * std::max(1.0, x)) return w;
    throw std::runtime_error("lambert_w0: did not converge");
}

}  // namespace psc
