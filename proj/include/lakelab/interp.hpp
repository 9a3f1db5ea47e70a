#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace lakelab::interp {

struct HermiteValue {
    double value;
    double slope;
};

/// Cubic Hermite on [x0, x1] with end values f0, f1 and end slopes d0, d1.
inline HermiteValue hermite(double x0, double x1, double f0, double f1, double d0, double d1,
                            double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double value = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1;
    const double dh00 = 6 * t2 - 6 * t, dh10 = 3 * t2 - 4 * t + 1;
    const double dh01 = -6 * t2 + 6 * t, dh11 = 3 * t2 - 2 * t;
    const double slope = (dh00 * f0 + dh01 * f1) / h + dh10 * d0 + dh11 * d1;
    return {value, slope};
}

/// Fritsch-Carlson limiting of end slopes so the cubic stays monotone on a
/// monotone cell. Returns the limited (d0, d1).
inline std::pair<double, double> fritsch_carlson(double h, double f0, double f1, double d0,
                                                 double d1) {
    const double delta = (f1 - f0) / h;
    if (delta == 0.0) return {0.0, 0.0};
    if (d0 * delta < 0.0) d0 = 0.0;
    if (d1 * delta < 0.0) d1 = 0.0;
    const double a = d0 / delta, b = d1 / delta;
    const double s = a * a + b * b;
    if (s > 9.0) {
        const double tau = 3.0 / std::sqrt(s);
        d0 = tau * a * delta;
        d1 = tau * b * delta;
    }
    return {d0, d1};
}

/// Index i with xs[i] <= x < xs[i+1], clamped to [0, n-2]. xs ascending.
inline std::size_t bracket(std::span<const double> xs, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    return std::min(i, xs.size() - 2);
}

}  // namespace lakelab::interp
