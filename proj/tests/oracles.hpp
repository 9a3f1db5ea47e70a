#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's numerics.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

/// Roots of fn on (a, b): sign scan over n uniform points, then bisection to tol.
inline std::vector<double> scan_roots(const std::function<double(double)>& fn, double a, double b,
                                      std::size_t n = 100000, double tol = 1e-12) {
    std::vector<double> roots;
    double x0 = a, f0 = fn(a);
    for (std::size_t i = 1; i <= n; ++i) {
        const double x1 = a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
        const double f1 = fn(x1);
        if (f0 == 0.0) {
            roots.push_back(x0);
        } else if (f0 * f1 < 0.0) {
            double lo = x0, hi = x1, flo = f0;
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                const double fm = fn(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    return roots;
}

/// sup over a log-spaced u grid of (drift * p + ln u - c x^2), drift = u - bx + r.
inline double hamiltonian_grid_search(double x, double p, double b, double c, double r,
                                      double u_lo = 1e-4, double u_hi = 10.0,
                                      std::size_t n = 100000) {
    double best = -std::numeric_limits<double>::infinity();
    double best_u = u_lo;
    const double step = std::log(u_hi / u_lo) / static_cast<double>(n - 1);
    auto value = [&](double u) { return (u - b * x + r) * p + std::log(u) - c * x * x; };
    for (std::size_t i = 0; i < n; ++i) {
        const double u = u_lo * std::exp(step * static_cast<double>(i));
        const double v = value(u);
        if (v > best) {
            best = v;
            best_u = u;
        }
    }
    // golden-section polish around the best grid point
    double lo = best_u * std::exp(-step), hi = best_u * std::exp(step);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int k = 0; k < 200; ++k) {
        const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
        if (value(m1) < value(m2)) lo = m1; else hi = m2;
    }
    return std::max(best, value(0.5 * (lo + hi)));
}

/// E tau = (1/eps) int_a^s exp(F(z)/eps) int_z^upper exp(-F(y)/eps) dy dz by nested
/// adaptive Gauss-Kronrod. The exponent is shifted by F(z) inside the inner integral.
inline double nested_exit_time(const std::function<double(double)>& F, double eps, double a,
                               double s, double upper) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto inner = [&](double z) {
        const double Fz = F(z);
        return GK::integrate([&](double y) { return std::exp((Fz - F(y)) / eps); }, z, upper, 25,
                             1e-14);
    };
    return GK::integrate(inner, a, s, 25, 1e-13) / eps;
}

/// Centered finite-difference Jacobian of a planar vector field.
template <class Field>
std::array<std::array<double, 2>, 2> fd_jacobian(Field field, double x, double u, double h) {
    const auto fxp = field(x + h, u), fxm = field(x - h, u);
    const auto fup = field(x, u + h), fum = field(x, u - h);
    return {{{(fxp[0] - fxm[0]) / (2 * h), (fup[0] - fum[0]) / (2 * h)},
             {(fxp[1] - fxm[1]) / (2 * h), (fup[1] - fum[1]) / (2 * h)}}};
}

}  // namespace oracle
