#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>

namespace lakelab::ode {

template <std::size_t N>
using Vec = std::array<double, N>;

struct Options {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 1e-3;
    double h_max = std::numeric_limits<double>::infinity();
    double h_min = 1e-14;
    std::size_t max_steps = 1'000'000;
};

/// Terminal event: integration stops where fn changes sign.
/// direction > 0 only triggers on - to +, < 0 only on + to -, 0 on either.
template <std::size_t N>
struct Event {
    std::function<double(double, const Vec<N>&)> fn;
    int direction = 0;
    std::string name;
};

enum class Stop { reached_end, event, max_steps, step_underflow, observer };

struct Outcome {
    Stop stop = Stop::reached_end;
    int event_index = -1;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

/// Dormand-Prince 5(4) embedded Runge-Kutta pair with local extrapolation.
///
/// The observer is invoked after every accepted step (and at a located event)
/// as obs(t, y) and may return false to stop the integration. An optional
/// limiter caps the step size from the current state, e.g. to bound arc length.
template <std::size_t N, class Rhs>
class DormandPrince {
public:
    DormandPrince(Rhs rhs, Options options) : rhs_(std::move(rhs)), opt_(options) {}

    struct Trial {
        Vec<N> y;
        double err;  // weighted RMS error estimate, accept when <= 1
    };

    Trial attempt(double t, const Vec<N>& y, double h) const {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

        Vec<N> k1 = rhs_(t, y), k2, k3, k4, k5, k6, k7, tmp;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        k2 = rhs_(t + c2 * h, tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        k3 = rhs_(t + c3 * h, tmp);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = rhs_(t + c4 * h, tmp);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = rhs_(t + c5 * h, tmp);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                 a65 * k5[i]);
        k6 = rhs_(t + h, tmp);
        Trial out;
        for (std::size_t i = 0; i < N; ++i)
            out.y[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                   b6 * k6[i]);
        k7 = rhs_(t + h, out.y);
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double sc =
                opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(out.y[i]));
            acc += (e / sc) * (e / sc);
        }
        out.err = std::sqrt(acc / static_cast<double>(N));
        return out;
    }

    template <class Observer, class Limiter = std::nullptr_t>
    Outcome integrate(double t0, Vec<N> y0, double t_end, std::span<const Event<N>> events,
                      Observer&& observer, Limiter limiter = nullptr) const {
        Outcome out;
        const double dir = t_end >= t0 ? 1.0 : -1.0;
        double t = t0;
        Vec<N> y = y0;
        double h = std::min(opt_.h_init, opt_.h_max);
        std::vector<double> g_prev(events.size());
        for (std::size_t e = 0; e < events.size(); ++e) g_prev[e] = events[e].fn(t, y);

        while (dir * (t_end - t) > 0.0) {
            if (out.accepted >= opt_.max_steps) {
                out.stop = Stop::max_steps;
                return out;
            }
            double h_cap = opt_.h_max;
            if constexpr (!std::is_same_v<Limiter, std::nullptr_t>) {
                h_cap = std::min(h_cap, limiter(t, y));
            }
            h = std::min({h, h_cap, dir * (t_end - t)});
            if (h < opt_.h_min) {
                out.stop = Stop::step_underflow;
                return out;
            }
            const Trial trial = attempt(t, y, dir * h);
            if (!(trial.err <= 1.0)) {
                ++out.rejected;
                const double fac =
                    std::isfinite(trial.err) ? std::max(0.2, 0.9 * std::pow(trial.err, -0.2)) : 0.2;
                h *= fac;
                continue;
            }

            // event check on the accepted step
            int hit = -1;
            for (std::size_t e = 0; e < events.size(); ++e) {
                const double g_new = events[e].fn(t + dir * h, trial.y);
                const bool up = g_prev[e] < 0.0 && g_new >= 0.0;
                const bool down = g_prev[e] > 0.0 && g_new <= 0.0;
                if ((events[e].direction >= 0 && up) || (events[e].direction <= 0 && down)) {
                    hit = static_cast<int>(e);
                    break;
                }
            }
            if (hit >= 0) {
                const auto [s, ys] = locate(t, y, dir * h, events[hit], g_prev[hit]);
                ++out.accepted;
                observer(t + s, ys);
                out.stop = Stop::event;
                out.event_index = hit;
                return out;
            }

            t += dir * h;
            y = trial.y;
            ++out.accepted;
            for (std::size_t e = 0; e < events.size(); ++e) g_prev[e] = events[e].fn(t, y);
            if (!observer(t, y)) {
                out.stop = Stop::observer;
                return out;
            }
            const double fac = trial.err > 0.0 ? std::min(5.0, 0.9 * std::pow(trial.err, -0.2))
                                               : 5.0;
            h *= std::max(0.2, fac);
        }
        return out;
    }

private:
    // Illinois iteration on the step length from (t, y); sub-steps of an
    // accepted step are at least as accurate as the step itself.
    std::pair<double, Vec<N>> locate(double t, const Vec<N>& y, double h, const Event<N>& ev,
                                     double g0) const {
        double s_lo = 0.0, g_lo = g0;
        double s_hi = h;
        Vec<N> y_hi = attempt(t, y, h).y;
        double g_hi = ev.fn(t + h, y_hi);
        int side = 0;
        for (int it = 0; it < 200; ++it) {
            if (std::abs(s_hi - s_lo) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                             (std::abs(t) + std::abs(h)))
                break;
            double s = s_hi - g_hi * (s_hi - s_lo) / (g_hi - g_lo);
            if (!(s > std::min(s_lo, s_hi) && s < std::max(s_lo, s_hi))) s = 0.5 * (s_lo + s_hi);
            const Vec<N> ys = attempt(t, y, s).y;
            const double gs = ev.fn(t + s, ys);
            if (gs == 0.0) return {s, ys};
            if ((gs > 0.0) == (g_hi > 0.0)) {
                s_hi = s;
                g_hi = gs;
                y_hi = ys;
                if (side == 1) g_lo *= 0.5;
                side = 1;
            } else {
                s_lo = s;
                g_lo = gs;
                if (side == -1) g_hi *= 0.5;
                side = -1;
            }
            if (std::abs(g_hi) <= 1e-15) break;
        }
        return {s_hi, y_hi};
    }

    Rhs rhs_;
    Options opt_;
};

template <std::size_t N, class Rhs>
DormandPrince<N, Rhs> make_dopri(Rhs rhs, Options options) {
    return DormandPrince<N, Rhs>(std::move(rhs), options);
}

}  // namespace lakelab::ode
