#include "lakelab/metastability.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

#include <boost/math/tools/roots.hpp>

#include "lakelab/error.hpp"
#include "lakelab/hjb.hpp"
#include "lakelab/interp.hpp"
#include "lakelab/ode.hpp"
#include "lakelab/philox.hpp"
#include "lakelab/pontryagin.hpp"

namespace lakelab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Hermite piece of (F, Fp) containing yy.
interp::HermiteValue potential_at(const Potential& P, double yy) {
    if (!(yy >= P.y_min() - 1e-12 && yy <= P.y_max() + 1e-12)) {
        std::ostringstream os;
        os << "Potential: y = " << yy << " outside [" << P.y_min() << ", " << P.y_max() << "]";
        throw DomainError(os.str());
    }
    yy = std::clamp(yy, P.y_min(), P.y_max());
    const std::size_t i = std::min(static_cast<std::size_t>((yy - P.y_min()) / P.h), P.y.size() - 2);
    return interp::hermite(P.y[i], P.y[i + 1], P.F[i], P.F[i + 1], P.Fp[i], P.Fp[i + 1], yy);
}

double polish(const std::function<double(double)>& fn, double lo, double hi) {
    boost::uintmax_t max_iter = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(50);
    const auto [a, b] = boost::math::tools::toms748_solve(fn, lo, hi, tol, max_iter);
    return 0.5 * (a + b);
}

// Simpson rule of fp over [a, b].
double simpson(const std::function<double(double)>& fp, double a, double b) {
    return (b - a) / 6.0 * (fp(a) + 4.0 * fp(0.5 * (a + b)) + fp(b));
}

// Locates extrema of F from the nodal F' signs and assigns wells and barrier.
void locate_extrema(Potential& P, const std::function<double(double)>& fp,
                    std::optional<double> kink) {
    for (std::size_t i = 0; i + 1 < P.y.size(); ++i) {
        const bool s0 = P.Fp[i] >= 0.0, s1 = P.Fp[i + 1] >= 0.0;
        if (s0 == s1) continue;
        double root;
        if (kink && *kink > P.y[i] && *kink < P.y[i + 1]) {
            root = *kink;
        } else {
            root = polish(fp, P.y[i], P.y[i + 1]);
        }
        (s0 ? P.maxima : P.minima).push_back(root);
    }
    for (std::size_t k = 0; k + 1 < P.minima.size(); ++k) {
        const double a = P.minima[k], b = P.minima[k + 1];
        for (double m : P.maxima) {
            if (m > a && m < b) {
                P.y_minus = a;
                P.y_star = m;
                P.y_plus = b;
                return;
            }
        }
    }
}

}  // namespace

double Potential::value(double yy) const { return potential_at(*this, yy).value; }
double Potential::derivative(double yy) const { return potential_at(*this, yy).slope; }

double Potential::barrier_height() const {
    if (!double_well()) throw DomainError("Potential: no double well, barrier undefined");
    return F_star - F_plus;
}

Potential build_potential(const ValueFunction& vf, const LakeParams& params,
                          const RecyclingCurve& curve, const PotentialGrid& grid,
                          bool require_double_well) {
    if (!(grid.h > 0.0)) throw DomainError("build_potential: grid spacing must be positive");
    const double eps = 0.5 * vf.sigma * vf.sigma;
    const double y_top = std::min(grid.y_max, std::log(0.999 * vf.grid.x_max));
    const long i_lo = static_cast<long>(std::ceil(grid.y_min / grid.h - 1e-9));
    const long i_hi = static_cast<long>(std::floor(y_top / grid.h + 1e-9));
    if (i_lo > 0 || i_hi < 0 || i_hi - i_lo < 4)
        throw DomainError("build_potential: the y-grid must contain the anchor y = 0");

    std::optional<double> kink;
    if (vf.skiba) kink = std::log(vf.skiba->x);

    auto fp_side = [&](double y, std::optional<Side> side) {
        const double x = std::exp(y);
        const double vp = vf.derivative(x, side);
        if (!(vp < 0.0)) {
            std::ostringstream os;
            os << "build_potential: V'(" << x << ") = " << vp << " is not negative";
            throw DomainError(os.str());
        }
        return std::exp(-y) / vp + params.b - curve.r(x) / x + eps;
    };
    std::function<double(double)> fp = [&](double y) { return fp_side(y, std::nullopt); };
    std::function<double(double)> fp_right = [&](double y) { return fp_side(y, Side::right); };

    // integral of F' across [a, b], split at the kink
    auto integral = [&](double a, double b) {
        if (kink && *kink > std::min(a, b) && *kink < std::max(a, b)) {
            const double lo = std::min(a, b), hi = std::max(a, b);
            const double v = simpson(fp, lo, *kink) + simpson(fp_right, *kink, hi);
            return a < b ? v : -v;
        }
        return simpson(fp, a, b);
    };

    Potential P;
    P.h = grid.h;
    P.sigma = vf.sigma;
    const std::size_t n = static_cast<std::size_t>(i_hi - i_lo + 1);
    P.y.resize(n);
    P.F.resize(n);
    P.Fp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        P.y[k] = static_cast<double>(i_lo + static_cast<long>(k)) * grid.h;
        P.Fp[k] = fp(P.y[k]);
    }
    const std::size_t k0 = static_cast<std::size_t>(-i_lo);
    P.y[k0] = 0.0;
    P.F[k0] = 0.0;
    for (std::size_t k = k0 + 1; k < n; ++k) P.F[k] = P.F[k - 1] + integral(P.y[k - 1], P.y[k]);
    for (std::size_t k = k0; k-- > 0;) P.F[k] = P.F[k + 1] - integral(P.y[k], P.y[k + 1]);

    locate_extrema(P, fp, kink);
    if (require_double_well && !P.double_well())
        throw DomainError("build_potential: F has no two minima separated by a maximum");

    // exact values at the landmarks, integrated from the nearest node on the left
    auto exact_F = [&](double yy) {
        const std::size_t i = std::min(static_cast<std::size_t>((yy - P.y_min()) / P.h), n - 2);
        return P.F[i] + integral(P.y[i], yy);
    };
    if (P.double_well()) {
        P.F_minus = exact_F(*P.y_minus);
        P.F_star = exact_F(*P.y_star);
        P.F_plus = exact_F(*P.y_plus);
    }

    // tail line F >= b y + C: grid minimum of F - b y over y >= 0, lowered by the
    // largest possible further decrease, since (F - b y)' >= -(u + a) e^{-y} beyond
    P.tail_slope = params.b;
    double C = std::numeric_limits<double>::infinity();
    for (std::size_t k = k0; k < n; ++k) C = std::min(C, P.F[k] - params.b * P.y[k]);
    const double x_end = std::exp(P.y.back());
    const double u_end = vf.policy(x_end);
    C = std::min(C, P.F.back() - params.b * P.y.back() - (u_end + curve.asymptote()) / x_end);
    P.tail_constant = C;
    return P;
}

Potential potential_from_function(const std::function<double(double)>& F,
                                  const std::function<double(double)>& Fp, double y_min,
                                  double y_max, double h) {
    if (!(h > 0.0) || !(y_max > y_min)) throw DomainError("potential_from_function: bad grid");
    Potential P;
    P.h = h;
    const std::size_t n = static_cast<std::size_t>(std::floor((y_max - y_min) / h + 1e-9)) + 1;
    for (std::size_t k = 0; k < n; ++k) {
        const double y = y_min + static_cast<double>(k) * h;
        P.y.push_back(y);
        P.F.push_back(F(y));
        P.Fp.push_back(Fp(y));
    }
    std::function<double(double)> fp = Fp;
    locate_extrema(P, fp, std::nullopt);
    if (P.double_well()) {
        P.F_minus = F(*P.y_minus);
        P.F_star = F(*P.y_star);
        P.F_plus = F(*P.y_plus);
    }
    P.tail_slope = P.Fp.back();
    P.tail_constant = P.F.back() - P.tail_slope * P.y.back();
    return P;
}

ExitQuadrature mean_exit_time_quadrature(const Potential& P, double epsilon, double y_upper,
                                         double y_absorb, double y_start) {
    if (!(epsilon > 0.0)) throw DomainError("mean_exit_time_quadrature: epsilon must be positive");
    if (!(y_absorb < y_start && y_start < y_upper))
        throw DomainError("mean_exit_time_quadrature: need y_absorb < y_start < y_upper");
    if (y_absorb < P.y_min() || y_upper > P.y_max() + 1e-12)
        throw DomainError("mean_exit_time_quadrature: limits outside the potential grid");
    if (!(P.tail_slope > 0.0))
        throw DomainError("mean_exit_time_quadrature: potential lacks a growing tail line");

    double fp_max = 0.0;
    for (std::size_t k = 0; k < P.y.size(); ++k)
        if (P.y[k] >= y_absorb && P.y[k] <= y_upper) fp_max = std::max(fp_max, std::abs(P.Fp[k]));
    const double h_target =
        std::min({P.h, std::sqrt(epsilon) / 100.0, epsilon / (20.0 * std::max(fp_max, 1e-300))});

    // nodes on [y_absorb, y_start] then [y_start, y_upper]
    const std::size_t n1 = static_cast<std::size_t>(std::ceil((y_start - y_absorb) / h_target));
    const std::size_t n2 = static_cast<std::size_t>(std::ceil((y_upper - y_start) / h_target));
    const std::size_t m = n1 + n2;
    std::vector<double> z(m + 1), F(m + 1), Fp(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        z[i] = i <= n1 ? y_absorb + (y_start - y_absorb) * static_cast<double>(i) / n1
                       : y_start + (y_upper - y_start) * static_cast<double>(i - n1) / n2;
        const auto hv = potential_at(P, z[i]);
        F[i] = hv.value;
        Fp[i] = hv.slope;
    }

    // inner integral q(z_i) = int_{z_i}^{Y} exp((F(z_i) - F(y))/eps) dy, backwards
    std::vector<double> lq(m + 1, kNegInf);
    for (std::size_t i = m; i-- > 0;) {
        const double h = z[i + 1] - z[i];
        const double g = (F[i] - F[i + 1]) / epsilon;
        // corrected trapezoid of exp((F_i - F(y))/eps) over the cell, factored by e^{max(g,0)}
        double log_cell;
        if (g > 0.0) {
            const double e = std::exp(-g);
            const double v = 0.5 * h * (e + 1.0) + h * h / (12.0 * epsilon) * (Fp[i + 1] - Fp[i] * e);
            log_cell = g + std::log(v);
        } else {
            const double e = std::exp(g);
            const double v = 0.5 * h * (1.0 + e) + h * h / (12.0 * epsilon) * (Fp[i + 1] * e - Fp[i]);
            log_cell = std::log(v);
        }
        lq[i] = logaddexp(g + lq[i + 1], log_cell);
    }

    // outer integral over [y_absorb, y_start] with q' = (F'/eps) q - 1
    double log_sum = kNegInf;
    double F_top = kNegInf;
    for (std::size_t i = 0; i < n1; ++i) {
        const double h = z[i + 1] - z[i];
        const double mx = std::max(lq[i], lq[i + 1]);
        const double a0 = std::exp(lq[i] - mx), a1 = std::exp(lq[i + 1] - mx);
        const double v = 0.5 * h * (a0 + a1) +
                         h * h / 12.0 * (Fp[i] / epsilon * a0 - Fp[i + 1] / epsilon * a1);
        log_sum = logaddexp(log_sum, mx + std::log(v));
    }
    for (std::size_t i = 0; i <= n1; ++i) F_top = std::max(F_top, F[i]);

    ExitQuadrature out;
    out.log_value = log_sum - std::log(epsilon);
    out.value = std::exp(out.log_value);
    const double log_bound = std::log((y_start - y_absorb) / P.tail_slope) +
                             (F_top - P.tail_slope * y_upper - P.tail_constant) / epsilon;
    out.truncation_error_bound = std::exp(log_bound);
    if (!std::isfinite(out.log_value))
        throw NumericalError("mean_exit_time_quadrature: non-finite result");
    if (log_bound - out.log_value > std::log(1e-6)) {
        std::ostringstream os;
        os << "mean_exit_time_quadrature: tail bound " << out.truncation_error_bound
           << " exceeds 1e-6 of the value " << out.value << "; raise y_upper";
        throw NumericalError(os.str());
    }
    return out;
}

ExitQuadrature mean_exit_time_quadrature(const Potential& P, double epsilon, double y_upper) {
    if (!P.double_well())
        throw DomainError("mean_exit_time_quadrature: potential has no identified wells");
    return mean_exit_time_quadrature(P, epsilon, y_upper, *P.y_minus, *P.y_plus);
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

namespace {

// Tabulated F'(y) = -f(x, u*(x))/x + sigma^2/2 with linear interpolation; beyond
// the value function's range the far-field control u = 1/(2 A x) is used.
class DriftTable {
public:
    DriftTable(const ValueFunction& vf, const LakeParams& params, const RecyclingCurve& curve,
               double y_lo, double hy)
        : params_(params.with_sigma(vf.sigma)), curve_(curve), y0_(y_lo), hy_(hy) {
        const double y_top = std::log(vf.grid.x_max);
        const std::size_t n = static_cast<std::size_t>(std::ceil((y_top - y_lo) / hy)) + 1;
        values_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double y = std::min(y_lo + static_cast<double>(k) * hy, y_top);
            const double x = std::exp(y);
            values_[k] = -(vf.policy(x) - params_.b * x + curve.r(x)) / x + params_.epsilon();
        }
        y_top_ = y0_ + static_cast<double>(n - 1) * hy_;
    }

    double operator()(double y) const {
        const double s = (y - y0_) / hy_;
        if (s >= 0.0 && y < y_top_) {
            const std::size_t k = static_cast<std::size_t>(s);
            const double w = s - static_cast<double>(k);
            return (1.0 - w) * values_[k] + w * values_[k + 1];
        }
        return far(y);
    }

private:
    double far(double y) const {
        const double x = std::exp(y);
        double u = 1.0 / (2.0 * params_.far_field_coefficient() * x);
        return -(u - params_.b * x + curve_.r(x)) / x + params_.epsilon();
    }

    LakeParams params_;
    const RecyclingCurve& curve_;
    double y0_, hy_, y_top_ = 0.0;
    std::vector<double> values_;
};

// Exit step count of one Euler-Maruyama path, or max_steps when censored.
std::uint64_t exit_steps(const DriftTable& fp, const Philox4x32& rng, std::uint64_t stream,
                         double y0, double y_abs, double sigma, double dt,
                         std::uint64_t max_steps) {
    const double sq = sigma * std::sqrt(dt);
    double y = y0;
    for (std::uint64_t k = 0; k < max_steps; k += 2) {
        const auto xi = rng.normal_pair(stream, k / 2);
        y += -fp(y) * dt + sq * xi[0];
        if (y <= y_abs) return k + 1;
        if (k + 1 >= max_steps) break;
        y += -fp(y) * dt + sq * xi[1];
        if (y <= y_abs) return k + 2;
    }
    return max_steps;
}

struct Sample {
    double mean, stderr_;
    std::size_t censored;
};

Sample run_paths(const DriftTable& fp, const Philox4x32& rng, std::uint64_t stream_base,
                 std::size_t n, double y0, double y_abs, double sigma, double dt, double t_max,
                 unsigned threads) {
    const std::uint64_t max_steps = static_cast<std::uint64_t>(std::ceil(t_max / dt));
    std::vector<std::uint64_t> steps(n);
    const unsigned T = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < T; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t p = t; p < n; p += T)
                steps[p] = exit_steps(fp, rng, stream_base + p, y0, y_abs, sigma, dt, max_steps);
        });
    }
    for (auto& th : pool) th.join();

    std::vector<double> times, squares;
    std::size_t censored = 0;
    for (auto s : steps) {
        if (s >= max_steps) {
            ++censored;
            continue;
        }
        times.push_back(static_cast<double>(s) * dt);
    }
    const std::size_t m = times.size();
    if (m < 2) return {std::numeric_limits<double>::infinity(), 0.0, censored};
    const double mean = pairwise_sum(times.data(), m) / static_cast<double>(m);
    for (double t : times) squares.push_back((t - mean) * (t - mean));
    const double var = pairwise_sum(squares.data(), m) / static_cast<double>(m - 1);
    return {mean, std::sqrt(var / static_cast<double>(m)), censored};
}

constexpr std::uint64_t kControlStream = std::uint64_t{1} << 62;

}  // namespace

ExitSimulation simulate_exit(const ValueFunction& vf, const LakeParams& params,
                             const RecyclingCurve& curve, double x_start, double x_absorb,
                             double dt, std::size_t n_paths, std::uint64_t seed,
                             const ExitOptions& options) {
    if (!(x_absorb > 0.0 && x_absorb < x_start))
        throw DomainError("simulate_exit: need 0 < x_absorb < x_start");
    if (x_start > vf.grid.x_max) throw DomainError("simulate_exit: x_start outside value function");
    if (!(dt > 0.0) || n_paths < 2) throw DomainError("simulate_exit: need dt > 0 and n_paths >= 2");
    ExitSimulation out;
    out.n_paths = n_paths;
    if (vf.sigma == 0.0) {
        out.censored = n_paths;
        out.diverged = true;
        out.mean = std::numeric_limits<double>::infinity();
        out.stderr_ = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double y_abs = std::log(x_absorb);
    const double y0 = std::log(x_start);
    const DriftTable fp(vf, params, curve, y_abs - 0.05, 1e-4);
    const Philox4x32 rng(seed);
    const unsigned threads =
        options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());

    const Sample main = run_paths(fp, rng, 0, n_paths, y0, y_abs, vf.sigma, dt, options.t_max, threads);
    out.mean = main.mean;
    out.stderr_ = main.stderr_;
    out.censored = main.censored;
    if (out.censored * 100 > n_paths) {
        std::ostringstream os;
        os << "simulate_exit: " << out.censored << " of " << n_paths
           << " paths censored at t_max = " << options.t_max;
        throw NumericalError(os.str());
    }
    out.control_paths = static_cast<std::size_t>(
        std::ceil(options.control_fraction * static_cast<double>(n_paths)));
    if (out.control_paths >= 2) {
        const Sample ctl = run_paths(fp, rng, kControlStream, out.control_paths, y0, y_abs,
                                     vf.sigma, 0.5 * dt, options.t_max, threads);
        out.control_mean = ctl.mean;
        out.control_stderr = ctl.stderr_;
        out.step_size_bias = std::abs(ctl.mean - main.mean) >
                             2.0 * std::hypot(ctl.stderr_, main.stderr_);
    }
    return out;
}

std::vector<PathRecord> simulate_paths(const ValueFunction& vf, const LakeParams& params,
                                       const RecyclingCurve& curve,
                                       const std::vector<double>& x_starts, double horizon,
                                       double dt, std::uint64_t seed, double sample_dt) {
    if (!(horizon > 0.0) || !(dt > 0.0) || !(sample_dt >= dt))
        throw DomainError("simulate_paths: need horizon > 0 and 0 < dt <= sample_dt");
    for (double x : x_starts)
        if (!(x > 0.0 && x <= vf.grid.x_max)) throw DomainError("simulate_paths: start out of range");
    const LakeParams p = params.with_sigma(vf.sigma);
    const std::size_t n_out = static_cast<std::size_t>(std::floor(horizon / sample_dt + 1e-9));
    std::vector<PathRecord> out;

    if (vf.sigma == 0.0) {
        auto rhs = [&](double, const ode::Vec<1>& s) -> ode::Vec<1> {
            const double x = std::clamp(s[0], 0.0, vf.grid.x_max);
            return {drift_unchecked(p, curve, x, vf.policy(x))};
        };
        ode::Options opt;
        opt.rtol = 1e-10;
        opt.atol = 1e-12;
        opt.h_init = std::min(dt, sample_dt);
        const auto solver = ode::make_dopri<1>(rhs, opt);
        for (double x0 : x_starts) {
            PathRecord rec;
            rec.x_start = x0;
            ode::Vec<1> s{x0};
            rec.t.push_back(0.0);
            rec.x.push_back(x0);
            for (std::size_t k = 1; k <= n_out; ++k) {
                const double t0 = static_cast<double>(k - 1) * sample_dt;
                const double t1 = static_cast<double>(k) * sample_dt;
                solver.integrate(t0, s, t1, std::span<const ode::Event<1>>{},
                                 [&](double, const ode::Vec<1>& v) {
                                     s = v;
                                     return true;
                                 });
                rec.t.push_back(t1);
                rec.x.push_back(s[0]);
            }
            out.push_back(std::move(rec));
        }
        return out;
    }

    double x_lo = *std::min_element(x_starts.begin(), x_starts.end());
    const DriftTable fp(vf, params, curve, std::log(x_lo) - 3.0, 1e-4);
    const Philox4x32 rng(seed);
    const std::size_t stride = static_cast<std::size_t>(std::llround(sample_dt / dt));
    const double sq = vf.sigma * std::sqrt(dt);
    for (std::size_t path = 0; path < x_starts.size(); ++path) {
        PathRecord rec;
        rec.x_start = x_starts[path];
        double y = std::log(rec.x_start);
        rec.t.push_back(0.0);
        rec.x.push_back(rec.x_start);
        std::uint64_t step = 0;
        for (std::size_t k = 1; k <= n_out; ++k) {
            for (std::size_t j = 0; j < stride; ++j, ++step) {
                const auto xi = rng.normal_pair(path, step / 2);
                y += -fp(y) * dt + sq * xi[step % 2];
            }
            rec.t.push_back(static_cast<double>(k * stride) * dt);
            rec.x.push_back(std::exp(y));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

Landmarks deterministic_landmarks(const CandidateValue& candidate, const LakeParams& params,
                                  const RecyclingCurve& curve, const GridSpec& grid,
                                  const PotentialGrid& pgrid) {
    const ValueFunction vf0 = to_value_function(candidate, grid);
    const Potential F0 = build_potential(vf0, params.with_sigma(0.0), curve, pgrid, true);
    Landmarks lm;
    lm.x_minus = std::exp(*F0.y_minus);
    lm.x_star = std::exp(*F0.y_star);
    lm.x_plus = std::exp(*F0.y_plus);
    lm.delta_F0 = F0.barrier_height();
    return lm;
}

ArrheniusReport arrhenius_estimate(const LakeParams& params, const RecyclingCurve& curve,
                                   const std::vector<double>& ladder,
                                   const ArrheniusOptions& options) {
    if (ladder.empty()) throw DomainError("arrhenius_estimate: empty sigma ladder");
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        if (!(ladder[k] > 0.0)) throw DomainError("arrhenius_estimate: sigma must be positive");
        if (k > 0 && !(ladder[k] < ladder[k - 1]))
            throw DomainError("arrhenius_estimate: ladder must be strictly decreasing");
        params.with_sigma(ladder[k]).validate();
    }
    ArrheniusReport rep;
    const auto cand = build_candidate(params.with_sigma(0.0), curve, options.grid.x_max);
    rep.landmarks = deterministic_landmarks(cand, params, curve, options.grid, options.pgrid);
    const Landmarks lm = rep.landmarks;

    std::vector<std::future<ExitTimeReport>> jobs;
    for (double s : ladder) {
        jobs.push_back(std::async(std::launch::async, [&, s] {
            ExitTimeReport row;
            row.sigma = s;
            row.epsilon = 0.5 * s * s;
            try {
                HjbOptions ho;
                ho.tol = options.hjb_tol;
                const auto [vf, srep] = solve_hjb(params.with_sigma(s), curve, options.grid, ho);
                const Potential P = build_potential(vf, params, curve, options.pgrid);
                const auto q = mean_exit_time_quadrature(P, row.epsilon, P.y_max(),
                                                         std::log(lm.x_minus), std::log(lm.x_plus));
                row.tau_quadrature = q.value;
                row.truncation_error_bound = q.truncation_error_bound;
                row.eps_log_tau = row.epsilon * q.log_value;
                row.barrier_height = P.value(std::log(lm.x_star)) - P.value(std::log(lm.x_plus));
            } catch (const std::exception& e) {
                row.error = e.what();
                row.tau_quadrature = row.eps_log_tau = std::numeric_limits<double>::quiet_NaN();
            }
            return row;
        }));
    }
    for (auto& j : jobs) rep.rows.push_back(j.get());

    std::vector<double> xs, ys;
    for (const auto& row : rep.rows) {
        rep.deviations.push_back(std::abs(row.eps_log_tau - lm.delta_F0));
        if (!row.error.empty()) {
            rep.warnings.push_back("sigma = " + std::to_string(row.sigma) + ": " + row.error);
            continue;
        }
        xs.push_back(row.epsilon);
        ys.push_back(row.eps_log_tau);
    }
    rep.deviations_strictly_decreasing = rep.deviations.size() >= 2;
    for (std::size_t k = 1; k < rep.deviations.size(); ++k) {
        if (!(rep.deviations[k] < rep.deviations[k - 1])) rep.deviations_strictly_decreasing = false;
    }
    if (xs.size() >= 2) {
        const double n = static_cast<double>(xs.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        rep.slope = slope;
        rep.intercept = (sy - slope * sx) / n;
        rep.intercept_rel_error = std::abs(*rep.intercept - lm.delta_F0) / lm.delta_F0;
    } else {
        rep.warnings.push_back("fewer than two successful rungs: no extrapolation");
    }
    return rep;
}

}  // namespace lakelab
