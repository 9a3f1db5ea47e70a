#include "lakelab/lake_model.hpp"

#include <cmath>
#include <sstream>

#include "lakelab/error.hpp"

namespace lakelab {

void LakeParams::validate() const {
    auto fail = [](const std::string& msg) { throw DomainError("LakeParams: " + msg); };
    if (!(b > 0.0) || !std::isfinite(b)) fail("b must be positive");
    if (!(c > 0.0) || !std::isfinite(c)) fail("c must be positive");
    if (!(rho > 0.0) || !std::isfinite(rho)) fail("rho must be positive");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be non-negative");
    if (!(sigma * sigma < rho + 2.0 * b)) fail("sigma^2 must be below rho + 2b");
}

double LakeParams::far_field_coefficient() const {
    return c / (rho + 2.0 * b - sigma * sigma);
}

std::vector<double> audit_grid() {
    std::vector<double> xs{0.0};
    constexpr int per_decade = 20;
    for (int k = 0; k <= 6 * per_decade; ++k) {
        xs.push_back(std::pow(10.0, -3.0 + static_cast<double>(k) / per_decade));
    }
    return xs;
}

namespace {

// Centered difference agreement, relative 1e-6 with an absolute floor for
// derivatives below the roundoff resolution of the difference quotient.
bool gradient_matches(const RecyclingCurve::Fn& f, const RecyclingCurve::Fn& df, double x) {
    const double h = 6e-6 * std::max(1.0, x);
    const double lo = std::max(0.0, x - h);
    const double hi = x + h;
    const double fd = (f(hi) - f(lo)) / (hi - lo);
    // a one-sided quotient at x = 0 is only first order
    const double at = (x - h < 0.0) ? 0.5 * (lo + hi) : x;
    const double exact = df(at);
    return std::abs(fd - exact) <= 1e-6 * std::abs(exact) + 1e-10;
}

std::vector<double> violations_near_zero(const RecyclingCurve::Fn& r, double b, double rho) {
    std::vector<double> out;
    for (double x : audit_grid()) {
        if (x <= 0.0 || x > 0.1) continue;
        if (r(x) > (b + rho) * x) out.push_back(x);
    }
    return out;
}

}  // namespace

std::vector<double> RecyclingCurve::linear_bound_violations(double b, double rho) const {
    return violations_near_zero(r_, b, rho);
}

RecyclingCurve make_curve(std::string name, RecyclingCurve::Fn r, RecyclingCurve::Fn dr,
                          RecyclingCurve::Fn d2r, double asymptote) {
    if (!r || !dr) throw DomainError("recycling curve '" + name + "': r and r' are required");
    RecyclingCurve curve;
    curve.name_ = std::move(name);
    curve.a_ = asymptote;
    curve.r_ = std::move(r);
    curve.dr_ = std::move(dr);
    if (d2r) {
        curve.d2r_ = std::move(d2r);
    } else {
        curve.audit_.second_derivative_fd = true;
        curve.d2r_ = [d = curve.dr_](double x) {
            constexpr double h = 1e-5;
            return (d(x + h) - d(x - h)) / (2.0 * h);
        };
    }

    auto fail = [&](const std::string& what, double x) {
        std::ostringstream os;
        os << "recycling curve '" << curve.name_ << "' violates " << what << " at x = " << x;
        throw DomainError(os.str());
    };

    if (curve.r_(0.0) != 0.0) fail("r(0) = 0", 0.0);
    const double tol = 1e-12 * std::max(1.0, std::abs(asymptote));
    for (double x : audit_grid()) {
        const double rx = curve.r_(x);
        const double dx = curve.dr_(x);
        if (!std::isfinite(rx) || !std::isfinite(dx)) fail("finiteness", x);
        if (dx < 0.0) fail("r'(x) >= 0", x);
        if (rx > asymptote + tol) fail("r(x) <= a", x);
        if (!gradient_matches(curve.r_, curve.dr_, x)) fail("gradient check r vs r'", x);
        if (!curve.audit_.second_derivative_fd &&
            !gradient_matches(curve.dr_, curve.d2r_, x)) {
            fail("gradient check r' vs r''", x);
        }
    }
    const double x_far = audit_grid().back();
    curve.audit_.max_derivative_tail = curve.dr_(x_far);
    if (curve.audit_.max_derivative_tail > 1e-3) fail("r'(x) -> 0", x_far);
    curve.audit_.limit_constant = (asymptote - curve.r_(x_far)) * x_far;
    return curve;
}

RecyclingCurve hill_curve(double scale) {
    if (!(scale > 0.0)) throw DomainError("hill curve scale must be positive");
    const double k2 = scale * scale;
    std::ostringstream name;
    name << "hill";
    if (scale != 1.0) name << "(K=" << scale << ")";
    return make_curve(
        name.str(), [k2](double x) { return x * x / (k2 + x * x); },
        [k2](double x) {
            const double d = k2 + x * x;
            return 2.0 * k2 * x / (d * d);
        },
        [k2](double x) {
            const double d = k2 + x * x;
            return 2.0 * k2 * (k2 - 3.0 * x * x) / (d * d * d);
        },
        1.0);
}

namespace {
void require_state(double x, double u) {
    if (!(x >= 0.0)) throw DomainError("state x must be non-negative");
    if (!(u > 0.0)) throw DomainError("control u must be positive");
}
}  // namespace

double drift_unchecked(const LakeParams& params, const RecyclingCurve& curve, double x,
                       double u) {
    return u - params.b * x + curve.r(x);
}

double drift(const LakeParams& params, const RecyclingCurve& curve, double x, double u) {
    require_state(x, u);
    return drift_unchecked(params, curve, x, u);
}

double costate_dynamics_unchecked(const LakeParams& params, const RecyclingCurve& curve,
                                  double x, double u) {
    return -(params.rho + params.b - curve.dr(x)) * u + 2.0 * params.c * x * u * u;
}

double costate_dynamics(const LakeParams& params, const RecyclingCurve& curve, double x,
                        double u) {
    require_state(x, u);
    if (x == 0.0) return -(params.rho + params.b - curve.dr(0.0)) * u;
    return 2.0 * params.c * x * u * (u - control_nullcline(params, curve, x));
}

double control_nullcline(const LakeParams& params, const RecyclingCurve& curve, double x) {
    if (!(x > 0.0)) throw DomainError("control nullcline needs x > 0");
    return (params.rho + params.b - curve.dr(x)) / (2.0 * params.c * x);
}

double hamiltonian(const LakeParams& params, const RecyclingCurve& curve, double x, double p) {
    if (!(p < 0.0)) throw DomainError("Hamiltonian needs a negative costate");
    if (!(x >= 0.0)) throw DomainError("state x must be non-negative");
    return (curve.r(x) - params.b * x) * p - std::log(-p) - 1.0 - params.c * x * x;
}

double log_hamiltonian(const LakeParams& params, const RecyclingCurve& curve, double y,
                       double p) {
    if (!(p < 0.0)) throw DomainError("Hamiltonian needs a negative costate");
    const double x = std::exp(y);
    return (curve.r(x) / x - params.b - params.epsilon()) * p - std::log(-p) + y - 1.0 -
           params.c * x * x;
}

}  // namespace lakelab
