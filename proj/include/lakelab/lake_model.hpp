#pragma once

#include <functional>
#include <string>
#include <vector>

namespace lakelab {

/// Economic and ecological parameters of the lake.
///
/// b     loss rate (sedimentation, outflow)
/// c     weight of the pollution cost c*x^2
/// rho   discount rate
/// sigma multiplicative noise intensity (0 for the deterministic lake)
struct LakeParams {
    double b = 0.65;
    double c = 0.512;
    double rho = 0.03;
    double sigma = 0.0;

    /// Throws DomainError unless b, c, rho > 0, sigma >= 0 and sigma^2 < rho + 2b.
    void validate() const;

    double epsilon() const { return 0.5 * sigma * sigma; }

    /// Far-field coefficient A with V(x) ~ -A x^2, A = c / (rho + 2b - sigma^2).
    double far_field_coefficient() const;

    LakeParams with_sigma(double s) const {
        LakeParams p = *this;
        p.sigma = s;
        return p;
    }
};

/// Curve audit findings that do not prevent registration.
struct CurveAudit {
    double limit_constant = 0.0;  // (a - r(x)) x at the largest audit point
    double max_derivative_tail = 0.0;
    std::vector<double> linear_bound_violations;  // x in (0, 0.1] with r(x) > (b+rho) x
    bool second_derivative_fd = false;
};

/// Sigmoid recycling curve r with derivatives and asymptote a.
///
/// Instances are immutable; construct through make_curve() (which audits the
/// curve) or hill_curve().
class RecyclingCurve {
public:
    using Fn = std::function<double(double)>;

    double r(double x) const { return r_(x); }
    double dr(double x) const { return dr_(x); }
    double d2r(double x) const { return d2r_(x); }
    double asymptote() const { return a_; }
    const std::string& name() const { return name_; }
    const CurveAudit& audit() const { return audit_; }

    /// True when r'' is a centered finite difference of r' (caller did not supply it).
    bool second_derivative_is_fd() const { return audit_.second_derivative_fd; }

    /// Re-run the near-zero bound r(x) <= (b+rho) x for a parameter set.
    std::vector<double> linear_bound_violations(double b, double rho) const;

private:
    friend RecyclingCurve make_curve(std::string, Fn, Fn, Fn, double);
    RecyclingCurve() = default;

    Fn r_, dr_, d2r_;
    double a_ = 1.0;
    std::string name_;
    CurveAudit audit_;
};

/// Registers a curve after auditing it on {0} U logspace(1e-3, 1e3).
/// Pass an empty d2r to have r'' substituted by a finite difference (step 1e-5).
/// Throws DomainError on violation of r(0)=0, r' >= 0, r <= a, r'(inf) -> 0 or the
/// gradient checks.
RecyclingCurve make_curve(std::string name, RecyclingCurve::Fn r, RecyclingCurve::Fn dr,
                          RecyclingCurve::Fn d2r, double asymptote);

/// r(x) = x^2 / (K^2 + x^2); K = 1 is the canonical choice.
RecyclingCurve hill_curve(double scale = 1.0);

/// The audit abscissae: 0 followed by 20 points per decade on [1e-3, 1e3].
std::vector<double> audit_grid();

struct PhasePoint {
    double x;
    double u;
};

/// f(u, x) = u - b x + r(x). Throws DomainError if x < 0 or u <= 0.
double drift(const LakeParams& params, const RecyclingCurve& curve, double x, double u);

/// Unchecked drift, for use inside integrators where x may transiently leave [0, inf).
double drift_unchecked(const LakeParams& params, const RecyclingCurve& curve, double x, double u);

/// g(u, x) = -(rho + b - r'(x)) u + 2 c x u^2. Throws DomainError if x < 0 or u <= 0.
double costate_dynamics(const LakeParams& params, const RecyclingCurve& curve, double x,
                        double u);

double costate_dynamics_unchecked(const LakeParams& params, const RecyclingCurve& curve,
                                  double x, double u);

/// Nullcline g1(x) = (rho + b - r'(x)) / (2 c x) of the control equation, x > 0.
double control_nullcline(const LakeParams& params, const RecyclingCurve& curve, double x);

/// H(x, p) = sup_u {(u - bx + r) p + ln u - c x^2} = (r - bx) p - ln(-p) - 1 - c x^2.
/// Throws DomainError if p >= 0 (the supremum is infinite) or x < 0.
double hamiltonian(const LakeParams& params, const RecyclingCurve& curve, double x, double p);

/// Hamiltonian of the log-transformed problem y = ln x:
/// (r(e^y) e^-y - b - sigma^2/2) p - ln(-p) + y - 1 - c e^{2y}. Throws if p >= 0.
double log_hamiltonian(const LakeParams& params, const RecyclingCurve& curve, double y,
                       double p);

/// Maximizer of the Hamiltonian, u* = -1/p.
inline double feedback_control(double p) { return -1.0 / p; }

}  // namespace lakelab
