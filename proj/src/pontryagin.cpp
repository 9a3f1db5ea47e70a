#include "lakelab/pontryagin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "lakelab/error.hpp"
#include "lakelab/interp.hpp"
#include "lakelab/ode.hpp"

namespace lakelab {

std::string to_string(EquilibriumKind kind) {
    switch (kind) {
        case EquilibriumKind::saddle: return "saddle";
        case EquilibriumKind::vortex: return "vortex";
        case EquilibriumKind::node: return "node";
    }
    return "?";
}

std::string to_string(BranchDirection d) {
    return d == BranchDirection::toward_smaller_x ? "toward_smaller_x" : "toward_larger_x";
}

std::string to_string(BranchStop s) {
    switch (s) {
        case BranchStop::lower_bound: return "lower_bound";
        case BranchStop::upper_bound: return "upper_bound";
        case BranchStop::control_floor: return "control_floor";
        case BranchStop::arc_length: return "arc_length";
        case BranchStop::fold: return "fold";
        case BranchStop::time_limit: return "time_limit";
    }
    return "?";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Root of fn in [lo, hi] with fn(lo), fn(hi) of opposite sign.
template <class F>
double polish_root(F fn, double lo, double hi) {
    boost::uintmax_t max_iter = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(52);
    const auto [a, b] = boost::math::tools::toms748_solve(fn, lo, hi, tol, max_iter);
    return 0.5 * (a + b);
}

// Sign-change roots of fn on a uniform scan of [lo, hi].
template <class F>
std::vector<double> scan_roots(F fn, double lo, double hi, std::size_t n) {
    std::vector<double> roots;
    double x_prev = lo, f_prev = fn(lo);
    for (std::size_t i = 1; i <= n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
        const double fx = fn(x);
        if (f_prev == 0.0) {
            roots.push_back(x_prev);
        } else if ((f_prev < 0.0) != (fx < 0.0) && fx != 0.0) {
            roots.push_back(polish_root(fn, x_prev, x));
        }
        x_prev = x;
        f_prev = fx;
    }
    if (f_prev == 0.0) roots.push_back(x_prev);
    return roots;
}

}  // namespace

double steady_state_function(const LakeParams& params, const RecyclingCurve& curve, double x) {
    return (params.b * x - curve.r(x)) -
           (params.b + params.rho - curve.dr(x)) / (2.0 * params.c * x);
}

double default_equilibrium_bound(const LakeParams& params, const RecyclingCurve& curve) {
    const double a = curve.asymptote();
    // bx = r(x) can only hold for x <= a/b
    const double top = a / params.b;
    auto fn = [&](double x) { return params.b * x - curve.r(x); };
    const auto roots = scan_roots(fn, top * 1e-6, top, 20000);
    if (!roots.empty()) return 4.0 * roots.back();
    // every root of phi lies below the root of bx = a + (b+rho)/(2cx)
    const double locator =
        (a + std::sqrt(a * a + 2.0 * params.b * (params.b + params.rho) / params.c)) /
        (2.0 * params.b);
    return 4.0 * locator;
}

Equilibrium classify(const LakeParams& params, const RecyclingCurve& curve, PhasePoint point) {
    const double x = point.x, u = point.u;
    if (!(x > 0.0) || !(u > 0.0)) throw DomainError("classify: need x0 > 0 and u0 > 0");
    const double res1 = std::abs(u - (params.b * x - curve.r(x)));
    const double res2 = std::abs(u - control_nullcline(params, curve, x));
    if (res1 > 1e-8 || res2 > 1e-8) {
        std::ostringstream os;
        os << "classify: (" << x << ", " << u << ") is not a steady state (residuals " << res1
           << ", " << res2 << ")";
        throw DomainError(os.str());
    }
    Equilibrium eq;
    eq.point = point;
    const double r1 = curve.dr(x), r2 = curve.d2r(x);
    eq.jacobian = {{{-params.b + r1, 1.0},
                    {r2 * u + 2.0 * params.c * u * u,
                     -(params.b + params.rho - r1) + 4.0 * params.c * x * u}}};
    const auto& J = eq.jacobian;
    const double tr = J[0][0] + J[1][1];
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    const double disc = 0.25 * tr * tr - det;
    if (disc < 0.0) {
        eq.lambda_minus = eq.lambda_plus = 0.5 * tr;
        eq.lambda_imag = std::sqrt(-disc);
        eq.kind = EquilibriumKind::vortex;
    } else {
        const double sq = std::sqrt(disc);
        // avoid cancellation in the smaller-magnitude root
        const double big = 0.5 * tr + std::copysign(sq, tr);
        const double small = big != 0.0 ? det / big : 0.0;
        eq.lambda_minus = std::min(big, small);
        eq.lambda_plus = std::max(big, small);
        eq.kind = det < 0.0 ? EquilibriumKind::saddle : EquilibriumKind::node;
    }
    eq.stable_slope =
        eq.kind == EquilibriumKind::saddle ? params.b - r1 + eq.lambda_minus : kNaN;
    return eq;
}

EquilibriumScan find_equilibria(const LakeParams& params, const RecyclingCurve& curve,
                                double x_max) {
    if (!(x_max > 0.0)) throw DomainError("find_equilibria: x_max must be positive");
    params.validate();
    auto phi = [&](double x) { return steady_state_function(params, curve, x); };
    EquilibriumScan out;
    for (double x0 : scan_roots(phi, x_max * 1e-6, x_max, 40000)) {
        const double u0 = params.b * x0 - curve.r(x0);
        if (u0 <= 0.0) {
            out.inadmissible_roots.push_back(x0);
            continue;
        }
        out.equilibria.push_back(classify(params, curve, {x0, u0}));
    }
    return out;
}

namespace {

BranchSample make_sample(const LakeParams& p, const RecyclingCurve& c, double x, double u,
                         double J) {
    const double f = drift_unchecked(p, c, x, u);
    const double g = costate_dynamics_unchecked(p, c, x, u);
    return {x, u, J, g / f};
}

}  // namespace

ManifoldBranch stable_manifold(const LakeParams& params, const RecyclingCurve& curve,
                               const Equilibrium& eq, BranchDirection direction,
                               std::pair<double, double> x_bounds,
                               const ManifoldOptions& options) {
    if (eq.kind != EquilibriumKind::saddle)
        throw DomainError("stable_manifold: equilibrium is not a saddle");
    const double x0 = eq.point.x, u0 = eq.point.u;
    const double sgn = direction == BranchDirection::toward_larger_x ? 1.0 : -1.0;
    const double delta = options.seed_scale * std::max(1.0, x0);
    const double xs = x0 + sgn * delta;
    const double us = u0 + sgn * delta * eq.stable_slope;
    if (!(us > 0.0)) throw DomainError("stable_manifold: seed has u <= 0");

    ManifoldBranch br;
    br.source = eq;
    br.direction = direction;

    const double J0 = (std::log(u0) - params.c * x0 * x0) / params.rho;
    // trapezoid over the seed offset; the error is O(delta^3)
    const double Js = J0 - (xs - x0) * 0.5 * (1.0 / u0 + 1.0 / us);

    std::vector<BranchSample> path;
    path.push_back({x0, u0, J0, eq.stable_slope});
    path.push_back(make_sample(params, curve, xs, us, Js));

    auto rhs = [&](double, const ode::Vec<3>& s) -> ode::Vec<3> {
        const double f = drift_unchecked(params, curve, s[0], s[1]);
        const double g = costate_dynamics_unchecked(params, curve, s[0], s[1]);
        return {-f, -g, f / s[1]};
    };
    std::vector<ode::Event<3>> events;
    events.push_back({[lo = x_bounds.first](double, const ode::Vec<3>& s) { return s[0] - lo; },
                      -1, "lower_bound"});
    events.push_back({[hi = x_bounds.second](double, const ode::Vec<3>& s) { return s[0] - hi; },
                      +1, "upper_bound"});
    events.push_back(
        {[uf = options.u_floor](double, const ode::Vec<3>& s) { return s[1] - uf; }, -1,
         "control_floor"});
    // reversed-time dx/dt = -f keeps the sign sgn until the branch folds
    events.push_back({[&, sgn](double, const ode::Vec<3>& s) {
                          return -sgn * drift_unchecked(params, curve, s[0], s[1]);
                      },
                      -1, "fold"});

    ode::Options opt;
    opt.rtol = options.rtol;
    opt.atol = options.atol;
    opt.h_init = 1e-2;
    opt.max_steps = 2'000'000;
    auto solver = ode::make_dopri<3>(rhs, opt);

    double arc = 0.0;
    bool arc_exceeded = false;
    auto observer = [&](double, const ode::Vec<3>& s) {
        const auto& last = path.back();
        arc += std::hypot(s[0] - last.x, s[1] - last.u);
        path.push_back(make_sample(params, curve, s[0], s[1], s[2]));
        if (arc > options.arc_length_cap) {
            arc_exceeded = true;
            return false;
        }
        return true;
    };
    auto limiter = [&](double, const ode::Vec<3>& s) {
        const double f = drift_unchecked(params, curve, s[0], s[1]);
        const double g = costate_dynamics_unchecked(params, curve, s[0], s[1]);
        const double speed = std::hypot(f, g);
        return speed > 0.0 ? options.max_ds / speed : std::numeric_limits<double>::infinity();
    };
    const auto outcome = solver.integrate(0.0, {xs, us, Js}, 1e6, events, observer, limiter);

    if (arc_exceeded) {
        br.stop = BranchStop::arc_length;
    } else if (outcome.stop == ode::Stop::event) {
        static constexpr BranchStop kinds[] = {BranchStop::lower_bound, BranchStop::upper_bound,
                                               BranchStop::control_floor, BranchStop::fold};
        br.stop = kinds[outcome.event_index];
    } else {
        br.stop = BranchStop::time_limit;
    }

    // the located crossing can sit a rounding error past the bound
    if (br.stop == BranchStop::lower_bound) path.back().x = std::max(path.back().x, x_bounds.first);
    if (br.stop == BranchStop::upper_bound) path.back().x = std::min(path.back().x, x_bounds.second);

    // keep the strictly x-monotone prefix; the located fold sample has f = 0
    std::size_t keep = path.size();
    if (br.stop == BranchStop::fold) keep = path.size() - 1;
    for (std::size_t i = 1; i < keep; ++i) {
        if (!(sgn * (path[i].x - path[i - 1].x) > 0.0)) {
            keep = i;
            break;
        }
    }
    br.truncated_samples = path.size() - keep;
    path.resize(keep);
    if (sgn < 0.0) std::reverse(path.begin(), path.end());
    br.samples = std::move(path);
    br.x_lo = br.samples.front().x;
    br.x_hi = br.samples.back().x;
    return br;
}

namespace {
std::size_t sample_cell(const std::vector<BranchSample>& s, double x) {
    auto it = std::upper_bound(s.begin(), s.end(), x,
                               [](double v, const BranchSample& p) { return v < p.x; });
    std::size_t i = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
    return std::min(i, s.size() - 2);
}
}  // namespace

double ManifoldBranch::u_at(double x) const {
    const std::size_t i = sample_cell(samples, x);
    const auto& a = samples[i];
    const auto& b = samples[i + 1];
    return interp::hermite(a.x, b.x, a.u, b.u, a.dudx, b.dudx, x).value;
}

double ManifoldBranch::J_at(double x) const {
    const std::size_t i = sample_cell(samples, x);
    const auto& a = samples[i];
    const auto& b = samples[i + 1];
    return interp::hermite(a.x, b.x, a.J, b.J, -1.0 / a.u, -1.0 / b.u, x).value;
}

double ManifoldBranch::dudx_at(double x) const {
    const std::size_t i = sample_cell(samples, x);
    const auto& a = samples[i];
    const auto& b = samples[i + 1];
    return interp::hermite(a.x, b.x, a.u, b.u, a.dudx, b.dudx, x).slope;
}

double branch_step_defect(const ManifoldBranch& branch, const LakeParams& params,
                          const RecyclingCurve& curve) {
    auto slope = [&](double x, double u) {
        return costate_dynamics_unchecked(params, curve, x, u) /
               drift_unchecked(params, curve, x, u);
    };
    auto rk4 = [&](double x, double u, double h) {
        const double k1 = slope(x, u);
        const double k2 = slope(x + 0.5 * h, u + 0.5 * h * k1);
        const double k3 = slope(x + 0.5 * h, u + 0.5 * h * k2);
        const double k4 = slope(x + h, u + h * k3);
        return u + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
    };
    const double x0 = branch.source.point.x;
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < branch.samples.size(); ++i) {
        const auto& a = branch.samples[i];
        const auto& b = branch.samples[i + 1];
        if (a.x == x0 || b.x == x0) continue;
        // two halves, each in 16 RK4 sub-steps (g/f is stiff next to a fold)
        constexpr int m = 16;
        const double h = 0.5 * (b.x - a.x) / m;
        double u = a.u;
        for (int k = 0; k < 2 * m; ++k) u = rk4(a.x + k * h, u, h);
        worst = std::max(worst, std::abs(u - b.u));
    }
    return worst;
}

double candidate_hjb_residual(const LakeParams& params, const RecyclingCurve& curve,
                              const BranchSample& s) {
    return std::abs(params.rho * s.J - hamiltonian(params, curve, s.x, -1.0 / s.u));
}

namespace {

struct Family {
    double x0;
    std::vector<std::size_t> members;  // indices into branches
    double lo, hi;
};

// Branch of the family that covers x: the one on the same side of the saddle.
std::optional<std::size_t> family_branch(const std::vector<ManifoldBranch>& branches,
                                         const Family& fam, double x) {
    for (std::size_t k : fam.members) {
        if (branches[k].covers(x)) return k;
    }
    return std::nullopt;
}

double side_second_derivative(const LakeParams& p, const RecyclingCurve& c, double x, double u) {
    return (2.0 * p.c * x - (p.rho + p.b - c.dr(x)) / u) / drift_unchecked(p, c, x, u);
}

std::vector<Family> families_of(const std::vector<ManifoldBranch>& branches) {
    std::map<double, Family> by_x0;
    for (std::size_t k = 0; k < branches.size(); ++k) {
        const double x0 = branches[k].source.point.x;
        auto [it, fresh] = by_x0.try_emplace(x0, Family{x0, {}, branches[k].x_lo, branches[k].x_hi});
        it->second.members.push_back(k);
        it->second.lo = std::min(it->second.lo, branches[k].x_lo);
        it->second.hi = std::max(it->second.hi, branches[k].x_hi);
    }
    std::vector<Family> out;
    for (auto& [x0, fam] : by_x0) out.push_back(fam);
    return out;
}

// Composite trapezoid of J' = -1/u with a Richardson step, compared to the
// integrated J_P at every other sample.
double trapezoid_crosscheck(const ManifoldBranch& br) {
    const auto& s = br.samples;
    if (s.size() < 5) return 0.0;
    // anchor at the saddle sample
    std::size_t a = 0;
    while (a < s.size() && s[a].x != br.source.point.x) ++a;
    if (a == s.size()) return 0.0;
    double worst = 0.0;
    auto walk = [&](int step) {
        double fine = s[a].J, coarse = s[a].J;
        for (std::size_t k = a; ; ) {
            const std::size_t k1 = static_cast<std::size_t>(static_cast<long>(k) + step);
            const std::size_t k2 = static_cast<std::size_t>(static_cast<long>(k) + 2 * step);
            if (k2 >= s.size()) break;
            fine += -0.5 * (s[k1].x - s[k].x) * (1.0 / s[k].u + 1.0 / s[k1].u);
            fine += -0.5 * (s[k2].x - s[k1].x) * (1.0 / s[k1].u + 1.0 / s[k2].u);
            coarse += -0.5 * (s[k2].x - s[k].x) * (1.0 / s[k].u + 1.0 / s[k2].u);
            const double rich = fine + (fine - coarse) / 3.0;
            worst = std::max(worst, std::abs(rich - s[k2].J));
            k = k2;
            if (k == 0 && step < 0) break;
        }
    };
    walk(+1);
    if (a >= 2) walk(-1);
    return worst;
}

}  // namespace

CandidateValue candidate_value(const LakeParams& params, const RecyclingCurve& curve,
                               std::vector<ManifoldBranch> branches) {
    if (branches.empty()) throw DomainError("candidate_value: no branches");
    for (const auto& br : branches) {
        if (br.source.kind != EquilibriumKind::saddle)
            throw DomainError("candidate_value: branch does not emanate from a saddle");
        if (br.samples.size() < 2)
            throw NumericalError("candidate_value: branch with fewer than two samples");
    }
    CandidateValue cand;
    cand.params = params;
    cand.branches = std::move(branches);
    const auto& brs = cand.branches;
    const auto fams = families_of(brs);

    cand.x_lo = fams.front().lo;
    cand.x_hi = fams.front().hi;
    for (const auto& f : fams) {
        cand.x_lo = std::min(cand.x_lo, f.lo);
        cand.x_hi = std::max(cand.x_hi, f.hi);
    }
    auto gap_error = [](double a, double b) {
        std::ostringstream os;
        os << "candidate_value: branches leave the gap (" << a << ", " << b << ") uncovered";
        throw NumericalError(os.str());
    };
    if (cand.x_lo > 1e-9) gap_error(0.0, cand.x_lo);
    for (std::size_t k = 0; k + 1 < fams.size(); ++k) {
        const Family& L = fams[k];
        const Family& R = fams[k + 1];
        if (L.hi < R.lo) {
            // repeller case: the branches approach a non-saddle equilibrium from both sides
            const double gap = R.lo - L.hi;
            const auto scan = find_equilibria(params, curve, R.x0);
            std::optional<double> repeller;
            for (const auto& eq : scan.equilibria) {
                if (eq.kind != EquilibriumKind::saddle && eq.point.x >= L.hi - 1e-6 &&
                    eq.point.x <= R.lo + 1e-6)
                    repeller = eq.point.x;
            }
            if (!repeller || gap > 1e-3 * std::max(1.0, *repeller)) gap_error(L.hi, R.lo);
            cand.threshold = repeller;
            continue;
        }
        // overlap [R.lo, L.hi]: look for a sign change of J_left - J_right
        auto diff = [&](double x) {
            const auto bl = family_branch(brs, L, x);
            const auto br = family_branch(brs, R, x);
            return brs[*bl].J_at(x) - brs[*br].J_at(x);
        };
        const double lo = R.lo, hi = L.hi;
        constexpr std::size_t n_scan = 2000;
        double x_prev = lo, d_prev = diff(lo);
        std::optional<double> root;
        for (std::size_t i = 1; i <= n_scan && !root; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) / n_scan;
            const double d = diff(x);
            if (d_prev == 0.0) {
                root = x_prev;
            } else if ((d_prev > 0.0) != (d > 0.0)) {
                root = d == 0.0 ? x : polish_root(diff, x_prev, x);
            }
            x_prev = x;
            d_prev = d;
        }
        if (!root) continue;

        SkibaPoint sk;
        sk.x = *root;
        const auto& bl = brs[*family_branch(brs, L, sk.x)];
        const auto& br = brs[*family_branch(brs, R, sk.x)];
        const double Jl = bl.J_at(sk.x), Jr = br.J_at(sk.x);
        sk.J = 0.5 * (Jl + Jr);
        sk.J_gap = std::abs(Jl - Jr);
        sk.u_left = bl.u_at(sk.x);
        sk.u_right = br.u_at(sk.x);
        sk.Vp_left = -1.0 / sk.u_left;
        sk.Vp_right = -1.0 / sk.u_right;
        sk.V2_left = side_second_derivative(params, curve, sk.x, sk.u_left);
        sk.V2_right = side_second_derivative(params, curve, sk.x, sk.u_right);
        sk.drift_left = drift_unchecked(params, curve, sk.x, sk.u_left);
        sk.drift_right = drift_unchecked(params, curve, sk.x, sk.u_right);
        const double jump = sk.Vp_right - sk.Vp_left;
        sk.jump_sign = jump > 0.0 ? 1 : (jump < 0.0 ? -1 : 0);
        cand.skiba = sk;
    }

    for (const auto& br : brs) {
        cand.quadrature_crosscheck = std::max(cand.quadrature_crosscheck, trapezoid_crosscheck(br));
    }
    return cand;
}

CandidateValue::Eval CandidateValue::evaluate(double x) const {
    if (!(x >= x_lo - 1e-12 && x <= x_hi + 1e-12)) {
        std::ostringstream os;
        os << "CandidateValue::evaluate: x = " << x << " outside [" << x_lo << ", " << x_hi
           << "]";
        throw DomainError(os.str());
    }
    x = std::clamp(x, x_lo, x_hi);
    // With a Skiba point the side is fixed by x*, elsewhere the larger J wins.
    std::optional<std::size_t> best;
    double best_J = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < branches.size(); ++k) {
        if (!branches[k].covers(x)) continue;
        if (skiba) {
            const double x0 = branches[k].source.point.x;
            const bool left_family = x0 < skiba->x;
            if (x <= skiba->x && !left_family) continue;
            if (x > skiba->x && left_family) continue;
        }
        const double J = branches[k].J_at(x);
        if (J > best_J) {
            best_J = J;
            best = k;
        }
    }
    if (!best) {
        // repeller gap: nearest branch end
        double dist = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < branches.size(); ++k) {
            const double d = std::min(std::abs(x - branches[k].x_lo), std::abs(x - branches[k].x_hi));
            if (d < dist) {
                dist = d;
                best = k;
            }
        }
        const auto& b = branches[*best];
        const double xe = std::clamp(x, b.x_lo, b.x_hi);
        const double u = b.u_at(xe);
        return {b.J_at(xe) - (x - xe) / u, u, -1.0 / u, b.dudx_at(xe) / (u * u), *best};
    }
    const auto& b = branches[*best];
    const double u = b.u_at(x);
    return {best_J, u, -1.0 / u, b.dudx_at(x) / (u * u), *best};
}

std::vector<double> CandidateValue::policy(double x) const {
    if (skiba && x == skiba->x) return {skiba->u_left, skiba->u_right};
    return {evaluate(x).u};
}

std::vector<Equilibrium> CandidateValue::saddles() const {
    std::vector<Equilibrium> out;
    for (const auto& b : branches) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](const Equilibrium& e) {
            return e.point.x == b.source.point.x;
        });
        if (!seen) out.push_back(b.source);
    }
    std::sort(out.begin(), out.end(),
              [](const Equilibrium& a, const Equilibrium& b) { return a.point.x < b.point.x; });
    return out;
}

CandidateValue build_candidate(const LakeParams& params, const RecyclingCurve& curve,
                               double x_max, const ManifoldOptions& options) {
    params.validate();
    const double x_eq = std::min(x_max, default_equilibrium_bound(params, curve));
    const auto scan = find_equilibria(params, curve, x_eq);
    std::vector<ManifoldBranch> branches;
    for (const auto& eq : scan.equilibria) {
        if (eq.kind != EquilibriumKind::saddle) continue;
        for (auto dir : {BranchDirection::toward_smaller_x, BranchDirection::toward_larger_x}) {
            branches.push_back(stable_manifold(params, curve, eq, dir, {0.0, x_max}, options));
        }
    }
    if (branches.empty()) throw NumericalError("build_candidate: no saddle equilibria found");
    return candidate_value(params, curve, std::move(branches));
}

QuadraticBoundReport quadratic_lower_bound_check(const CandidateValue& candidate,
                                                 const LakeParams& params, std::size_t n_grid) {
    QuadraticBoundReport rep;
    const LakeParams det = params.with_sigma(0.0);
    rep.A_det = det.far_field_coefficient();
    const double lo = candidate.x_lo, hi = candidate.x_hi;
    double prev = candidate.evaluate(lo).J + rep.A_det * lo * lo;
    rep.worst_increase = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n_grid; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_grid - 1);
        const double g = candidate.evaluate(x).J + rep.A_det * x * x;
        rep.worst_increase = std::max(rep.worst_increase, g - prev);
        prev = g;
    }
    rep.monotone = rep.worst_increase <= 1e-12 * std::max(1.0, std::abs(prev));
    rep.x_eval = hi;
    const auto e = candidate.evaluate(hi);
    rep.slope_ratio = e.Vp / (-2.0 * rep.A_det * hi);
    rep.slope_evaluated = hi >= 20.0;
    rep.slope_ok = rep.slope_evaluated && rep.slope_ratio >= 0.9 && rep.slope_ratio <= 1.1;
    rep.passed = rep.monotone && (!rep.slope_evaluated || rep.slope_ok);
    return rep;
}

}  // namespace lakelab
