#include "lakelab/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "lakelab/error.hpp"
#include "lakelab/pontryagin.hpp"

namespace lakelab {

GridSpec default_grid(const LakeParams& params, const RecyclingCurve& curve) {
    const auto scan = find_equilibria(params, curve, default_equilibrium_bound(params, curve));
    double x_plus = 0.0;
    for (const auto& eq : scan.equilibria) x_plus = std::max(x_plus, eq.point.x);
    return GridSpec{std::max(20.0, 4.0 * x_plus), 4096};
}

namespace {

struct Node {
    double x, r, diffusion;  // diffusion = sigma^2 x^2 / (2 h^2)
};

struct Choice {
    double u;
    double drift;
    double gain;  // upwinded drift * p + ln u
};

double drift_of(const LakeParams& p, const Node& nd, double u) {
    return u - p.b * nd.x + nd.r;
}

// Maximizer of d(u)^+ pF + d(u)^- pB + ln u over u > 0.
Choice improve(const LakeParams& p, const Node& nd, double pF, double pB, bool forward_only,
               const HjbOptions& opt) {
    Choice best{0.0, 0.0, -std::numeric_limits<double>::infinity()};
    auto consider = [&](double u, bool forward) {
        u = std::max(u, opt.u_floor);
        const double d = drift_of(p, nd, u);
        if (forward ? d < 0.0 : d >= 0.0) return;
        const double g = d * (forward ? pF : pB) + std::log(u);
        if (g > best.gain) best = {u, d, g};
    };
    consider(pF < 0.0 ? -1.0 / pF : opt.u_cap, true);
    if (!forward_only) {
        if (pB < 0.0) consider(-1.0 / pB, false);
        const double u0 = p.b * nd.x - nd.r;
        if (u0 > opt.u_floor) {
            const double g = std::log(u0);
            if (g > best.gain) best = {u0, 0.0, g};
        }
    }
    if (!std::isfinite(best.gain)) {
        // no admissible forward candidate either: floor control with its own drift
        const double u = opt.u_floor;
        const double d = drift_of(p, nd, u);
        best = {u, d, d * (d >= 0.0 ? pF : pB) + std::log(u)};
    }
    return best;
}

struct Evaluation {
    std::vector<double> u;        // improved policy
    std::vector<double> raw;      // nonlinear residual
    std::vector<double> scaled;
};

Evaluation evaluate_residual(const LakeParams& p, const std::vector<Node>& nodes,
                             const std::vector<double>& V, double h, double neumann,
                             const HjbOptions& opt) {
    const std::size_t n = nodes.size();
    Evaluation ev;
    ev.u.assign(n, 0.0);
    ev.raw.assign(n, 0.0);
    ev.scaled.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double pF = (V[i + 1] - V[i]) / h;
        const double pB = i > 0 ? (V[i] - V[i - 1]) / h : pF;
        const Choice ch = improve(p, nodes[i], pF, pB, i == 0, opt);
        ev.u[i] = ch.u;
        const double cx2 = p.c * nodes[i].x * nodes[i].x;
        double diff = 0.0;
        if (i > 0) diff = nodes[i].diffusion * (V[i + 1] - 2.0 * V[i] + V[i - 1]);
        ev.raw[i] = p.rho * V[i] - ch.gain + cx2 - diff;
        const double diag = p.rho + std::abs(ch.drift) / h + 2.0 * nodes[i].diffusion;
        ev.scaled[i] = ev.raw[i] / diag;
    }
    const double defect = (V[n - 1] - V[n - 2]) - h * neumann;
    ev.raw[n - 1] = defect / h;
    ev.scaled[n - 1] = defect;
    ev.u[n - 1] = ev.u[n - 2];
    return ev;
}

// Thomas algorithm; a, b, c are sub-, main and super-diagonal (a[0], c[n-1] unused).
std::vector<double> solve_tridiagonal(std::vector<double> a, std::vector<double> b,
                                      std::vector<double> c, std::vector<double> d) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<Node> make_nodes(const LakeParams& p, const RecyclingCurve& curve,
                             const GridSpec& grid) {
    const double h = grid.h();
    std::vector<Node> nodes(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        nodes[i] = {x, curve.r(x), 0.5 * p.sigma * p.sigma * x * x / (h * h)};
    }
    return nodes;
}

}  // namespace

std::pair<ValueFunction, SolveReport> solve_hjb(const LakeParams& params,
                                                const RecyclingCurve& curve,
                                                const GridSpec& grid,
                                                const HjbOptions& options) {
    params.validate();
    grid.validate();
    if (!(params.sigma > 0.0)) throw DomainError("solve_hjb: sigma must be positive");
    const std::size_t n = grid.n;
    const double h = grid.h();
    const double A = params.far_field_coefficient();
    const double neumann = -2.0 * A * grid.x_max;
    const auto nodes = make_nodes(params, curve, grid);

    std::vector<double> u(n, params.rho);
    std::vector<double> V;
    SolveReport rep;
    rep.far_field_target = A;
    Evaluation ev;
    bool converged = false;

    for (int it = 1; it <= options.max_iter; ++it) {
        std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0), rhs(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const Node& nd = nodes[i];
            const double d = drift_of(params, nd, u[i]);
            rhs[i] = std::log(u[i]) - params.c * nd.x * nd.x;
            if (i == 0) {
                di[0] = params.rho + d / h;
                up[0] = -d / h;
            } else if (d >= 0.0) {
                di[i] = params.rho + d / h + 2.0 * nd.diffusion;
                up[i] = -(d / h + nd.diffusion);
                lo[i] = -nd.diffusion;
            } else {
                di[i] = params.rho - d / h + 2.0 * nd.diffusion;
                up[i] = -nd.diffusion;
                lo[i] = d / h - nd.diffusion;
            }
        }
        lo[n - 1] = -1.0;
        di[n - 1] = 1.0;
        rhs[n - 1] = h * neumann;
        V = solve_tridiagonal(lo, di, up, rhs);

        ev = evaluate_residual(params, nodes, V, h, neumann, options);
        rep.iterations = it;
        rep.residual_inf = inf_norm(ev.scaled);
        rep.residual_inf_unscaled = inf_norm(ev.raw);
        rep.history.push_back(rep.residual_inf);
        rep.policy_change = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            rep.policy_change = std::max(rep.policy_change, std::abs(ev.u[i] - u[i]));

        rep.floor_nodes = static_cast<std::size_t>(
            std::count_if(ev.u.begin(), ev.u.end() - 1,
                          [&](double v) { return v <= options.u_floor; }));
        if (rep.floor_nodes * 100 > n) {
            std::ostringstream os;
            os << "solve_hjb: policy at the control floor on " << rep.floor_nodes << " of " << n
               << " nodes";
            throw NumericalError(os.str(), rep.history);
        }
        if (rep.residual_inf <= options.tol && rep.policy_change <= 10.0 * options.tol) {
            converged = true;
            break;
        }
        u = ev.u;
    }
    if (!converged) {
        std::ostringstream os;
        os << "solve_hjb: no convergence after " << options.max_iter
           << " iterations (scaled residual " << rep.residual_inf << ")";
        throw NumericalError(os.str(), rep.history);
    }

    ValueFunction vf;
    vf.grid = grid;
    vf.sigma = params.sigma;
    vf.provenance = Provenance::hjb;
    vf.V = V;
    vf.Vp.resize(n);
    vf.V2.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) vf.Vp[i] = -1.0 / u[i];
    vf.Vp[n - 1] = neumann;
    for (std::size_t i = 1; i + 1 < n; ++i) vf.V2[i] = (V[i + 1] - 2.0 * V[i] + V[i - 1]) / (h * h);
    vf.V2[0] = (V[2] - 2.0 * V[1] + V[0]) / (h * h);
    vf.V2[n - 1] = vf.V2[n - 2];

    const double vp0 = (V[1] - V[0]) / h;
    rep.boundary_identity = std::abs(std::log(-vp0) + params.rho * V[0] + 1.0);
    rep.boundary_tolerance = 5.0 * h;
    const double k0 = params.rho + params.b - curve.dr(0.0);
    rep.second_derivative_identity = std::abs(vf.V2[0] + k0 * vp0 * vp0) / std::abs(vf.V2[0]);
    rep.far_field_coefficient = -V[n - 1] / (grid.x_max * grid.x_max);
    double vp_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; grid.x(i) <= 0.5 * grid.x_max; ++i) vp_max = std::max(vp_max, vf.Vp[i]);
    rep.vp_floor = -vp_max;
    return {std::move(vf), rep};
}

double ResidualProfile::inf_raw() const { return inf_norm(raw); }
double ResidualProfile::inf_scaled() const { return inf_norm(scaled); }

ResidualProfile residual(const ValueFunction& vf, const LakeParams& params,
                         const RecyclingCurve& curve) {
    ResidualProfile prof;
    const LakeParams p = params.with_sigma(vf.sigma);
    if (vf.provenance == Provenance::hjb) {
        const double neumann = -2.0 * p.far_field_coefficient() * vf.grid.x_max;
        const auto ev = evaluate_residual(p, make_nodes(p, curve, vf.grid), vf.V, vf.grid.h(),
                                          neumann, HjbOptions{});
        prof.raw = ev.raw;
        prof.scaled = ev.scaled;
        return prof;
    }
    const std::size_t n = vf.grid.n;
    prof.raw.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = vf.grid.x(i);
        prof.raw[i] = p.rho * vf.V[i] - hamiltonian(p, curve, x, vf.Vp[i]) -
                      p.epsilon() * x * x * vf.V2[i];
    }
    prof.scaled = prof.raw;
    return prof;
}

ViscosityLimitReport viscosity_limit_check(const LakeParams& params, const RecyclingCurve& curve,
                                           const std::vector<double>& sigmas,
                                           std::pair<double, double> interval,
                                           const CandidateValue& candidate,
                                           const GridSpec& grid,
                                           const HjbOptions& options) {
    for (std::size_t k = 0; k < sigmas.size(); ++k) {
        if (!(sigmas[k] > 0.0)) throw DomainError("viscosity_limit_check: sigma must be positive");
        if (k > 0 && !(sigmas[k] < sigmas[k - 1]))
            throw DomainError("viscosity_limit_check: sigmas must be strictly decreasing");
        params.with_sigma(sigmas[k]).validate();
    }
    std::vector<std::future<double>> jobs;
    for (double s : sigmas) {
        jobs.push_back(std::async(std::launch::async, [&, s] {
            const auto [vf, rep] = solve_hjb(params.with_sigma(s), curve, grid, options);
            double dist = 0.0;
            for (std::size_t i = 0; i < grid.n; ++i) {
                const double x = grid.x(i);
                if (x < interval.first || x > interval.second) continue;
                dist = std::max(dist, std::abs(vf.V[i] - candidate.evaluate(x).J));
            }
            return dist;
        }));
    }
    ViscosityLimitReport rep;
    rep.sigmas = sigmas;
    for (auto& j : jobs) rep.distances.push_back(j.get());
    rep.non_increasing_with_slack = true;
    rep.strictly_decreasing = true;
    for (std::size_t k = 1; k < rep.distances.size(); ++k) {
        if (rep.distances[k] > 1.1 * rep.distances[k - 1]) rep.non_increasing_with_slack = false;
        if (!(rep.distances[k] < rep.distances[k - 1])) rep.strictly_decreasing = false;
    }
    return rep;
}

SecondDerivativeReport second_derivative_bounds_check(const ValueFunction& vf,
                                                      const LakeParams& params,
                                                      const RecyclingCurve& curve) {
    if (vf.provenance != Provenance::hjb)
        throw DomainError("second_derivative_bounds_check: needs an HJB value function");
    const LakeParams p = params.with_sigma(vf.sigma);
    const double s2 = p.sigma * p.sigma;
    const double A = p.far_field_coefficient();
    const std::size_t n = vf.grid.n;
    const double h = vf.grid.h();
    const std::size_t first = n - n / 10;
    SecondDerivativeReport rep;
    rep.B_est = 0.0;
    for (std::size_t i = first; i < n; ++i)
        rep.B_est = std::max(rep.B_est, -vf.Vp[i] / vf.grid.x(i));
    rep.lower = 2.0 * (-p.rho * A - p.b * rep.B_est + p.c) / s2;
    rep.upper = 2.0 * (-p.rho * A + p.c) / s2;
    rep.finite = true;
    rep.within_bracket = true;
    for (std::size_t i = first; i + 1 < n; ++i) {
        const double x = vf.grid.x(i);
        const double vp = vf.Vp[i];
        const double v2 = 2.0 / (s2 * x * x) *
                          (p.rho * vf.V[i] - (curve.r(x) - p.b * x) * vp + std::log(-vp) +
                           p.c * x * x + 1.0);
        const double fd = (vf.V[i + 1] - 2.0 * vf.V[i] + vf.V[i - 1]) / (h * h);
        rep.x.push_back(x);
        rep.v2_formula.push_back(v2);
        rep.v2_fd.push_back(fd);
        if (!std::isfinite(v2)) rep.finite = false;
        if (!(v2 >= rep.lower && v2 <= rep.upper)) rep.within_bracket = false;
        rep.max_rel_fd_error = std::max(rep.max_rel_fd_error, std::abs(v2 - fd) / std::abs(fd));
    }
    return rep;
}

}  // namespace lakelab
