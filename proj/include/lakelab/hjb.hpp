#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "lakelab/lake_model.hpp"
#include "lakelab/value_function.hpp"

namespace lakelab {

struct CandidateValue;

struct HjbOptions {
    double tol = 1e-9;     // on the row-scaled residual
    int max_iter = 200;
    double u_floor = 1e-10;
    double u_cap = 1e6;    // stands in for an unbounded maximizer when V is not decreasing
};

struct SolveReport {
    int iterations = 0;
    double residual_inf = 0.0;           // row-scaled, the convergence measure
    double residual_inf_unscaled = 0.0;
    double policy_change = 0.0;
    std::vector<double> history;         // row-scaled residual per iteration
    double boundary_identity = 0.0;      // |ln(-Vp(0)) + rho V(0) + 1|
    double boundary_tolerance = 0.0;     // 5 h
    double second_derivative_identity = 0.0;  // |V''(0) + (rho+b-r'(0)) Vp(0)^2| / |V''(0)|
    double far_field_coefficient = 0.0;  // -V(x_max) / x_max^2
    double far_field_target = 0.0;       // c / (rho + 2b - sigma^2)
    double vp_floor = 0.0;               // eps0 = -max Vp on [0, x_max/2]
    std::size_t floor_nodes = 0;
};

/// Default grid: x_max = max(20, 4 x+) with x+ the largest equilibrium, n = 4096.
GridSpec default_grid(const LakeParams& params, const RecyclingCurve& curve);

/// Howard policy iteration on the upwind discretization of the stationary HJB.
/// Throws DomainError unless sigma > 0, NumericalError (with the residual history)
/// on non-convergence or when more than 1% of nodes sit on the control floor.
std::pair<ValueFunction, SolveReport> solve_hjb(const LakeParams& params,
                                                const RecyclingCurve& curve,
                                                const GridSpec& grid,
                                                const HjbOptions& options = {});

struct ResidualProfile {
    std::vector<double> raw;
    std::vector<double> scaled;
    double inf_raw() const;
    double inf_scaled() const;
};

/// For hjb provenance: the discrete upwind residual recomputed from V. For
/// pontryagin provenance: the pointwise residual rho V - H(x, Vp) - sigma^2 x^2 V2 / 2
/// from the stored nodal derivatives (scaled == raw).
ResidualProfile residual(const ValueFunction& vf, const LakeParams& params,
                         const RecyclingCurve& curve);

struct ViscosityLimitReport {
    std::vector<double> sigmas;
    std::vector<double> distances;
    bool non_increasing_with_slack = false;  // d_{k+1} <= 1.1 d_k
    bool strictly_decreasing = false;
};

/// Sup-norm distance of V_sigma to J_P on [lo, hi] for each sigma; solves run
/// concurrently. Throws DomainError if sigmas are not strictly decreasing or
/// inadmissible; solver errors propagate.
ViscosityLimitReport viscosity_limit_check(const LakeParams& params, const RecyclingCurve& curve,
                                           const std::vector<double>& sigmas,
                                           std::pair<double, double> interval,
                                           const CandidateValue& candidate,
                                           const GridSpec& grid,
                                           const HjbOptions& options = {});

struct SecondDerivativeReport {
    std::vector<double> x;
    std::vector<double> v2_formula;  // V'' solved from the HJB equation
    std::vector<double> v2_fd;       // centered second difference of V
    double B_est = 0.0;              // max -Vp/x on the tail
    double lower = 0.0;
    double upper = 0.0;
    bool finite = false;
    bool within_bracket = false;
    double max_rel_fd_error = 0.0;
};

/// Tail check (last 10% of the nodes) of V'' against the bracket
/// [2(-rho A - b B + c)/sigma^2, 2(-rho A + c)/sigma^2]. Requires hjb provenance.
SecondDerivativeReport second_derivative_bounds_check(const ValueFunction& vf,
                                                      const LakeParams& params,
                                                      const RecyclingCurve& curve);

}  // namespace lakelab
