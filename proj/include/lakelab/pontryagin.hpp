#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lakelab/lake_model.hpp"

namespace lakelab {

enum class EquilibriumKind { saddle, vortex, node };
std::string to_string(EquilibriumKind kind);

/// Steady state of the state-control system with its linearization.
struct Equilibrium {
    PhasePoint point{};
    std::array<std::array<double, 2>, 2> jacobian{};
    double lambda_minus = 0.0;  // real parts, ascending
    double lambda_plus = 0.0;
    double lambda_imag = 0.0;  // >= 0; nonzero only for a complex pair
    EquilibriumKind kind = EquilibriumKind::node;
    double stable_slope = 0.0;  // du/dx along the stable eigenvector (saddles only, NaN otherwise)
};

struct EquilibriumScan {
    std::vector<Equilibrium> equilibria;   // admissible (u0 > 0), sorted by x0
    std::vector<double> inadmissible_roots;  // roots of phi with u0 <= 0
};

/// phi(x) = (bx - r(x)) - (b + rho - r'(x)) / (2cx); equilibria are its roots.
double steady_state_function(const LakeParams& params, const RecyclingCurve& curve, double x);

/// All roots of phi in (0, x_max], classified. Throws DomainError if x_max <= 0.
EquilibriumScan find_equilibria(const LakeParams& params, const RecyclingCurve& curve,
                                double x_max);

/// Default upper end of the equilibrium search: 4 times the largest root of
/// bx = r(x), or of bx = r(x) + (b+rho)/(2cx) when the former has no positive root.
double default_equilibrium_bound(const LakeParams& params, const RecyclingCurve& curve);

/// Jacobian, spectrum and type at a steady state. Throws DomainError when the
/// steady-state residuals exceed 1e-8.
Equilibrium classify(const LakeParams& params, const RecyclingCurve& curve, PhasePoint point);

enum class BranchDirection { toward_smaller_x, toward_larger_x };
enum class BranchStop { lower_bound, upper_bound, control_floor, arc_length, fold, time_limit };
std::string to_string(BranchDirection d);
std::string to_string(BranchStop s);

struct BranchSample {
    double x;
    double u;
    double J;     // candidate value J_P
    double dudx;  // slope of the manifold, g/f (eigenvector slope at the saddle)
};

struct ManifoldOptions {
    double rtol = 1e-10;
    double atol = 1e-13;
    double u_floor = 1e-8;
    double arc_length_cap = 1e3;
    double max_ds = 0.01;  // arc length per accepted step
    double seed_scale = 1e-6;
};

/// One side of the stable manifold of a saddle, stored with ascending x.
struct ManifoldBranch {
    Equilibrium source;
    BranchDirection direction = BranchDirection::toward_smaller_x;
    std::vector<BranchSample> samples;
    double x_lo = 0.0;
    double x_hi = 0.0;
    BranchStop stop = BranchStop::time_limit;
    std::size_t truncated_samples = 0;  // dropped at a fold

    bool covers(double x) const { return x >= x_lo && x <= x_hi; }
    double u_at(double x) const;
    double J_at(double x) const;
    double dudx_at(double x) const;
};

/// Stable manifold branch from a saddle, integrated in reversed time.
/// Throws DomainError if eq is not a saddle or the seed has u <= 0.
ManifoldBranch stable_manifold(const LakeParams& params, const RecyclingCurve& curve,
                               const Equilibrium& eq, BranchDirection direction,
                               std::pair<double, double> x_bounds,
                               const ManifoldOptions& options = {});

/// Largest deviation between consecutive samples and an independent two-half-step
/// RK4 integration of du/dx = g/f across each sample interval (the interval at the
/// saddle, where g/f is 0/0, is skipped).
double branch_step_defect(const ManifoldBranch& branch, const LakeParams& params,
                          const RecyclingCurve& curve);

struct SkibaPoint {
    double x = 0.0;
    double J = 0.0;
    double J_gap = 0.0;  // |J_left - J_right| at x
    double u_left = 0.0, u_right = 0.0;
    double Vp_left = 0.0, Vp_right = 0.0;
    double V2_left = 0.0, V2_right = 0.0;
    double drift_left = 0.0, drift_right = 0.0;
    int jump_sign = 0;  // sign of Vp_right - Vp_left
};

/// Candidate value function assembled from manifold branches.
struct CandidateValue {
    LakeParams params;
    std::vector<ManifoldBranch> branches;
    std::optional<SkibaPoint> skiba;
    std::optional<double> threshold;  // repeller case: middle equilibrium, no Skiba point
    double x_lo = 0.0;
    double x_hi = 0.0;
    double quadrature_crosscheck = 0.0;  // max |trapezoid+Richardson - integrated J_P|

    struct Eval {
        double J;
        double u;
        double Vp;
        double V2;
        std::size_t branch;
    };
    /// Envelope value at x in [x_lo, x_hi]; at exactly x* the left side is returned.
    Eval evaluate(double x) const;

    /// Optimal controls at x: one value, or both side values at x*.
    std::vector<double> policy(double x) const;

    /// Saddle equilibria that source the branches, sorted by x0.
    std::vector<Equilibrium> saddles() const;
};

/// Assembles J_P. Throws DomainError if a branch does not come from a saddle and
/// NumericalError if the branch ranges leave a gap in [0, x_hi].
CandidateValue candidate_value(const LakeParams& params, const RecyclingCurve& curve,
                               std::vector<ManifoldBranch> branches);

/// Convenience pipeline: equilibria on (0, x_eq], both branches of every saddle on
/// [0, x_max], then candidate_value.
CandidateValue build_candidate(const LakeParams& params, const RecyclingCurve& curve,
                               double x_max, const ManifoldOptions& options = {});

/// |rho J - H(x, -1/u)| at a manifold sample.
double candidate_hjb_residual(const LakeParams& params, const RecyclingCurve& curve,
                              const BranchSample& s);

struct QuadraticBoundReport {
    double A_det = 0.0;
    bool monotone = false;
    double worst_increase = 0.0;  // largest positive step of J_P + A x^2
    double x_eval = 0.0;
    double slope_ratio = 0.0;  // (-1/u(x)) / (-2 A x) at x_eval
    bool slope_evaluated = false;  // x_eval >= 20
    bool slope_ok = false;
    bool passed = false;
};

QuadraticBoundReport quadratic_lower_bound_check(const CandidateValue& candidate,
                                                 const LakeParams& params,
                                                 std::size_t n_grid = 4001);

}  // namespace lakelab
