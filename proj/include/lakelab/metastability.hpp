#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lakelab/lake_model.hpp"
#include "lakelab/value_function.hpp"

namespace lakelab {

struct CandidateValue;

/// Noise-dependent potential F_sigma on a uniform grid y_i = i h, i in [i_lo, i_hi],
/// anchored at F(0) = 0. Drift of the optimally controlled log-state is -F'.
struct Potential {
    double h = 0.0;
    std::vector<double> y;
    std::vector<double> F;
    std::vector<double> Fp;
    double sigma = 0.0;
    std::vector<double> minima;  // ascending
    std::vector<double> maxima;
    std::optional<double> y_minus, y_plus, y_star;  // set in the double-well case
    // F at the landmarks, integrated exactly up to them (F has a kink at a Skiba point)
    double F_minus = 0.0, F_star = 0.0, F_plus = 0.0;
    double tail_slope = 0.0;     // F(y) >= tail_slope * y + tail_constant beyond the grid
    double tail_constant = 0.0;

    double y_min() const { return y.front(); }
    double y_max() const { return y.back(); }
    bool double_well() const { return y_star.has_value(); }
    /// Cubic Hermite interpolation of F with nodal slopes Fp.
    double value(double yy) const;
    double derivative(double yy) const;
    /// F(y*) - F(y+). Throws DomainError outside the double-well case.
    double barrier_height() const;
};

struct PotentialGrid {
    double y_min = -3.0;
    double y_max = 2.9;  // clipped to ln(0.999 x_max) of the value function
    double h = 1e-3;
};

/// F'_sigma(y) = e^{-y}/V'(e^y) + b - r(e^y) e^{-y} + sigma^2/2 integrated by
/// cumulative Simpson (cells holding a Skiba point are split there). Wells and
/// barrier come from a sign scan of F' and bracketed root polishing.
/// Throws DomainError if V' >= 0 on the range, or if require_double_well is set
/// and F has no two minima separated by a maximum.
/// Here and in the simulators the noise level is vf.sigma; params supplies b, c, rho.
Potential build_potential(const ValueFunction& vf, const LakeParams& params,
                          const RecyclingCurve& curve, const PotentialGrid& grid = {},
                          bool require_double_well = false);

/// Potential from closed-form F and F' (test problems). The tail line is the
/// tangent at the grid end, valid for F convex beyond it.
Potential potential_from_function(const std::function<double(double)>& F,
                                  const std::function<double(double)>& Fp, double y_min,
                                  double y_max, double h);

struct ExitQuadrature {
    double value = 0.0;
    double log_value = 0.0;
    double truncation_error_bound = 0.0;
};

/// E tau = (1/eps) int_{y_absorb}^{y_start} int_z^inf exp((F(z) - F(y))/eps) dy dz,
/// truncated at y_upper, in log-sum-exp form. Throws DomainError on bad arguments
/// and NumericalError when the tail bound exceeds 1e-6 of the value.
ExitQuadrature mean_exit_time_quadrature(const Potential& potential, double epsilon,
                                         double y_upper, double y_absorb, double y_start);

/// Same, between the potential's own wells.
ExitQuadrature mean_exit_time_quadrature(const Potential& potential, double epsilon,
                                         double y_upper);

struct ExitOptions {
    double t_max = 2000.0;          // per-path time cap; longer paths are censored
    double control_fraction = 0.1;  // share of paths rerun at dt/2
    unsigned threads = 0;           // 0: hardware concurrency
};

struct ExitSimulation {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
    std::size_t censored = 0;
    bool diverged = false;  // sigma = 0: the start state is never left
    double control_mean = 0.0;
    double control_stderr = 0.0;
    std::size_t control_paths = 0;
    bool step_size_bias = false;
};

/// Euler-Maruyama first passage below x_absorb in log coordinates. Bit-identical
/// for equal inputs regardless of thread count. Throws DomainError on bad
/// arguments, NumericalError if more than 1% of paths are censored (sigma > 0).
ExitSimulation simulate_exit(const ValueFunction& vf, const LakeParams& params,
                             const RecyclingCurve& curve, double x_start, double x_absorb,
                             double dt, std::size_t n_paths, std::uint64_t seed,
                             const ExitOptions& options = {});

struct PathRecord {
    double x_start = 0.0;
    std::vector<double> t;
    std::vector<double> x;
};

/// Sample trajectories of the optimally controlled lake, recorded every sample_dt.
/// sigma = 0 uses adaptive Runge-Kutta on dx/dt = f(x, u*(x)); sigma > 0 uses
/// Euler-Maruyama with step dt in log coordinates.
std::vector<PathRecord> simulate_paths(const ValueFunction& vf, const LakeParams& params,
                                       const RecyclingCurve& curve,
                                       const std::vector<double>& x_starts, double horizon,
                                       double dt, std::uint64_t seed, double sample_dt = 0.1);

struct ExitTimeReport {
    double sigma = 0.0;
    double epsilon = 0.0;
    double tau_quadrature = 0.0;
    double tau_mc = std::numeric_limits<double>::quiet_NaN();
    double tau_mc_stderr = std::numeric_limits<double>::quiet_NaN();
    double eps_log_tau = 0.0;
    double barrier_height = 0.0;  // F(y*) - F(y+) at the deterministic points
    double truncation_error_bound = 0.0;
    std::string error;            // non-empty when the rung failed
};

/// Deterministic landmarks shared by every rung: wells x-, x+ and the barrier x*.
struct Landmarks {
    double x_minus = 0.0;
    double x_star = 0.0;
    double x_plus = 0.0;
    double delta_F0 = 0.0;  // F0(y*) - F0(y+)
};

/// Landmarks from the Pontryagin candidate and its potential F0. Throws
/// DomainError unless F0 is double-well.
Landmarks deterministic_landmarks(const CandidateValue& candidate, const LakeParams& params,
                                  const RecyclingCurve& curve, const GridSpec& grid,
                                  const PotentialGrid& pgrid = {});

struct ArrheniusOptions {
    GridSpec grid{20.0, 4096};
    PotentialGrid pgrid{};
    double hjb_tol = 1e-9;
};

struct ArrheniusReport {
    Landmarks landmarks;
    std::vector<ExitTimeReport> rows;
    std::vector<double> deviations;  // |eps ln tau - delta_F0|
    bool deviations_strictly_decreasing = false;
    std::optional<double> intercept;  // least-squares fit of eps ln tau against eps
    std::optional<double> slope;
    double intercept_rel_error = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> warnings;
};

/// Runs the ladder (rungs concurrently). Rung failures are recorded in the row and
/// the remaining rungs continue. Throws DomainError on an invalid ladder.
ArrheniusReport arrhenius_estimate(const LakeParams& params, const RecyclingCurve& curve,
                                   const std::vector<double>& sigma_ladder,
                                   const ArrheniusOptions& options = {});

/// Pairwise (cascade) summation.
double pairwise_sum(const double* v, std::size_t n);

}  // namespace lakelab
