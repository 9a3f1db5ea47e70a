#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lakelab/lake_model.hpp"

namespace lakelab {

struct CandidateValue;

/// Uniform grid on [0, x_max] with n nodes, h = x_max / (n - 1).
struct GridSpec {
    double x_max = 20.0;
    std::size_t n = 4096;

    double h() const { return x_max / static_cast<double>(n - 1); }
    double x(std::size_t i) const { return static_cast<double>(i) * h(); }
    /// Throws DomainError unless x_max > 0 and n >= 64.
    void validate() const;
};

enum class Provenance { pontryagin, hjb };
std::string to_string(Provenance p);

struct SkibaSides {
    double x;
    double V;
    double Vp_left;
    double Vp_right;
};

enum class Side { left, right };

/// Gridded value function with nodal derivative estimates.
struct ValueFunction {
    GridSpec grid;
    std::vector<double> V;
    std::vector<double> Vp;
    std::vector<double> V2;
    double sigma = 0.0;
    Provenance provenance = Provenance::hjb;
    std::optional<SkibaSides> skiba;  // pontryagin provenance only

    /// Monotone cubic Hermite interpolation of V (limited slopes). The cell that
    /// contains x* is split there for pontryagin data.
    double value(double x) const;

    /// V'(x). At x* the side is chosen by `side` (left when omitted).
    double derivative(double x, std::optional<Side> side = std::nullopt) const;

    /// u*(x) = -1/V'(x).
    double policy(double x, std::optional<Side> side = std::nullopt) const {
        return -1.0 / derivative(x, side);
    }

    bool strictly_decreasing() const;
};

/// Samples J_P and its derivatives on the grid. The grid must lie inside the
/// candidate's domain.
ValueFunction to_value_function(const CandidateValue& candidate, const GridSpec& grid);

}  // namespace lakelab
