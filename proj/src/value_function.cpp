#include "lakelab/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lakelab/error.hpp"
#include "lakelab/interp.hpp"
#include "lakelab/pontryagin.hpp"

namespace lakelab {

void GridSpec::validate() const {
    if (!(x_max > 0.0) || !std::isfinite(x_max)) throw DomainError("GridSpec: x_max must be positive");
    if (n < 64) throw DomainError("GridSpec: need at least 64 nodes");
}

std::string to_string(Provenance p) { return p == Provenance::hjb ? "hjb" : "pontryagin"; }

namespace {

struct Piece {
    double x0, x1, f0, f1, d0, d1;
};

// Interpolation piece containing x; a cell holding x* is split there.
Piece piece_at(const ValueFunction& vf, double x, std::optional<Side> side) {
    const double h = vf.grid.h();
    const std::size_t n = vf.grid.n;
    if (!(x >= -1e-12 * vf.grid.x_max && x <= vf.grid.x_max * (1.0 + 1e-12))) {
        std::ostringstream os;
        os << "ValueFunction: x = " << x << " outside [0, " << vf.grid.x_max << "]";
        throw DomainError(os.str());
    }
    x = std::clamp(x, 0.0, vf.grid.x_max);
    std::size_t i = std::min(static_cast<std::size_t>(x / h), n - 2);
    Piece p{vf.grid.x(i), vf.grid.x(i + 1), vf.V[i], vf.V[i + 1], vf.Vp[i], vf.Vp[i + 1]};
    if (vf.skiba && vf.skiba->x > p.x0 && vf.skiba->x < p.x1) {
        const auto& sk = *vf.skiba;
        const bool left = x < sk.x || (x == sk.x && side.value_or(Side::left) == Side::left);
        if (left) {
            p.x1 = sk.x;
            p.f1 = sk.V;
            p.d1 = sk.Vp_left;
        } else {
            p.x0 = sk.x;
            p.f0 = sk.V;
            p.d0 = sk.Vp_right;
        }
    }
    const auto [d0, d1] = interp::fritsch_carlson(p.x1 - p.x0, p.f0, p.f1, p.d0, p.d1);
    p.d0 = d0;
    p.d1 = d1;
    return p;
}

}  // namespace

double ValueFunction::value(double x) const {
    const Piece p = piece_at(*this, x, std::nullopt);
    return interp::hermite(p.x0, p.x1, p.f0, p.f1, p.d0, p.d1, std::clamp(x, p.x0, p.x1)).value;
}

double ValueFunction::derivative(double x, std::optional<Side> side) const {
    const Piece p = piece_at(*this, x, side);
    return interp::hermite(p.x0, p.x1, p.f0, p.f1, p.d0, p.d1, std::clamp(x, p.x0, p.x1)).slope;
}

bool ValueFunction::strictly_decreasing() const {
    for (std::size_t i = 0; i + 1 < V.size(); ++i) {
        if (!(V[i + 1] < V[i])) return false;
    }
    return std::all_of(Vp.begin(), Vp.end(), [](double d) { return d < 0.0; });
}

ValueFunction to_value_function(const CandidateValue& candidate, const GridSpec& grid) {
    grid.validate();
    if (candidate.x_lo > 1e-9 || grid.x_max > candidate.x_hi * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "to_value_function: grid [0, " << grid.x_max << "] exceeds candidate domain ["
           << candidate.x_lo << ", " << candidate.x_hi << "]";
        throw DomainError(os.str());
    }
    ValueFunction vf;
    vf.grid = grid;
    vf.sigma = 0.0;
    vf.provenance = Provenance::pontryagin;
    vf.V.resize(grid.n);
    vf.Vp.resize(grid.n);
    vf.V2.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const auto e = candidate.evaluate(std::min(grid.x(i), candidate.x_hi));
        vf.V[i] = e.J;
        vf.Vp[i] = e.Vp;
        vf.V2[i] = e.V2;
    }
    if (candidate.skiba) {
        const auto& sk = *candidate.skiba;
        vf.skiba = SkibaSides{sk.x, sk.J, sk.Vp_left, sk.Vp_right};
    }
    return vf;
}

}  // namespace lakelab
