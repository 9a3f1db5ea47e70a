#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "lakelab/error.hpp"
#include "lakelab/hjb.hpp"
#include "lakelab/metastability.hpp"
#include "lakelab/pontryagin.hpp"
#include "oracles.hpp"

using namespace lakelab;
using doctest::Approx;

namespace {

const LakeParams kP{0.65, 0.512, 0.03, 0.0};
const GridSpec kGrid{20.0, 4096};

struct Deterministic {
    RecyclingCurve curve = hill_curve();
    CandidateValue cand = build_candidate(kP, curve, kGrid.x_max);
    ValueFunction vf = to_value_function(cand, kGrid);
    Potential F0 = build_potential(vf, kP, curve, {}, true);
};

const Deterministic& det() {
    static const Deterministic d;
    return d;
}

}  // namespace

TEST_CASE("deterministic potential") {
    const auto& d = det();
    const auto& F0 = d.F0;
    REQUIRE(F0.double_well());
    CHECK(F0.minima.size() == 2);
    CHECK(F0.maxima.size() == 1);
    CHECK(F0.value(0.0) == 0.0);
    const auto sad = d.cand.saddles();
    CHECK(std::abs(std::exp(*F0.y_minus) - sad[0].point.x) <= 1e-6);
    CHECK(std::abs(std::exp(*F0.y_plus) - sad[1].point.x) <= 1e-6);
    CHECK(std::abs(std::exp(*F0.y_star) - d.cand.skiba->x) <= 1e-6);
    CHECK(F0.barrier_height() > 0.0);
    CHECK(F0.barrier_height() == Approx(F0.F_star - F0.F_plus));
}

TEST_CASE("single-well potential has no barrier") {
    const auto& d = det();
    const auto [vf, rep] = solve_hjb(kP.with_sigma(0.3), d.curve, kGrid);
    const auto P = build_potential(vf, kP.with_sigma(0.3), d.curve);
    CHECK_FALSE(P.double_well());
    CHECK_THROWS_AS(P.barrier_height(), DomainError);
    CHECK_THROWS_AS(build_potential(vf, kP.with_sigma(0.3), d.curve, {}, true), DomainError);
}

TEST_CASE("exit-time quadrature on the quadratic potential") {
    auto F = [](double y) { return 0.5 * y * y; };
    auto Fp = [](double y) { return y; };
    const auto P = potential_from_function(F, Fp, -3.0, 8.0, 1e-3);
    for (double eps : {0.05, 0.1, 0.5}) {
        const double got = mean_exit_time_quadrature(P, eps, 8.0, -1.0, 1.0).value;
        const double ref = oracle::nested_exit_time(F, eps, -1.0, 1.0, 8.0);
        CHECK(std::abs(got / ref - 1.0) <= 1e-6);
    }

    const auto Q = potential_from_function([&](double y) { return F(y) + 7.0; }, Fp, -3.0, 8.0, 1e-3);
    const double a = mean_exit_time_quadrature(P, 0.1, 8.0, -1.0, 1.0).value;
    const double b = mean_exit_time_quadrature(Q, 0.1, 8.0, -1.0, 1.0).value;
    CHECK(std::abs(a / b - 1.0) <= 1e-13);

    CHECK_THROWS_AS(mean_exit_time_quadrature(P, 0.0, 8.0, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(mean_exit_time_quadrature(P, 0.1, 8.0, 1.0, -1.0), DomainError);
    CHECK_THROWS_AS(mean_exit_time_quadrature(P, 0.1, 9.0, -1.0, 1.0), DomainError);
    // upper limit too close to the start: the neglected tail is not small
    CHECK_THROWS_AS(mean_exit_time_quadrature(P, 0.5, 1.5, -1.0, 1.0), NumericalError);
}

TEST_CASE("smaller noise means longer exits on F0") {
    const auto& F0 = det().F0;
    double prev = 0.0;
    for (double eps : {0.02, 0.01, 0.005}) {
        const double t = mean_exit_time_quadrature(F0, eps, F0.y_max()).value;
        CHECK(t > prev);
        prev = t;
    }
}

TEST_CASE("Monte Carlo exit times") {
    const auto& d = det();
    const auto p = kP.with_sigma(0.3);
    const auto vf = solve_hjb(p, d.curve, kGrid).first;
    const auto sad = d.cand.saddles();
    const double xm = sad[0].point.x, xp = sad[1].point.x;

    SUBCASE("determinism across runs and thread counts") {
        ExitOptions one, many;
        one.threads = 1;
        many.threads = 4;
        const auto a = simulate_exit(vf, p, d.curve, xp, xm, 1e-3, 200, 11, one);
        const auto b = simulate_exit(vf, p, d.curve, xp, xm, 1e-3, 200, 11, many);
        const auto c = simulate_exit(vf, p, d.curve, xp, xm, 1e-3, 200, 11, many);
        CHECK(a.mean == b.mean);
        CHECK(a.stderr_ == b.stderr_);
        CHECK(b.mean == c.mean);
        CHECK(b.control_mean == c.control_mean);
        const auto e = simulate_exit(vf, p, d.curve, xp, xm, 1e-3, 200, 12, many);
        CHECK(e.mean != a.mean);
    }

    SUBCASE("standard error shrinks like 1/sqrt(n)") {
        const auto a = simulate_exit(vf, p, d.curve, xp, xm, 2e-3, 500, 3);
        const auto b = simulate_exit(vf, p, d.curve, xp, xm, 2e-3, 2000, 3);
        const double ratio = a.stderr_ / b.stderr_;
        CHECK(ratio > 1.6);
        CHECK(ratio < 2.5);
    }

    SUBCASE("zero noise never leaves the well") {
        const auto z = simulate_exit(d.vf, kP, d.curve, xp, xm, 1e-2, 4, 1, ExitOptions{5.0, 0.1, 0});
        CHECK(z.diverged);
        CHECK(z.censored == z.n_paths);
    }

    CHECK_THROWS_AS(simulate_exit(vf, p, d.curve, xm, xp, 1e-3, 10, 1), DomainError);
    CHECK_THROWS_AS(simulate_exit(vf, p, d.curve, xp, xm, 0.0, 10, 1), DomainError);
}

TEST_CASE("deterministic paths converge to the wells") {
    const auto& d = det();
    const auto sad = d.cand.saddles();
    const double xs = d.cand.skiba->x;
    const auto paths = simulate_paths(d.vf, kP, d.curve, {0.3, 0.9 * xs, 1.1 * xs, 3.0, sad[0].point.x},
                                      500.0, 1e-3, 1);
    REQUIRE(paths.size() == 5);
    CHECK(std::abs(paths[0].x.back() - sad[0].point.x) <= 1e-4);
    CHECK(std::abs(paths[1].x.back() - sad[0].point.x) <= 1e-4);
    CHECK(std::abs(paths[2].x.back() - sad[1].point.x) <= 1e-4);
    CHECK(std::abs(paths[3].x.back() - sad[1].point.x) <= 1e-4);
    double drift_max = 0.0;
    for (double x : paths[4].x) drift_max = std::max(drift_max, std::abs(x - sad[0].point.x));
    CHECK(drift_max <= 1e-6);
    CHECK(paths[0].t.back() == Approx(500.0));
}

TEST_CASE("occupancy at sigma = 0.3 is bimodal around the deterministic wells") {
    const auto& d = det();
    const auto p = kP.with_sigma(0.3);
    const auto vf = solve_hjb(p, d.curve, kGrid).first;
    const auto sad = d.cand.saddles();
    const double ym = std::log(sad[0].point.x), yp = std::log(sad[1].point.x);

    std::vector<double> starts(8, sad[0].point.x);
    std::fill(starts.begin() + 4, starts.end(), sad[1].point.x);
    const auto paths = simulate_paths(vf, p, d.curve, starts, 5000.0, 2e-3, 5, 0.5);

    const int nb = 30;
    const double lo = std::log(0.2), hi = std::log(3.0);
    std::vector<double> hist(nb, 0.0);
    for (const auto& path : paths)
        for (double x : path.x) {
            const int k = static_cast<int>((std::log(x) - lo) / (hi - lo) * nb);
            if (k >= 0 && k < nb) hist[k] += 1.0;
        }
    // interior local maxima of the histogram, in ln x
    std::vector<double> modes;
    for (int k = 1; k + 1 < nb; ++k)
        if (hist[k] > hist[k - 1] && hist[k] >= hist[k + 1])
            modes.push_back(lo + (k + 0.5) * (hi - lo) / nb);
    auto near = [&](double y) {
        return std::any_of(modes.begin(), modes.end(), [&](double m) { return std::abs(m - y) <= 0.2; });
    };
    INFO("modes found: " << modes.size());
    CHECK(modes.size() >= 2);
    CHECK(near(ym));
    CHECK(near(yp));
}

TEST_CASE("Arrhenius ladder plumbing") {
    const auto curve = hill_curve();
    const auto one = arrhenius_estimate(kP, curve, {0.16});
    CHECK(one.rows.size() == 1);
    CHECK_FALSE(one.intercept.has_value());
    CHECK_FALSE(one.warnings.empty());
    CHECK_THROWS_AS(arrhenius_estimate(kP, curve, {}), DomainError);
    CHECK_THROWS_AS(arrhenius_estimate(kP, curve, {0.1, 0.2}), DomainError);

    const auto rep = arrhenius_estimate(kP, curve, {0.30, 0.22, 0.16, 0.12});
    REQUIRE(rep.rows.size() == 4);
    for (std::size_t k = 1; k < rep.rows.size(); ++k) {
        CHECK(rep.rows[k].eps_log_tau < rep.rows[k - 1].eps_log_tau);
        CHECK(rep.rows[k].tau_quadrature > rep.rows[k - 1].tau_quadrature);
    }
    CHECK(rep.deviations_strictly_decreasing);
    CHECK(rep.landmarks.delta_F0 == Approx(det().F0.barrier_height()).epsilon(1e-12));
}

TEST_CASE("pairwise summation") {
    std::vector<double> v(1 << 20, 0.1);
    const double s = pairwise_sum(v.data(), v.size());
    CHECK(std::abs(s - 0.1 * v.size()) <= 1e-9);
    CHECK(pairwise_sum(v.data(), 0) == 0.0);
}
