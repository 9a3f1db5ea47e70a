#include <cmath>
#include <random>

#include "doctest.h"
#include "lakelab/error.hpp"
#include "lakelab/lake_model.hpp"
#include "oracles.hpp"

using namespace lakelab;
using doctest::Approx;

TEST_CASE("hill curve values and limits") {
    const auto r = hill_curve();
    CHECK(r.r(0.0) == 0.0);
    CHECK(r.r(1.0) == Approx(0.5).epsilon(1e-15));
    CHECK(r.dr(1.0) == Approx(0.5).epsilon(1e-15));
    CHECK(r.asymptote() == 1.0);
    CHECK((r.asymptote() - r.r(1e3)) * 1e3 <= 1.1e-3);
    CHECK(r.audit().limit_constant <= 1.1e-3);
    CHECK_FALSE(r.second_derivative_is_fd());
}

TEST_CASE("make_curve audits") {
    SUBCASE("r(0) != 0 rejected") {
        CHECK_THROWS_AS(make_curve(
                            "shifted", [](double x) { return 0.1 + x * x / (1 + x * x); },
                            [](double x) { return 2 * x / ((1 + x * x) * (1 + x * x)); }, {}, 1.1),
                        DomainError);
    }
    SUBCASE("wrong derivative rejected") {
        CHECK_THROWS_AS(make_curve(
                            "bad", [](double x) { return x * x / (1 + x * x); },
                            [](double x) { return x / (1 + x * x); }, {}, 1.0),
                        DomainError);
    }
    SUBCASE("missing r'' is substituted by a finite difference") {
        const auto c = make_curve(
            "hill-fd", [](double x) { return x * x / (1 + x * x); },
            [](double x) { return 2 * x / ((1 + x * x) * (1 + x * x)); }, {}, 1.0);
        CHECK(c.second_derivative_is_fd());
        CHECK(c.d2r(0.7) == Approx(hill_curve().d2r(0.7)).epsilon(1e-6));
    }
    SUBCASE("hill scale must be positive") { CHECK_THROWS_AS(hill_curve(-1.0), DomainError); }
}

TEST_CASE("LakeParams validation") {
    CHECK_NOTHROW(LakeParams{}.validate());
    CHECK_THROWS_AS((LakeParams{-0.65, 0.512, 0.03, 0.0}.validate()), DomainError);
    CHECK_THROWS_AS((LakeParams{0.65, 0.0, 0.03, 0.0}.validate()), DomainError);
    CHECK_THROWS_AS((LakeParams{0.65, 0.512, 0.03, 2.0}.validate()), DomainError);
    CHECK(LakeParams{}.far_field_coefficient() == Approx(0.512 / 1.33).epsilon(1e-14));
}

TEST_CASE("drift and costate dynamics") {
    const LakeParams p;
    const auto r = hill_curve();
    CHECK(drift(p, r, 0.0, 0.3) == Approx(0.3));
    CHECK(std::abs(drift(p, r, 1.0, 0.15)) <= 1e-15);
    CHECK_THROWS_AS(drift(p, r, -0.1, 0.3), DomainError);
    CHECK_THROWS_AS(drift(p, r, 0.5, 0.0), DomainError);
    CHECK(costate_dynamics(p, r, 0.0, 1.0) == Approx(-0.68).epsilon(1e-14));
    const double x = 1.2, g1 = control_nullcline(p, r, x);
    CHECK(costate_dynamics(p, r, x, g1 * (1 + 1e-6)) > 0.0);
    CHECK(costate_dynamics(p, r, x, g1 * (1 - 1e-6)) < 0.0);
}

TEST_CASE("hamiltonian closed form") {
    const LakeParams p;
    const auto r = hill_curve();
    CHECK(hamiltonian(p, r, 0.0, -1.0) == Approx(-1.0).epsilon(1e-15));
    // r(0) = 0 leaves -ln(e) - 1
    CHECK(hamiltonian(p, r, 0.0, -std::exp(1.0)) == Approx(-2.0).epsilon(1e-14));
    CHECK(std::abs(hamiltonian(p, r, 0.0, -std::exp(1.0)) -
                   oracle::hamiltonian_grid_search(0.0, -std::exp(1.0), p.b, p.c, 0.0)) <= 1e-6);
    CHECK_THROWS_AS(hamiltonian(p, r, 1.0, 0.0), DomainError);

    const double brute = oracle::hamiltonian_grid_search(1.0, -2.0, p.b, p.c, r.r(1.0));
    CHECK(std::abs(hamiltonian(p, r, 1.0, -2.0) - brute) <= 1e-6);
}

TEST_CASE("log hamiltonian chain rule") {
    const auto r = hill_curve();
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> ys(-3.0, 2.5), ps(-5.0, -0.01), ss(0.0, 0.5);
    for (int k = 0; k < 200; ++k) {
        const double y = ys(gen), pp = ps(gen);
        const LakeParams p{0.65, 0.512, 0.03, ss(gen)};
        const double lhs = log_hamiltonian(p, r, y, pp) -
                           hamiltonian(p, r, std::exp(y), pp * std::exp(-y)) +
                           0.5 * p.sigma * p.sigma * pp;
        CHECK(std::abs(lhs) <= 1e-12 * std::max(1.0, std::abs(log_hamiltonian(p, r, y, pp))));
    }
    const LakeParams p0;
    CHECK(log_hamiltonian(p0, r, 0.0, -1.0) == Approx(-1.362).epsilon(1e-14));
    CHECK(log_hamiltonian(p0, r, 0.0, -1e-12) > log_hamiltonian(p0, r, 0.0, -1e-3));
    CHECK_THROWS_AS(log_hamiltonian(p0, r, 0.0, 0.0), DomainError);
}
