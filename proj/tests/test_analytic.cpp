#include "doctest.h"

#include <cmath>
#include <limits>

#include "sgp/analytic.hpp"

using namespace sgp::analytic;

namespace {

const ScalarField2 unit_mass = [](double, double) { return 1.0; };
const ScalarField2 zero_grad = [](double, double) { return 0.0; };

// M = max(0, 1 - (psi^2 + theta^2)/4): the clamped bump whose basin radius is
// sqrt(2).
const ScalarField2 bump_mass = [](double p, double t) {
    return std::max(0.0, 1.0 - (p * p + t * t) / 4.0);
};
const ScalarField2 bump_grad = [](double p, double t) {
    return (p * p + t * t) < 4.0 ? -p / 2.0 : 0.0;
};

} // namespace

TEST_CASE("Dirac GAN drift with unit mass") {
    for (double rho : {0.5, 1.0, 2.0}) {
        auto f = dirac_gan_field(0.3, -0.7, rho, unit_mass, zero_grad);
        CHECK(f[0] == doctest::Approx(0.7 - rho * 0.3).epsilon(1e-15));
        CHECK(f[1] == doctest::Approx(0.3).epsilon(1e-15));
    }
    auto eq = dirac_gan_field(0.0, 0.0, 1.0, unit_mass, zero_grad);
    CHECK(eq[0] == 0.0);
    CHECK(eq[1] == 0.0);
}

TEST_CASE("Lyapunov derivative agrees with the chain rule along the drift") {
    const double rho = 1.25;
    for (auto [p, t] : {std::pair{0.4, 0.9}, {-1.0, 0.2}, {0.0, 1.0}}) {
        auto f = dirac_gan_field(p, t, rho, bump_mass, bump_grad);
        auto [L, Ldot] = dirac_gan_lyapunov(p, t, rho, bump_mass, bump_grad);
        CHECK(L == doctest::Approx(p * p + t * t).epsilon(1e-15));
        CHECK(Ldot == doctest::Approx(2 * p * f[0] + 2 * t * f[1]).epsilon(1e-12));
        CHECK(Ldot <= 1e-15); // inside the basin the drift dissipates L
    }
}

TEST_CASE("basin radius: global for unit mass, sqrt(2) for the clamped bump") {
    CHECK(basin_radius(unit_mass, zero_grad, 10.0) ==
          std::numeric_limits<double>::infinity());
    CHECK(basin_radius(bump_mass, bump_grad, 4.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("negative mass on the search grid is rejected") {
    ScalarField2 negative = [](double, double) { return -0.5; };
    CHECK_THROWS_AS(basin_radius(negative, zero_grad, 4.0), sgp::InvalidMeasure);
}

TEST_CASE("quadratic GAN drift and its equilibria") {
    auto m2 = [](double theta) { return theta * theta / 3.0; };
    for (double t : {1.0, -1.0}) {
        auto f = quadratic_gan_field(0.0, t, 1.0, m2);
        CHECK(std::abs(f[0]) < 1e-15);
        CHECK(std::abs(f[1]) < 1e-15);
    }
    auto f = quadratic_gan_field(0.5, 2.0, 1.5, m2);
    CHECK(f[0] == doctest::Approx(1.0 / 3.0 - 4.0 / 3.0 - 4.0 * 1.5 * 0.5 * 4.0 / 3.0).epsilon(1e-15));
    CHECK(f[1] == doctest::Approx(2.0 * 0.5 * 2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("quadratic GAN spectrum closed form") {
    { // repeated real root at the critical damping point m2 = 1/3, rho = 1
        auto l = quadratic_gan_spectrum(1.0, 1.0 / 3.0);
        CHECK(l[0].real() == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
        CHECK(l[1].real() == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
        CHECK(std::abs(l[0].imag()) < 1e-8);
    }
    { // overdamped: both real, negative, product 4/9
        auto l = quadratic_gan_spectrum(1.0, 1.0);
        CHECK(l[0].imag() == 0.0);
        CHECK(l[0].real() < 0.0);
        CHECK(l[1].real() < 0.0);
        CHECK((l[0] * l[1]).real() == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
        CHECK((l[0] + l[1]).real() == doctest::Approx(-4.0).epsilon(1e-12));
    }
    { // vanishing second moment: purely imaginary +-2i/3, no decay
        auto l = quadratic_gan_spectrum(1.0, 0.0);
        CHECK(l[0].real() == 0.0);
        CHECK(l[1].real() == 0.0);
        CHECK(std::abs(l[0].imag()) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("counterexample drift, nullclines and the axis of equilibria") {
    const double rho = 3.0 / 8.0;
    auto nc = quadratic_dirac_nullclines(rho);
    CHECK(nc[0] == 0.0);
    CHECK(nc[1] == doctest::Approx(-2.0).epsilon(1e-15));

    // Every point of the psi-axis is an equilibrium.
    for (double a : {-4.0, -1.0, 0.0, 2.0}) {
        auto f = quadratic_dirac_field(a, 0.0, rho);
        CHECK(std::abs(f[0]) <= 1e-12);
        CHECK(std::abs(f[1]) <= 1e-12);
    }
    // On the second nullcline psi = -3/(4 rho), psi_dot vanishes for any theta.
    auto f = quadratic_dirac_field(nc[1], 0.8, rho);
    CHECK(std::abs(f[0]) < 1e-12);
    CHECK(f[1] == doctest::Approx(2.0 * nc[1] * 0.8).epsilon(1e-15));
}

TEST_CASE("toy systems by name") {
    for (const char* name : {"dirac", "quadratic", "quadratic-dirac"}) {
        ToySystem2D sys = make_toy_system(name, 1.0);
        CHECK(sys.name == name);
        CHECK(!sys.equilibria.empty());
        for (auto [p, t] : sys.equilibria) {
            auto f = sys.field(p, t);
            CHECK(std::abs(f[0]) < 1e-12);
            CHECK(std::abs(f[1]) < 1e-12);
        }
    }
    CHECK(make_toy_system("quadratic", 1.0).equilibria.size() == 2);
    CHECK_THROWS_AS(make_toy_system("cubic", 1.0), sgp::ConfigError);
}
