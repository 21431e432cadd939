#include "sgp/analytic.hpp"

#include <cmath>
#include <limits>

namespace sgp::analytic {

std::array<double, 2> dirac_gan_field(double psi, double theta, double rho,
                                      const ScalarField2& mass,
                                      const ScalarField2& mass_grad_psi) {
    const double m = mass(psi, theta);
    const double dm = mass_grad_psi(psi, theta);
    const double psi_dot = -theta - 0.5 * rho * (2.0 * psi * m + psi * psi * dm);
    return {psi_dot, psi};
}

std::array<double, 2> dirac_gan_lyapunov(double psi, double theta, double rho,
                                         const ScalarField2& mass,
                                         const ScalarField2& mass_grad_psi) {
    const double L = psi * psi + theta * theta;
    const double m = mass(psi, theta);
    const double dm = mass_grad_psi(psi, theta);
    const double Ldot = -rho * psi * psi * (2.0 * m + psi * dm);
    return {L, Ldot};
}

namespace {

// Minimum of 2M + psi dM/dpsi over a circle, also flagging negative mass.
double circle_min(const ScalarField2& mass, const ScalarField2& mass_grad_psi, double r,
                  int n_angles) {
    double lo = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_angles; ++k) {
        const double a = 2.0 * M_PI * k / n_angles;
        const double psi = r * std::cos(a);
        const double theta = r * std::sin(a);
        const double m = mass(psi, theta);
        if (m < 0.0) throw InvalidMeasure("mass function negative on basin search grid");
        lo = std::min(lo, 2.0 * m + psi * mass_grad_psi(psi, theta));
    }
    return lo;
}

} // namespace

double basin_radius(const ScalarField2& mass, const ScalarField2& mass_grad_psi,
                    double search_max, double tol) {
    if (search_max <= 0.0) throw ConfigError("basin search_max must be positive");
    constexpr int kAngles = 10000;
    constexpr int kRadial = 512;

    double last_ok = 0.0;
    double first_bad = -1.0;
    for (int i = 1; i <= kRadial; ++i) {
        const double r = search_max * i / kRadial;
        if (circle_min(mass, mass_grad_psi, r, kAngles) >= 0.0) {
            last_ok = r;
        } else {
            first_bad = r;
            break;
        }
    }
    if (first_bad < 0.0) return std::numeric_limits<double>::infinity();

    double lo = last_ok, hi = first_bad;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (circle_min(mass, mass_grad_psi, mid, kAngles) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::array<double, 2> quadratic_gan_field(double psi, double theta, double rho,
                                          const std::function<double(double)>& second_moment) {
    const double m2 = second_moment(theta);
    const double psi_dot = 1.0 / 3.0 - theta * theta / 3.0 - 4.0 * rho * psi * m2;
    const double theta_dot = 2.0 * psi * theta / 3.0;
    return {psi_dot, theta_dot};
}

std::array<std::complex<double>, 2> quadratic_gan_spectrum(double rho, double m2) {
    const double a = -2.0 * rho * m2;
    const double disc = 4.0 * rho * rho * m2 * m2 - 4.0 / 9.0;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return {std::complex<double>(a + s, 0.0), std::complex<double>(a - s, 0.0)};
    }
    const double s = std::sqrt(-disc);
    return {std::complex<double>(a, s), std::complex<double>(a, -s)};
}

std::array<double, 2> quadratic_dirac_field(double psi, double theta, double rho) {
    const double psi_dot = -theta * theta - (4.0 / 3.0) * rho * psi * theta * theta;
    return {psi_dot, 2.0 * psi * theta};
}

std::array<double, 2> quadratic_dirac_nullclines(double rho) {
    return {0.0, -3.0 / (4.0 * rho)};
}

ToySystem2D make_toy_system(const std::string& name, double rho) {
    ToySystem2D sys;
    sys.name = name;
    if (name == "dirac") {
        sys.field = [rho](double psi, double theta) {
            return dirac_gan_field(psi, theta, rho, [](double, double) { return 1.0; },
                                   [](double, double) { return 0.0; });
        };
        sys.equilibria = {{0.0, 0.0}};
    } else if (name == "quadratic") {
        sys.field = [rho](double psi, double theta) {
            return quadratic_gan_field(psi, theta, rho,
                                       [](double t) { return t * t / 3.0; });
        };
        sys.equilibria = {{0.0, 1.0}, {0.0, -1.0}};
    } else if (name == "quadratic-dirac") {
        sys.field = [rho](double psi, double theta) {
            return quadratic_dirac_field(psi, theta, rho);
        };
        sys.equilibria = {{0.0, 0.0}, {-3.0 / (4.0 * rho), 0.0}};
    } else {
        throw ConfigError("unknown toy system: " + name);
    }
    return sys;
}

} // namespace sgp::analytic
