#pragma once

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "sgp/errors.hpp"

namespace sgp::analytic {

using ScalarField2 = std::function<double(double, double)>;

// A named 2D toy system with its known equilibria.
struct ToySystem2D {
    std::string name;
    std::function<std::array<double, 2>(double psi, double theta)> field;
    std::vector<std::array<double, 2>> equilibria;
};

// Dirac GAN drift with a general penalty mass M(psi,theta):
//   psi_dot = -theta - (rho/2)(2 psi M + psi^2 dM/dpsi),  theta_dot = psi.
std::array<double, 2> dirac_gan_field(double psi, double theta, double rho,
                                      const ScalarField2& mass,
                                      const ScalarField2& mass_grad_psi);

// L = psi^2 + theta^2 and its drift derivative
// L_dot = -rho psi^2 (2M + psi dM/dpsi).
std::array<double, 2> dirac_gan_lyapunov(double psi, double theta, double rho,
                                         const ScalarField2& mass,
                                         const ScalarField2& mass_grad_psi);

// Largest eta <= search_max such that 2M + psi dM/dpsi >= 0 on the closed
// disk of radius eta. Bisection over the radius with >= 10^4 angular samples
// per candidate circle. Returns +infinity when the condition holds up to
// search_max. Negative mass anywhere on the grid -> InvalidMeasure.
double basin_radius(const ScalarField2& mass, const ScalarField2& mass_grad_psi,
                    double search_max, double tol = 1e-3);

// Quadratic GAN drift with penalty second moment m2(theta) = E_{mu_theta}[x^2]:
//   psi_dot = 1/3 - theta^2/3 - 4 rho psi m2(theta),  theta_dot = 2 psi theta / 3.
std::array<double, 2> quadratic_gan_field(double psi, double theta, double rho,
                                          const std::function<double(double)>& second_moment);

// Eigenvalues at (0, +-1): lambda = -2 rho m2 +- sqrt(4 rho^2 m2^2 - 4/9).
std::array<std::complex<double>, 2> quadratic_gan_spectrum(double rho, double m2);

// Counterexample system with D2(x;psi) = psi x^2 and interpolation penalty:
//   psi_dot = -theta^2 - (4/3) rho psi theta^2,  theta_dot = 2 psi theta.
std::array<double, 2> quadratic_dirac_field(double psi, double theta, double rho);

// The two vertical psi_dot nullclines psi = 0 and psi = -3/(4 rho).
std::array<double, 2> quadratic_dirac_nullclines(double rho);

// Toy systems addressable by name: "dirac" (M == 1), "quadratic"
// (m2 == theta^2/3, the U(-|theta|,|theta|) second moment), "quadratic-dirac".
ToySystem2D make_toy_system(const std::string& name, double rho);

} // namespace sgp::analytic
