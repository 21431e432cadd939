#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "sgp/errors.hpp"
#include "sgp/rng.hpp"

namespace sgp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A batch of points in sample space, one column per draw.
using PointSampler = std::function<Mat(int n, std::uint64_t seed)>;
// Generator-dependent sampler: draws from p_theta.
using GenSampler = std::function<Mat(const Vec& theta, int n, std::uint64_t seed)>;

// Index into one block of the concatenated parameter vector (psi, theta).
struct ParamComponent {
    enum class Block { Psi, Theta };
    Block block = Block::Theta;
    int index = 0;
};

struct WeakDerivativeTriple;

// A finite measure mu_{psi,theta} = M(psi,theta) * normalized(mu), kept as
// the pair (mass function, normalized sampler). Densities are never used, so
// Diracs and manifold-supported measures are exact.
struct FiniteMeasure {
    // M(psi,theta) = total mass, >= 0.
    std::function<double(const Vec& psi, const Vec& theta)> mass;
    // Draws n points from the normalized probability measure.
    std::function<Mat(const Vec& psi, const Vec& theta, int n, std::uint64_t seed)> sample;
    // Approximate support membership (distance-to-support <= tol).
    std::function<bool(const Vec& x, const Vec& psi, const Vec& theta)> in_support;

    bool depends_on_psi = false;
    bool depends_on_theta = false;

    // Analytic weak derivative of the normalized measure for one parameter
    // component, when available. May throw NoWeakDerivative for families that
    // provably have none (e.g. translated Diracs). Null function or nullptr
    // result means "no analytic triple".
    std::function<std::shared_ptr<const WeakDerivativeTriple>(
        ParamComponent, const Vec& psi, const Vec& theta)>
        weak_derivative;
};

// Hahn-Jordan style representation P' = c P+ - c P- of the derivative of a
// probability measure. plus and minus are probability measures (mass 1).
struct WeakDerivativeTriple {
    double c = 0.0;
    FiniteMeasure plus;
    FiniteMeasure minus;
};

// --- Expectations ----------------------------------------------------------

// M(psi,theta) * sample mean of phi over n draws from the normalized measure.
// Deterministic given seed. Non-finite phi at a sample -> NumericalFailure.
double expect(const FiniteMeasure& mu, const Vec& psi, const Vec& theta,
              const std::function<double(const Vec&)>& phi, int n, std::uint64_t seed);

// Plain sample mean of phi over the normalized measure (mass not applied).
double normalized_mean(const FiniteMeasure& mu, const Vec& psi, const Vec& theta,
                       const std::function<double(const Vec&)>& phi, int n,
                       std::uint64_t seed);

enum class DiffMode { Auto, Analytic, FiniteDifference };

// d/dparam of the integral of phi against mu, for one parameter component.
// Analytic path: M' E_P[phi] + M c (E_{P+}[phi] - E_{P-}[phi]), with M' by
// central differences of the (deterministic) mass function.
// Fallback path: central finite difference of expect with common seeds,
// step h = 1e-4 * max(1, |param|).
double differentiate_expectation(const FiniteMeasure& mu, const Vec& psi, const Vec& theta,
                                 const std::function<double(const Vec&)>& phi,
                                 ParamComponent component, int n, std::uint64_t seed,
                                 DiffMode mode = DiffMode::Auto);

// --- Built-in measures -----------------------------------------------------

// Point mass at a fixed location.
FiniteMeasure dirac(const Vec& point, double mass = 1.0);

// U(a, b) on the real line; U(c, c) degenerates to a point mass at c.
FiniteMeasure uniform1d(double a, double b, double mass = 1.0);

// Rescales a probability measure by a parameter-dependent mass. The
// normalized part is unchanged, so the weak derivative of the normalized
// measure is zero and only the M' term survives in differentiation.
FiniteMeasure with_mass(FiniteMeasure base,
                        std::function<double(const Vec&, const Vec&)> mass_fn,
                        bool depends_on_psi, bool depends_on_theta);

// U(0, theta[0]) with the analytic triple (1/theta, delta_theta, U(0,theta)).
FiniteMeasure uniform_0_theta();

// U(-|theta[0]|, |theta[0]|), with U(0,0) = delta_0.
FiniteMeasure uniform_sym_theta();

// delta_{psi[0]}: continuous in psi but has no weak derivative; requesting
// the analytic triple throws NoWeakDerivative. Finite differences of the
// integral remain legitimate when phi is smooth.
FiniteMeasure translated_dirac();

// --- Table 1 penalty measures ----------------------------------------------

enum class Table1Kind { pg, pd, gp, mid, g_anc };

Table1Kind table1_kind_from_string(const std::string& name);
std::string to_string(Table1Kind kind);

// Probability measure (mass 1) combining x_d ~ p_d, x_g ~ p_theta and
// alpha ~ U(0,1):
//   pg -> x_g, pd -> x_d, gp -> alpha x_d + (1-alpha) x_g,
//   mid -> (x_d + x_g)/2, g_anc -> alpha A + (1-alpha) x_g.
// anchor is required iff kind == g_anc.
FiniteMeasure make_table1_measure(Table1Kind kind, const std::optional<Vec>& anchor,
                                  PointSampler data_sampler, GenSampler gen_sampler);

} // namespace sgp
