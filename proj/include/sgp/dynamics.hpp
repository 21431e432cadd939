#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sgp/measure.hpp"
#include "sgp/net.hpp"

namespace sgp::dynamics {

using sgp::Mat;
using sgp::Vec;

// Scalar-valued critic D(x; psi) with first and mixed second derivatives.
struct Discriminator {
    virtual ~Discriminator() = default;
    virtual int psi_dim() const = 0;
    virtual int x_dim() const = 0;

    virtual double value(const Vec& x, const Vec& psi) const = 0;
    virtual Vec grad_x(const Vec& x, const Vec& psi) const = 0;
    virtual Vec grad_psi(const Vec& x, const Vec& psi) const = 0;
    // d^2 D / dpsi dx, psi_dim x x_dim.
    virtual Mat mixed_grad(const Vec& x, const Vec& psi) const = 0;

    // Batched versions (one column per sample); defaults loop over columns.
    virtual Eigen::RowVectorXd values(const Mat& X, const Vec& psi) const;
    virtual Vec sum_grad_psi(const Mat& X, const Vec& psi) const;
    virtual Mat grad_x_batch(const Mat& X, const Vec& psi) const;
    // d/dpsi of (1/N) sum_n ||grad_x D(x_n; psi)||^2; mean through *value.
    virtual Vec squared_grad_param_grad(const Mat& X, const Vec& psi,
                                        double* value) const;
};

// Map G(z; theta) with parameter-space VJP access.
struct Generator {
    virtual ~Generator() = default;
    virtual int theta_dim() const = 0;
    virtual int z_dim() const = 0;
    virtual int x_dim() const = 0;

    virtual Mat forward(const Mat& Z, const Vec& theta) const = 0;
    // d(sum_n adjoint(:,n) . G(z_n; theta)) / dtheta.
    virtual Vec vjp_theta(const Mat& Z, const Vec& theta, const Mat& out_adjoint) const = 0;
};

struct SGPProblem {
    std::shared_ptr<const Discriminator> D;
    std::shared_ptr<const Generator> G;
    PointSampler data;   // draws from p_d
    PointSampler latent; // draws from p_latent
    FiniteMeasure penalty;
    double rho = 1.0;
};

struct McConfig {
    int n = 10000;
    std::uint64_t seed = 0;
};

// Gradient of E_mu[||grad_x D||^2] with respect to psi: the integrand term
// E[M * 2 grad_psi_x D . grad_x D] plus, for psi-dependent measures, the
// measure-derivative correction from the product rule.
Vec penalty_gradient(const SGPProblem& problem, const Vec& psi, const Vec& theta,
                     const McConfig& mc);

// Monte-Carlo drift of the simultaneous descent dynamics:
//   psi_dot   = E_{p_d}[grad_psi D] - E_{p_theta}[grad_psi D]
//               - (rho/2) d/dpsi E_mu[||grad_x D||^2]
//   theta_dot = E_z[grad_theta G^T grad_x D(G(z))]
// Deterministic given mc.seed.
std::pair<Vec, Vec> vector_field(const SGPProblem& problem, const Vec& psi,
                                 const Vec& theta, const McConfig& mc);

enum class Verdict { Pass, Fail, Inconclusive };
std::string to_string(Verdict v);

struct AssumptionReport {
    struct Entry {
        std::string name;
        Verdict verdict = Verdict::Inconclusive;
        double witness_value = 0.0;
        Vec witness_point;
        std::string note;
    };
    std::vector<Entry> entries;
    const Entry* find(const std::string& name) const;
};

struct CheckConfig {
    int n = 100000;
    std::uint64_t seed = 0;
    double tol = 1e-4;
    int probe_directions = 8;
    double probe_radius = 1e-2;
};

// Samples-based verdicts for A1, A3, A6a-mass, A6b, A6c. A2, A4, A5 quantify
// over neighborhoods and Hessian nullspaces and are reported inconclusive.
AssumptionReport check_assumptions(const SGPProblem& problem, const Vec& psi_star,
                                   const Vec& theta_star, const CheckConfig& cfg);

// --- Concrete players --------------------------------------------------------

// D(x; psi) = psi . x (the Dirac GAN critic when dims are 1).
std::shared_ptr<const Discriminator> linear_discriminator(int dim);
// D(x; psi) = psi * x^2 on the line.
std::shared_ptr<const Discriminator> quadratic_discriminator();
// G(z; theta) = theta, ignoring z.
std::shared_ptr<const Generator> const_generator(int dim);
// G(z; theta) = theta * z on the line (p_theta = U(-|theta|,|theta|) with
// z ~ U(-1,1)).
std::shared_ptr<const Generator> scale_generator();

std::shared_ptr<const Discriminator> mlp_discriminator(Mlp net);
std::shared_ptr<const Generator> mlp_generator(Mlp net);

PointSampler dirac_sampler(const Vec& point);
PointSampler uniform1d_sampler(double a, double b);
PointSampler gaussian_sampler(int dim);

// The two toy problems as full SGP quadruples. The Dirac GAN takes its
// penalty measure explicitly (delta_0 with unit mass reproduces the default);
// the quadratic GAN penalty defaults to mu_theta = U(-|theta|,|theta|).
SGPProblem make_dirac_gan_problem(double rho, FiniteMeasure penalty);
SGPProblem make_quadratic_gan_problem(double rho);
SGPProblem make_quadratic_gan_problem(double rho, FiniteMeasure penalty);

} // namespace sgp::dynamics
