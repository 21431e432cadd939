#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "sgp/dynamics.hpp"

namespace sgp::stability {

using sgp::Mat;
using sgp::Vec;

// A vector field evaluated with an explicit RNG seed, so that +-h probes can
// share random numbers.
using SeededField = std::function<Vec(const Vec&, std::uint64_t seed)>;

// Central-difference Jacobian, column j = (f(x+h e_j) - f(x-h e_j)) / (2h),
// all evaluations with the same seed. h <= 0 picks 1e-5 * max(1, ||x||_inf).
Mat jacobian_fd(const SeededField& field, const Vec& x0, double h = 0.0,
                std::uint64_t seed = 0);

enum class StabilityVerdict { Stable, Marginal, Unstable };
std::string to_string(StabilityVerdict v);

struct SpectralReport {
    Mat jacobian;
    std::vector<std::complex<double>> eigenvalues;
    double max_real_part = 0.0;
    StabilityVerdict verdict = StabilityVerdict::Marginal;
};

// Full spectrum for dimension <= 512 (dense Schur path). Larger matrices
// report only leading eigenvalues found by shifted inverse iteration from the
// right Gershgorin edge. Verdict: stable iff max real part < -tol, marginal
// iff |max real part| <= tol.
SpectralReport spectrum(const Mat& J, double tol = 1e-7);

struct BlockReport {
    Mat Q; // E_{mu*}[grad_psi_x D grad_psi_x^T D], psi_dim x psi_dim
    Mat R; // d/dtheta E_{p_theta}[grad_psi D] at theta*, psi_dim x theta_dim
    double residual_KDD = 0.0;     // ||J_psi_psi + rho Q||_F
    double residual_KGG = 0.0;     // ||J_theta_theta||_F
    double residual_offdiag = 0.0; // off-block deviation from (-R, R^T)
    bool nullspace_inclusion = false; // N(Q) subset N(R^T)
    double rho = 0.0;
};

// MC estimates of the theorem's Q and R blocks, with residuals of the full
// finite-difference Jacobian against [[-rho Q, -R], [R^T, 0]].
BlockReport qr_blocks(const dynamics::SGPProblem& problem, const Vec& psi_star,
                      const Vec& theta_star, const dynamics::McConfig& mc,
                      double inclusion_tol = 1e-6);

// Spectrum of the projected system J' = [[-rho L_D+, -T_D^T R T_G],
// [T_G^T R^T T_D, 0]], dropping eigendirections of Q and R^T R below the
// relative threshold 1e-6. Requires nullspace_inclusion.
SpectralReport projected_spectrum(const BlockReport& block, double rho);

} // namespace sgp::stability
