#include "sgp/stability.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <optional>

#include "sgp/rng.hpp"

namespace sgp::stability {

Mat jacobian_fd(const SeededField& field, const Vec& x0, double h, std::uint64_t seed) {
    if (h <= 0.0) h = 1e-5 * std::max(1.0, x0.lpNorm<Eigen::Infinity>());
    const int n = static_cast<int>(x0.size());
    Mat J;
    for (int j = 0; j < n; ++j) {
        Vec xp = x0, xm = x0;
        xp(j) += h;
        xm(j) -= h;
        Vec col = (field(xp, seed) - field(xm, seed)) / (2.0 * h);
        if (J.size() == 0) J.resize(col.size(), n);
        if (!col.allFinite()) throw NumericalFailure("non-finite Jacobian column");
        J.col(j) = col;
    }
    return J;
}

std::string to_string(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::Stable: return "stable";
        case StabilityVerdict::Marginal: return "marginal";
        case StabilityVerdict::Unstable: return "unstable";
    }
    return "?";
}

namespace {

StabilityVerdict classify(double max_real, double tol) {
    if (max_real < -tol) return StabilityVerdict::Stable;
    if (std::abs(max_real) <= tol) return StabilityVerdict::Marginal;
    return StabilityVerdict::Unstable;
}

// Inverse iteration around a complex shift; returns the eigenvalue nearest
// the shift, or nullopt on breakdown.
std::optional<std::complex<double>> inverse_iterate(const Mat& J, std::complex<double> shift,
                                                    int iters = 200) {
    const int n = static_cast<int>(J.rows());
    Eigen::MatrixXcd A = J.cast<std::complex<double>>();
    A.diagonal().array() -= shift;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    auto rng = make_rng(12345);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = std::complex<double>(g(rng), g(rng));
    v.normalize();
    std::complex<double> lambda = shift;
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXcd w = lu.solve(v);
        const double nrm = w.norm();
        if (!std::isfinite(nrm) || nrm == 0.0) return std::nullopt;
        w /= nrm;
        const std::complex<double> rayleigh = w.dot(J.cast<std::complex<double>>() * w);
        if (std::abs(rayleigh - lambda) < 1e-12 * std::max(1.0, std::abs(rayleigh))) {
            lambda = rayleigh;
            break;
        }
        lambda = rayleigh;
        v = w;
    }
    return lambda;
}

} // namespace

SpectralReport spectrum(const Mat& J, double tol) {
    if (J.rows() != J.cols()) throw ConfigError("spectrum needs a square matrix");
    SpectralReport rep;
    rep.jacobian = J;
    const int n = static_cast<int>(J.rows());

    if (n <= 512) {
        Eigen::EigenSolver<Mat> es(J, /*computeEigenvectors=*/false);
        if (es.info() != Eigen::Success)
            throw NumericalFailure("eigenvalue iteration did not converge");
        for (int i = 0; i < n; ++i) rep.eigenvalues.push_back(es.eigenvalues()(i));
    } else {
        // Desk-scale guarantee ends at 512; report leading eigenvalues via
        // shifted inverse iteration seeded at the right Gershgorin edge.
        double edge = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            double radius = J.row(i).cwiseAbs().sum() - std::abs(J(i, i));
            edge = std::max(edge, J(i, i) + radius);
        }
        for (double frac : {1.0, 0.5, 0.0}) {
            if (auto ev = inverse_iterate(J, {edge * frac, 0.0}))
                rep.eigenvalues.push_back(*ev);
        }
        if (rep.eigenvalues.empty())
            throw NumericalFailure("shifted inverse iteration failed");
    }

    rep.max_real_part = -std::numeric_limits<double>::infinity();
    for (const auto& ev : rep.eigenvalues)
        rep.max_real_part = std::max(rep.max_real_part, ev.real());
    rep.verdict = classify(rep.max_real_part, tol);
    return rep;
}

BlockReport qr_blocks(const dynamics::SGPProblem& problem, const Vec& psi_star,
                      const Vec& theta_star, const dynamics::McConfig& mc,
                      double inclusion_tol) {
    const auto& D = *problem.D;
    const int dpsi = D.psi_dim();
    const int dtheta = problem.G->theta_dim();
    BlockReport rep;
    rep.rho = problem.rho;

    // Q = E_{mu*}[grad_psi_x D grad_psi_x^T D], including the penalty mass.
    {
        Mat X = problem.penalty.sample(psi_star, theta_star, mc.n, mix_seed(mc.seed, 21));
        const double mass = problem.penalty.mass(psi_star, theta_star);
        rep.Q = Mat::Zero(dpsi, dpsi);
        for (int j = 0; j < X.cols(); ++j) {
            Mat mg = D.mixed_grad(X.col(j), psi_star);
            rep.Q += mg * mg.transpose();
        }
        rep.Q *= mass / mc.n;
        rep.Q = 0.5 * (rep.Q + rep.Q.transpose().eval());
    }

    // R = d/dtheta E_{p_theta}[grad_psi D] at theta*, by central differences
    // over theta with a frozen latent batch.
    {
        Mat Z = problem.latent(mc.n, mix_seed(mc.seed, 22));
        auto mean_grad_psi = [&](const Vec& theta) -> Vec {
            Mat X = problem.G->forward(Z, theta);
            return D.sum_grad_psi(X, psi_star) / mc.n;
        };
        const double h = 1e-5 * std::max(1.0, theta_star.lpNorm<Eigen::Infinity>());
        rep.R.resize(dpsi, dtheta);
        for (int j = 0; j < dtheta; ++j) {
            Vec tp = theta_star, tm = theta_star;
            tp(j) += h;
            tm(j) -= h;
            rep.R.col(j) = (mean_grad_psi(tp) - mean_grad_psi(tm)) / (2.0 * h);
        }
    }

    // Residuals of the full Jacobian against the predicted block form.
    {
        Vec x0(dpsi + dtheta);
        x0 << psi_star, theta_star;
        auto field = [&](const Vec& x, std::uint64_t seed) -> Vec {
            auto [pd, td] = dynamics::vector_field(problem, x.head(dpsi), x.tail(dtheta),
                                                   {mc.n, seed});
            Vec out(dpsi + dtheta);
            out << pd, td;
            return out;
        };
        Mat J = jacobian_fd(field, x0, 0.0, mc.seed);
        rep.residual_KDD = (J.topLeftCorner(dpsi, dpsi) + problem.rho * rep.Q).norm();
        rep.residual_KGG = J.bottomRightCorner(dtheta, dtheta).norm();
        const double off1 = (J.topRightCorner(dpsi, dtheta) + rep.R).norm();
        const double off2 = (J.bottomLeftCorner(dtheta, dpsi) - rep.R.transpose()).norm();
        rep.residual_offdiag = std::sqrt(off1 * off1 + off2 * off2);
    }

    // N(Q) subset N(R^T), tested on an orthonormal eigenbasis of the
    // numerical nullspace of Q.
    {
        Eigen::SelfAdjointEigenSolver<Mat> es(rep.Q);
        const double lmax = es.eigenvalues().maxCoeff();
        const double cut = 1e-6 * std::max(lmax, 0.0);
        rep.nullspace_inclusion = true;
        for (int i = 0; i < dpsi; ++i) {
            if (es.eigenvalues()(i) <= cut) {
                const double r = (rep.R.transpose() * es.eigenvectors().col(i)).norm();
                if (r > inclusion_tol * std::max(1.0, rep.R.norm()))
                    rep.nullspace_inclusion = false;
            }
        }
    }
    return rep;
}

SpectralReport projected_spectrum(const BlockReport& block, double rho) {
    if (!block.nullspace_inclusion)
        throw StructureViolation("N(Q) is not contained in N(R^T)");

    Eigen::SelfAdjointEigenSolver<Mat> esq(block.Q);
    const double qmax = esq.eigenvalues().maxCoeff();
    const double qcut = 1e-6 * std::max(qmax, 0.0);
    std::vector<int> dkeep;
    for (int i = 0; i < block.Q.rows(); ++i)
        if (esq.eigenvalues()(i) > qcut && esq.eigenvalues()(i) > 0.0) dkeep.push_back(i);

    Mat RtR = block.R.transpose() * block.R;
    Eigen::SelfAdjointEigenSolver<Mat> esr(RtR);
    const double rmax = esr.eigenvalues().maxCoeff();
    const double rcut = 1e-6 * std::max(rmax, 0.0);
    std::vector<int> gkeep;
    for (int i = 0; i < RtR.rows(); ++i)
        if (esr.eigenvalues()(i) > rcut && esr.eigenvalues()(i) > 0.0) gkeep.push_back(i);

    const int kd = static_cast<int>(dkeep.size());
    const int kg = static_cast<int>(gkeep.size());

    if (kd == 0 && kg == 0) {
        // Every direction is an equilibrium direction; nothing to project.
        SpectralReport rep;
        rep.jacobian = Mat::Zero(0, 0);
        rep.max_real_part = 0.0;
        rep.verdict = StabilityVerdict::Marginal;
        return rep;
    }

    Mat TD(block.Q.rows(), kd), TG(RtR.rows(), kg);
    Vec lamD(kd);
    for (int i = 0; i < kd; ++i) {
        TD.col(i) = esq.eigenvectors().col(dkeep[i]);
        lamD(i) = esq.eigenvalues()(dkeep[i]);
    }
    for (int i = 0; i < kg; ++i) TG.col(i) = esr.eigenvectors().col(gkeep[i]);

    if (kg == 0) {
        // Only the discriminator update survives: J' = -rho Lambda_D+.
        return spectrum(Mat((-rho * lamD).asDiagonal()));
    }
    if (kd == 0) {
        // Nullspace inclusion forces R = 0 here, so this cannot carry a
        // nonzero coupling block; reduces to the zero generator block.
        return spectrum(Mat::Zero(kg, kg));
    }

    Mat Jp(kd + kg, kd + kg);
    Jp.setZero();
    Jp.topLeftCorner(kd, kd) = (-rho * lamD).asDiagonal();
    Jp.topRightCorner(kd, kg) = -(TD.transpose() * block.R * TG);
    Jp.bottomLeftCorner(kg, kd) = TG.transpose() * block.R.transpose() * TD;
    return spectrum(Jp);
}

} // namespace sgp::stability
