#include "sgp/dynamics.hpp"

#include <cmath>

#include "sgp/rng.hpp"

namespace sgp::dynamics {

Eigen::RowVectorXd Discriminator::values(const Mat& X, const Vec& psi) const {
    Eigen::RowVectorXd out(X.cols());
    for (int j = 0; j < X.cols(); ++j) out(j) = value(X.col(j), psi);
    return out;
}

Vec Discriminator::sum_grad_psi(const Mat& X, const Vec& psi) const {
    Vec acc = Vec::Zero(psi_dim());
    for (int j = 0; j < X.cols(); ++j) acc += grad_psi(X.col(j), psi);
    return acc;
}

Mat Discriminator::grad_x_batch(const Mat& X, const Vec& psi) const {
    Mat out(x_dim(), X.cols());
    for (int j = 0; j < X.cols(); ++j) out.col(j) = grad_x(X.col(j), psi);
    return out;
}

Vec Discriminator::squared_grad_param_grad(const Mat& X, const Vec& psi,
                                           double* value) const {
    const int n = static_cast<int>(X.cols());
    Vec acc = Vec::Zero(psi_dim());
    double val = 0.0;
    for (int j = 0; j < n; ++j) {
        const Vec gx = grad_x(X.col(j), psi);
        acc += 2.0 * (mixed_grad(X.col(j), psi) * gx);
        val += gx.squaredNorm();
    }
    if (value) *value = val / n;
    return acc / n;
}

Vec penalty_gradient(const SGPProblem& problem, const Vec& psi, const Vec& theta,
                     const McConfig& mc) {
    const FiniteMeasure& mu = problem.penalty;
    const double mass = mu.mass(psi, theta);
    Mat X = mu.sample(psi, theta, mc.n, mix_seed(mc.seed, 3));
    Vec grad = mass * problem.D->squared_grad_param_grad(X, psi, nullptr);
    if (!grad.allFinite()) throw NumericalFailure("non-finite penalty gradient");

    if (mu.depends_on_psi) {
        // Product rule: the integrand term above plus the derivative of the
        // measure itself, component by component, with phi frozen at psi.
        const Vec psi0 = psi;
        const auto& D = *problem.D;
        auto phi = [&](const Vec& x) { return D.grad_x(x, psi0).squaredNorm(); };
        for (int j = 0; j < psi.size(); ++j) {
            grad(j) += differentiate_expectation(
                mu, psi, theta, phi, {ParamComponent::Block::Psi, j}, mc.n,
                mix_seed(mc.seed, 4));
        }
    }
    return grad;
}

std::pair<Vec, Vec> vector_field(const SGPProblem& problem, const Vec& psi,
                                 const Vec& theta, const McConfig& mc) {
    const int n = mc.n;
    if (n < 1) throw ConfigError("vector_field needs mc.n >= 1");

    Mat Xd = problem.data(n, mix_seed(mc.seed, 1));
    Mat Z = problem.latent(n, mix_seed(mc.seed, 2));
    Mat Xg = problem.G->forward(Z, theta);

    Vec psi_dot = (problem.D->sum_grad_psi(Xd, psi) - problem.D->sum_grad_psi(Xg, psi)) / n;
    psi_dot -= 0.5 * problem.rho * penalty_gradient(problem, psi, theta, mc);

    Mat gx = problem.D->grad_x_batch(Xg, psi);
    Vec theta_dot = problem.G->vjp_theta(Z, theta, gx) / n;

    if (!psi_dot.allFinite() || !theta_dot.allFinite())
        throw NumericalFailure("non-finite drift estimate");
    return {psi_dot, theta_dot};
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

const AssumptionReport::Entry* AssumptionReport::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

namespace {

Vec random_unit(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = g(rng);
    const double nrm = v.norm();
    return nrm > 0 ? Vec(v / nrm) : Vec(Vec::Unit(dim, 0));
}

// max |D(x; psi)| over the columns of X, with the attaining point.
std::pair<double, Vec> max_abs_value(const Discriminator& D, const Mat& X, const Vec& psi) {
    Eigen::RowVectorXd vals = D.values(X, psi).cwiseAbs();
    int j = 0;
    const double v = vals.maxCoeff(&j);
    return {v, X.col(j)};
}

} // namespace

AssumptionReport check_assumptions(const SGPProblem& problem, const Vec& psi_star,
                                   const Vec& theta_star, const CheckConfig& cfg) {
    AssumptionReport report;
    const auto& D = *problem.D;

    { // A1: D(.; psi*) vanishes on supp(p_d).
        Mat X = problem.data(cfg.n, mix_seed(cfg.seed, 1));
        auto [v, x] = max_abs_value(D, X, psi_star);
        report.entries.push_back({"A1", v <= cfg.tol ? Verdict::Pass : Verdict::Fail, v, x,
                                  "max |D| over data samples"});
    }

    report.entries.push_back({"A2", Verdict::Inconclusive, 0.0, {},
                              "not machine-checkable: quantifies over Hessian nullspaces"});

    { // A3: D(.; psi*) vanishes on supp(p_theta) for theta near theta*.
        double worst = 0.0;
        Vec witness;
        auto rng = make_rng(mix_seed(cfg.seed, 2));
        for (int k = 0; k < cfg.probe_directions; ++k) {
            Vec theta = theta_star + cfg.probe_radius * random_unit((int)theta_star.size(), rng);
            Mat Z = problem.latent(cfg.n, mix_seed(cfg.seed, 300 + k));
            Mat X = problem.G->forward(Z, theta);
            auto [v, x] = max_abs_value(D, X, psi_star);
            if (v >= worst) { worst = v; witness = x; }
        }
        report.entries.push_back({"A3", worst <= cfg.tol ? Verdict::Pass : Verdict::Fail,
                                  worst, witness,
                                  "max |D| over generator samples at perturbed theta"});
    }

    report.entries.push_back({"A4", Verdict::Inconclusive, 0.0, {},
                              "not machine-checkable: isolation of equilibria"});
    report.entries.push_back({"A5", Verdict::Inconclusive, 0.0, {},
                              "strong version; the weak A6 variants are checked instead"});

    { // A6a (mass part): mass finite, nonnegative, bounded on a probe set.
        double max_mass = 0.0, min_mass = std::numeric_limits<double>::infinity();
        bool ok = true;
        auto rng = make_rng(mix_seed(cfg.seed, 3));
        for (int k = 0; k <= cfg.probe_directions; ++k) {
            Vec psi = psi_star, theta = theta_star;
            if (k > 0) {
                psi += cfg.probe_radius * random_unit((int)psi_star.size(), rng);
                theta += cfg.probe_radius * random_unit((int)theta_star.size(), rng);
            }
            const double m = problem.penalty.mass(psi, theta);
            if (!std::isfinite(m) || m < 0.0) ok = false;
            max_mass = std::max(max_mass, m);
            min_mass = std::min(min_mass, m);
        }
        report.entries.push_back({"A6a-mass", ok ? Verdict::Pass : Verdict::Fail, max_mass, {},
                                  "mass bounded and nonnegative on probe set"});
    }

    { // A6b: E_{mu*}[grad_psi_x D grad_psi_x^T D] positive definite, or
      // support inclusion supp(p_d) subset supp(mu*).
        const int nq = std::min(cfg.n, 20000);
        Mat X = problem.penalty.sample(psi_star, theta_star, nq, mix_seed(cfg.seed, 4));
        const double mass = problem.penalty.mass(psi_star, theta_star);
        Mat Q = Mat::Zero(D.psi_dim(), D.psi_dim());
        for (int j = 0; j < nq; ++j) {
            Mat mg = D.mixed_grad(X.col(j), psi_star);
            Q += mg * mg.transpose();
        }
        Q *= mass / nq;
        Eigen::SelfAdjointEigenSolver<Mat> es(Q);
        const double lmin = es.eigenvalues().minCoeff();
        Verdict v = lmin > cfg.tol ? Verdict::Pass : Verdict::Fail;
        std::string note = "smallest eigenvalue of Q";
        if (v == Verdict::Fail) {
            Mat Xd = problem.data(std::min(cfg.n, 2000), mix_seed(cfg.seed, 5));
            bool included = true;
            for (int j = 0; j < Xd.cols() && included; ++j)
                included = problem.penalty.in_support(Xd.col(j), psi_star, theta_star);
            if (included) {
                v = Verdict::Pass;
                note += "; passed via support inclusion supp(p_d) in supp(mu*)";
            }
        }
        report.entries.push_back({"A6b", v, lmin, {}, note});
    }

    { // A6c: supp(mu_theta) inside V = {x : grad_x D(x; psi*) = 0} near theta*.
        double worst = 0.0;
        Vec witness;
        auto rng = make_rng(mix_seed(cfg.seed, 6));
        for (int k = 0; k <= cfg.probe_directions; ++k) {
            Vec theta = theta_star;
            if (k > 0)
                theta += cfg.probe_radius * random_unit((int)theta_star.size(), rng);
            Mat X = problem.penalty.sample(psi_star, theta, cfg.n, mix_seed(cfg.seed, 600 + k));
            Mat gx = D.grad_x_batch(X, psi_star);
            int j = 0;
            const double v = gx.colwise().norm().maxCoeff(&j);
            if (v >= worst) { worst = v; witness = X.col(j); }
        }
        report.entries.push_back({"A6c", worst <= cfg.tol ? Verdict::Pass : Verdict::Fail,
                                  worst, witness,
                                  "max ||grad_x D|| over penalty samples near theta*"});
    }

    return report;
}

// --- Concrete players --------------------------------------------------------

namespace {

struct LinearD final : Discriminator {
    int dim;
    explicit LinearD(int d) : dim(d) {}
    int psi_dim() const override { return dim; }
    int x_dim() const override { return dim; }
    double value(const Vec& x, const Vec& psi) const override { return psi.dot(x); }
    Vec grad_x(const Vec&, const Vec& psi) const override { return psi; }
    Vec grad_psi(const Vec& x, const Vec&) const override { return x; }
    Mat mixed_grad(const Vec&, const Vec&) const override {
        return Mat::Identity(dim, dim);
    }
};

struct QuadraticD final : Discriminator {
    int psi_dim() const override { return 1; }
    int x_dim() const override { return 1; }
    double value(const Vec& x, const Vec& psi) const override {
        return psi(0) * x(0) * x(0);
    }
    Vec grad_x(const Vec& x, const Vec& psi) const override {
        return Vec::Constant(1, 2.0 * psi(0) * x(0));
    }
    Vec grad_psi(const Vec& x, const Vec&) const override {
        return Vec::Constant(1, x(0) * x(0));
    }
    Mat mixed_grad(const Vec& x, const Vec&) const override {
        return Mat::Constant(1, 1, 2.0 * x(0));
    }
};

struct ConstG final : Generator {
    int dim;
    explicit ConstG(int d) : dim(d) {}
    int theta_dim() const override { return dim; }
    int z_dim() const override { return dim; }
    int x_dim() const override { return dim; }
    Mat forward(const Mat& Z, const Vec& theta) const override {
        Mat out(dim, Z.cols());
        out.colwise() = theta;
        return out;
    }
    Vec vjp_theta(const Mat&, const Vec&, const Mat& adj) const override {
        return adj.rowwise().sum();
    }
};

struct ScaleG final : Generator {
    int theta_dim() const override { return 1; }
    int z_dim() const override { return 1; }
    int x_dim() const override { return 1; }
    Mat forward(const Mat& Z, const Vec& theta) const override { return theta(0) * Z; }
    Vec vjp_theta(const Mat& Z, const Vec&, const Mat& adj) const override {
        return Vec::Constant(1, (adj.array() * Z.array()).sum());
    }
};

struct MlpD final : Discriminator {
    Mlp net;
    explicit MlpD(Mlp n) : net(std::move(n)) {}
    Mlp with(const Vec& psi) const {
        Mlp m = net;
        m.set_params(psi);
        return m;
    }
    int psi_dim() const override { return net.param_count(); }
    int x_dim() const override { return net.input_dim(); }
    double value(const Vec& x, const Vec& psi) const override {
        return with(psi).forward(x)(0, 0);
    }
    Vec grad_x(const Vec& x, const Vec& psi) const override {
        return with(psi).grad_x(x).col(0);
    }
    Vec grad_psi(const Vec& x, const Vec& psi) const override {
        return with(psi).grad_params(x, Mat::Ones(1, 1));
    }
    Mat mixed_grad(const Vec& x, const Vec& psi) const override {
        return with(psi).mixed_grad(x);
    }
    Eigen::RowVectorXd values(const Mat& X, const Vec& psi) const override {
        return with(psi).forward(X).row(0);
    }
    Vec sum_grad_psi(const Mat& X, const Vec& psi) const override {
        return with(psi).grad_params(X, Mat::Ones(1, X.cols()));
    }
    Mat grad_x_batch(const Mat& X, const Vec& psi) const override {
        return with(psi).grad_x(X);
    }
    Vec squared_grad_param_grad(const Mat& X, const Vec& psi, double* value) const override {
        return with(psi).squared_grad_param_grad(X, value);
    }
};

struct MlpG final : Generator {
    Mlp net;
    explicit MlpG(Mlp n) : net(std::move(n)) {}
    Mlp with(const Vec& theta) const {
        Mlp m = net;
        m.set_params(theta);
        return m;
    }
    int theta_dim() const override { return net.param_count(); }
    int z_dim() const override { return net.input_dim(); }
    int x_dim() const override { return net.output_dim(); }
    Mat forward(const Mat& Z, const Vec& theta) const override {
        return with(theta).forward(Z);
    }
    Vec vjp_theta(const Mat& Z, const Vec& theta, const Mat& adj) const override {
        return with(theta).grad_params(Z, adj);
    }
};

} // namespace

std::shared_ptr<const Discriminator> linear_discriminator(int dim) {
    return std::make_shared<LinearD>(dim);
}
std::shared_ptr<const Discriminator> quadratic_discriminator() {
    return std::make_shared<QuadraticD>();
}
std::shared_ptr<const Generator> const_generator(int dim) {
    return std::make_shared<ConstG>(dim);
}
std::shared_ptr<const Generator> scale_generator() { return std::make_shared<ScaleG>(); }
std::shared_ptr<const Discriminator> mlp_discriminator(Mlp net) {
    return std::make_shared<MlpD>(std::move(net));
}
std::shared_ptr<const Generator> mlp_generator(Mlp net) {
    return std::make_shared<MlpG>(std::move(net));
}

PointSampler dirac_sampler(const Vec& point) {
    return [point](int n, std::uint64_t) {
        Mat out(point.size(), n);
        out.colwise() = point;
        return out;
    };
}

PointSampler uniform1d_sampler(double a, double b) {
    return [a, b](int n, std::uint64_t seed) {
        auto rng = make_rng(seed);
        auto u = stratified_u01(n, rng);
        Mat out(1, n);
        for (int j = 0; j < n; ++j) out(0, j) = a + (b - a) * u[static_cast<std::size_t>(j)];
        return out;
    };
}

PointSampler gaussian_sampler(int dim) {
    return [dim](int n, std::uint64_t seed) {
        auto rng = make_rng(seed);
        std::normal_distribution<double> g(0.0, 1.0);
        Mat out(dim, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < dim; ++i) out(i, j) = g(rng);
        return out;
    };
}

SGPProblem make_dirac_gan_problem(double rho, FiniteMeasure penalty) {
    SGPProblem p;
    p.D = linear_discriminator(1);
    p.G = const_generator(1);
    p.data = dirac_sampler(Vec::Zero(1));
    p.latent = gaussian_sampler(1);
    p.penalty = std::move(penalty);
    p.rho = rho;
    return p;
}

SGPProblem make_quadratic_gan_problem(double rho) {
    return make_quadratic_gan_problem(rho, uniform_sym_theta());
}

SGPProblem make_quadratic_gan_problem(double rho, FiniteMeasure penalty) {
    SGPProblem p;
    p.D = quadratic_discriminator();
    p.G = scale_generator();
    p.data = uniform1d_sampler(-1.0, 1.0);
    p.latent = uniform1d_sampler(-1.0, 1.0);
    p.penalty = std::move(penalty);
    p.rho = rho;
    return p;
}

} // namespace sgp::dynamics
