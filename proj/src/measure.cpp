#include "sgp/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace sgp {

namespace {

double param_value(const Vec& psi, const Vec& theta, ParamComponent c) {
    return c.block == ParamComponent::Block::Psi ? psi(c.index) : theta(c.index);
}

void set_param(Vec& psi, Vec& theta, ParamComponent c, double v) {
    if (c.block == ParamComponent::Block::Psi)
        psi(c.index) = v;
    else
        theta(c.index) = v;
}

std::string point_string(const Vec& x) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ")";
    return os.str();
}

std::function<bool(const Vec&, const Vec&, const Vec&)> everywhere() {
    return [](const Vec&, const Vec&, const Vec&) { return true; };
}

} // namespace

double normalized_mean(const FiniteMeasure& mu, const Vec& psi, const Vec& theta,
                       const std::function<double(const Vec&)>& phi, int n,
                       std::uint64_t seed) {
    if (n < 1) throw ConfigError("expectation needs n >= 1");
    Mat xs = mu.sample(psi, theta, n, seed);
    double acc = 0.0;
    for (int j = 0; j < xs.cols(); ++j) {
        const double v = phi(xs.col(j));
        if (!std::isfinite(v))
            throw NumericalFailure("non-finite integrand at " + point_string(xs.col(j)));
        acc += v;
    }
    return acc / static_cast<double>(n);
}

double expect(const FiniteMeasure& mu, const Vec& psi, const Vec& theta,
              const std::function<double(const Vec&)>& phi, int n, std::uint64_t seed) {
    const double m = mu.mass(psi, theta);
    if (!std::isfinite(m)) throw NumericalFailure("non-finite mass");
    return m * normalized_mean(mu, psi, theta, phi, n, seed);
}

double differentiate_expectation(const FiniteMeasure& mu, const Vec& psi, const Vec& theta,
                                 const std::function<double(const Vec&)>& phi,
                                 ParamComponent component, int n, std::uint64_t seed,
                                 DiffMode mode) {
    const bool depends = component.block == ParamComponent::Block::Psi
                             ? mu.depends_on_psi
                             : mu.depends_on_theta;
    if (!depends) return 0.0;

    const double p0 = param_value(psi, theta, component);
    const double h = 1e-4 * std::max(1.0, std::abs(p0));

    std::shared_ptr<const WeakDerivativeTriple> triple;
    if (mode != DiffMode::FiniteDifference && mu.weak_derivative) {
        if (mode == DiffMode::Analytic) {
            triple = mu.weak_derivative(component, psi, theta);
        } else {
            try {
                triple = mu.weak_derivative(component, psi, theta);
            } catch (const NoWeakDerivative&) {
                // The integral may still be differentiable even when the
                // measure is not; fall through to finite differences.
            }
        }
    }
    if (mode == DiffMode::Analytic && !triple)
        throw NoWeakDerivative("no analytic weak derivative for requested component");

    if (triple) {
        // Product rule on mu = M * P: (d/dp) int phi dmu = M' E_P[phi]
        // + M c (E_{P+}[phi] - E_{P-}[phi]). The mass is a deterministic
        // function, so its central difference carries no MC noise.
        Vec psi_p = psi, theta_p = theta, psi_m = psi, theta_m = theta;
        set_param(psi_p, theta_p, component, p0 + h);
        set_param(psi_m, theta_m, component, p0 - h);
        const double mprime = (mu.mass(psi_p, theta_p) - mu.mass(psi_m, theta_m)) / (2.0 * h);
        const double m = mu.mass(psi, theta);

        double out = 0.0;
        if (mprime != 0.0)
            out += mprime * normalized_mean(mu, psi, theta, phi, n, seed);
        if (m != 0.0 && triple->c != 0.0) {
            const double ep = normalized_mean(triple->plus, psi, theta, phi, n, mix_seed(seed, 11));
            const double em = normalized_mean(triple->minus, psi, theta, phi, n, mix_seed(seed, 12));
            out += m * triple->c * (ep - em);
        }
        return out;
    }

    // Central difference with common random numbers on both sides.
    Vec psi_p = psi, theta_p = theta, psi_m = psi, theta_m = theta;
    set_param(psi_p, theta_p, component, p0 + h);
    set_param(psi_m, theta_m, component, p0 - h);
    const double fp = expect(mu, psi_p, theta_p, phi, n, seed);
    const double fm = expect(mu, psi_m, theta_m, phi, n, seed);
    return (fp - fm) / (2.0 * h);
}

FiniteMeasure dirac(const Vec& point, double mass) {
    FiniteMeasure mu;
    mu.mass = [mass](const Vec&, const Vec&) { return mass; };
    mu.sample = [point](const Vec&, const Vec&, int n, std::uint64_t) {
        Mat xs(point.size(), n);
        xs.colwise() = point;
        return xs;
    };
    mu.in_support = [point](const Vec& x, const Vec&, const Vec&) {
        return (x - point).norm() <= 1e-6;
    };
    return mu;
}

FiniteMeasure uniform1d(double a, double b, double mass) {
    if (a == b) return dirac(Vec::Constant(1, a), mass);
    const double lo = std::min(a, b), hi = std::max(a, b);
    FiniteMeasure mu;
    mu.mass = [mass](const Vec&, const Vec&) { return mass; };
    mu.sample = [lo, hi](const Vec&, const Vec&, int n, std::uint64_t seed) {
        auto rng = make_rng(seed);
        auto u = stratified_u01(n, rng);
        Mat xs(1, n);
        for (int j = 0; j < n; ++j) xs(0, j) = lo + (hi - lo) * u[static_cast<std::size_t>(j)];
        return xs;
    };
    mu.in_support = [lo, hi](const Vec& x, const Vec&, const Vec&) {
        return x.size() == 1 && x(0) >= lo - 1e-6 && x(0) <= hi + 1e-6;
    };
    return mu;
}

FiniteMeasure with_mass(FiniteMeasure base,
                        std::function<double(const Vec&, const Vec&)> mass_fn,
                        bool depends_on_psi, bool depends_on_theta) {
    FiniteMeasure mu = std::move(base);
    mu.mass = std::move(mass_fn);
    mu.depends_on_psi = depends_on_psi;
    mu.depends_on_theta = depends_on_theta;
    // The normalized part is parameter-free, so P' = 0; a zero triple keeps
    // the analytic differentiation path on the M' term only.
    FiniteMeasure normalized = mu;
    normalized.mass = [](const Vec&, const Vec&) { return 1.0; };
    normalized.depends_on_psi = normalized.depends_on_theta = false;
    normalized.weak_derivative = nullptr;
    mu.weak_derivative = [normalized](ParamComponent, const Vec&, const Vec&) {
        auto t = std::make_shared<WeakDerivativeTriple>();
        t->c = 0.0;
        t->plus = normalized;
        t->minus = normalized;
        return t;
    };
    return mu;
}

FiniteMeasure uniform_0_theta() {
    FiniteMeasure mu;
    mu.mass = [](const Vec&, const Vec&) { return 1.0; };
    mu.depends_on_theta = true;
    mu.sample = [](const Vec&, const Vec& theta, int n, std::uint64_t seed) {
        auto rng = make_rng(seed);
        auto u = stratified_u01(n, rng);
        Mat xs(1, n);
        for (int j = 0; j < n; ++j) xs(0, j) = theta(0) * u[static_cast<std::size_t>(j)];
        return xs;
    };
    mu.in_support = [](const Vec& x, const Vec&, const Vec& theta) {
        const double lo = std::min(0.0, theta(0)), hi = std::max(0.0, theta(0));
        return x(0) >= lo - 1e-6 && x(0) <= hi + 1e-6;
    };
    mu.weak_derivative = [](ParamComponent c, const Vec&, const Vec& theta)
        -> std::shared_ptr<const WeakDerivativeTriple> {
        if (c.block != ParamComponent::Block::Theta || c.index != 0) return nullptr;
        const double t0 = theta(0);
        if (t0 == 0.0) throw NoWeakDerivative("U(0,theta) triple undefined at theta = 0");
        auto t = std::make_shared<WeakDerivativeTriple>();
        t->c = 1.0 / t0;
        t->plus = dirac(Vec::Constant(1, t0));
        t->minus = uniform1d(0.0, t0);
        return t;
    };
    return mu;
}

FiniteMeasure uniform_sym_theta() {
    FiniteMeasure mu;
    mu.mass = [](const Vec&, const Vec&) { return 1.0; };
    mu.depends_on_theta = true;
    mu.sample = [](const Vec&, const Vec& theta, int n, std::uint64_t seed) {
        const double a = std::abs(theta(0));
        auto rng = make_rng(seed);
        auto u = stratified_u01(n, rng);
        Mat xs(1, n);
        for (int j = 0; j < n; ++j) xs(0, j) = a * (2.0 * u[static_cast<std::size_t>(j)] - 1.0);
        return xs;
    };
    mu.in_support = [](const Vec& x, const Vec&, const Vec& theta) {
        return std::abs(x(0)) <= std::abs(theta(0)) + 1e-6;
    };
    return mu;
}

FiniteMeasure translated_dirac() {
    FiniteMeasure mu;
    mu.mass = [](const Vec&, const Vec&) { return 1.0; };
    mu.depends_on_psi = true;
    mu.sample = [](const Vec& psi, const Vec&, int n, std::uint64_t) {
        Mat xs(1, n);
        xs.setConstant(psi(0));
        return xs;
    };
    mu.in_support = [](const Vec& x, const Vec& psi, const Vec&) {
        return std::abs(x(0) - psi(0)) <= 1e-6;
    };
    mu.weak_derivative = [](ParamComponent, const Vec&, const Vec&)
        -> std::shared_ptr<const WeakDerivativeTriple> {
        throw NoWeakDerivative("translated Dirac family has no weak derivative");
    };
    return mu;
}

Table1Kind table1_kind_from_string(const std::string& name) {
    if (name == "pg") return Table1Kind::pg;
    if (name == "pd") return Table1Kind::pd;
    if (name == "gp") return Table1Kind::gp;
    if (name == "mid") return Table1Kind::mid;
    if (name == "g_anc" || name == "ganc") return Table1Kind::g_anc;
    throw ConfigError("unknown penalty measure kind: " + name);
}

std::string to_string(Table1Kind kind) {
    switch (kind) {
        case Table1Kind::pg: return "pg";
        case Table1Kind::pd: return "pd";
        case Table1Kind::gp: return "gp";
        case Table1Kind::mid: return "mid";
        case Table1Kind::g_anc: return "g_anc";
    }
    return "?";
}

FiniteMeasure make_table1_measure(Table1Kind kind, const std::optional<Vec>& anchor,
                                  PointSampler data_sampler, GenSampler gen_sampler) {
    if (kind == Table1Kind::g_anc && !anchor)
        throw ConfigError("g_anc measure requires an anchor point");

    FiniteMeasure mu;
    mu.mass = [](const Vec&, const Vec&) { return 1.0; };
    mu.depends_on_theta = kind != Table1Kind::pd;
    mu.in_support = everywhere();
    const Vec anc = anchor ? *anchor : Vec();
    mu.sample = [kind, anc, data_sampler, gen_sampler](const Vec&, const Vec& theta, int n,
                                                       std::uint64_t seed) -> Mat {
        switch (kind) {
            case Table1Kind::pd:
                return data_sampler(n, mix_seed(seed, 1));
            case Table1Kind::pg:
                return gen_sampler(theta, n, mix_seed(seed, 2));
            case Table1Kind::mid: {
                Mat xd = data_sampler(n, mix_seed(seed, 1));
                Mat xg = gen_sampler(theta, n, mix_seed(seed, 2));
                return 0.5 * (xd + xg);
            }
            case Table1Kind::gp: {
                Mat xd = data_sampler(n, mix_seed(seed, 1));
                Mat xg = gen_sampler(theta, n, mix_seed(seed, 2));
                auto rng = make_rng(mix_seed(seed, 3));
                std::uniform_real_distribution<double> u(0.0, 1.0);
                Mat xs(xd.rows(), n);
                for (int j = 0; j < n; ++j) {
                    const double a = u(rng);
                    xs.col(j) = a * xd.col(j) + (1.0 - a) * xg.col(j);
                }
                return xs;
            }
            case Table1Kind::g_anc: {
                Mat xg = gen_sampler(theta, n, mix_seed(seed, 2));
                auto rng = make_rng(mix_seed(seed, 3));
                std::uniform_real_distribution<double> u(0.0, 1.0);
                Mat xs(xg.rows(), n);
                for (int j = 0; j < n; ++j) {
                    const double a = u(rng);
                    xs.col(j) = a * anc + (1.0 - a) * xg.col(j);
                }
                return xs;
            }
        }
        throw ConfigError("unreachable penalty kind");
    };
    return mu;
}

} // namespace sgp
