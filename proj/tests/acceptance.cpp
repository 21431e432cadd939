// Acceptance suite: one pass/fail line per criterion. Exit code = number of
// failing criteria. Usage: acceptance <path-to-sgplab> [criterion ids...]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sgp/analytic.hpp"
#include "sgp/dynamics.hpp"
#include "sgp/gan2d.hpp"
#include "sgp/integrate.hpp"
#include "sgp/measure.hpp"
#include "sgp/net.hpp"
#include "sgp/rng.hpp"
#include "sgp/stability.hpp"

namespace fs = std::filesystem;
using namespace sgp;

namespace {

std::string g_sgplab;

struct Outcome {
    bool pass = true;
    std::string detail;
};

void fail(Outcome& o, const std::string& msg) {
    o.pass = false;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += msg;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

Vec v1(double a) { return Vec::Constant(1, a); }

// Distance between eigenvalue multisets (greedy nearest matching).
double eig_mismatch(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const auto& x : a) {
        std::size_t best = 0;
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double di = std::abs(x - b[i]);
            if (di < d) { d = di; best = i; }
        }
        worst = std::max(worst, d);
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return worst;
}

stability::SeededField toy_field(const dynamics::SGPProblem& p, int dpsi, int dtheta, int n) {
    return [&p, dpsi, dtheta, n](const Vec& x, std::uint64_t seed) -> Vec {
        auto [pd, td] = dynamics::vector_field(p, x.head(dpsi), x.tail(dtheta), {n, seed});
        Vec out(dpsi + dtheta);
        out << pd, td;
        return out;
    };
}

// ---- 1. closed-form Jacobian and spectrum of the Dirac GAN -------------------

Outcome criterion1() {
    Outcome o;
    for (double m : {0.5, 1.0, 2.0}) {
        for (double rho : {0.5, 1.0}) {
            dynamics::SGPProblem p = dynamics::make_dirac_gan_problem(
                rho, with_mass(dirac(Vec::Zero(1)),
                               [m](const Vec&, const Vec&) { return m; }, false, false));
            Vec x0 = Vec::Zero(2);
            Mat J = stability::jacobian_fd(toy_field(p, 1, 1, 1000), x0, 0.0, 0);
            Mat expected(2, 2);
            expected << -rho * m, -1.0, 1.0, 0.0;
            const double jerr = (J - expected).cwiseAbs().maxCoeff();
            if (jerr > 1e-6)
                fail(o, "Jacobian error " + fmt(jerr) + " at m=" + fmt(m) + " rho=" + fmt(rho));

            const std::complex<double> disc(rho * m * rho * m - 4.0, 0.0);
            const std::complex<double> s = std::sqrt(disc);
            std::vector<std::complex<double>> closed{(-rho * m + s) / 2.0, (-rho * m - s) / 2.0};
            const double eerr = eig_mismatch(stability::spectrum(J).eigenvalues, closed);
            if (eerr > 1e-9)
                fail(o, "eigenvalue error " + fmt(eerr) + " at m=" + fmt(m) + " rho=" + fmt(rho));
        }
    }
    return o;
}

// ---- 2. Lyapunov dissipation and basin radius --------------------------------

Outcome criterion2() {
    Outcome o;
    const analytic::ScalarField2 unit = [](double, double) { return 1.0; };
    const analytic::ScalarField2 zero = [](double, double) { return 0.0; };
    if (analytic::basin_radius(unit, zero, 10.0) != std::numeric_limits<double>::infinity())
        fail(o, "unit mass should give an infinite basin");

    const analytic::ScalarField2 bump = [](double p, double t) {
        return std::max(0.0, 1.0 - (p * p + t * t) / 4.0);
    };
    const analytic::ScalarField2 bump_grad = [](double p, double t) {
        return (p * p + t * t) < 4.0 ? -p / 2.0 : 0.0;
    };
    const double r = analytic::basin_radius(bump, bump_grad, 4.0);

    // Brute-force oracle: first radius (step 2e-4) whose circle minimum of
    // 2M + psi dM/dpsi goes negative, 20000 angles per circle.
    double oracle = std::numeric_limits<double>::quiet_NaN();
    for (double rr = 1.3; rr <= 1.5; rr += 2e-4) {
        double lo = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 20000; ++k) {
            const double a = 2.0 * M_PI * k / 20000;
            const double ps = rr * std::cos(a), th = rr * std::sin(a);
            lo = std::min(lo, 2.0 * bump(ps, th) + ps * bump_grad(ps, th));
        }
        if (lo < 0.0) { oracle = rr - 1e-4; break; }
    }
    if (!(std::abs(r - std::sqrt(2.0)) <= 1e-3))
        fail(o, "basin radius " + fmt(r) + " != sqrt(2) +- 1e-3");
    if (!(std::abs(r - oracle) <= 1e-3))
        fail(o, "basin radius " + fmt(r) + " disagrees with grid oracle " + fmt(oracle));

    // 20 trajectories from inside the basin: monotone L, convergence to 0.
    const double rho = 1.0;
    integrate::Field f = [&](const Vec& x) -> Vec {
        auto d = analytic::dirac_gan_field(x(0), x(1), rho, bump, bump_grad);
        Vec out(2);
        out << d[0], d[1];
        return out;
    };
    auto rng = make_rng(42);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    integrate::StopCondition stop;
    stop.target = Vec::Zero(2);
    stop.tol = 1e-4;
    int converged = 0;
    double worst_violation = 0.0;
    for (int t = 0; t < 20; ++t) {
        Vec x0(2);
        do {
            x0 << u(rng), u(rng);
        } while (x0.norm() > 1.2);
        integrate::Trajectory traj = integrate::integrate_ode(f, x0, 0.01, 200.0, stop);
        if (traj.terminal_reason == integrate::TerminalReason::Converged) ++converged;
        for (std::size_t k = 1; k < traj.states.size(); ++k) {
            const double inc =
                traj.states[k].squaredNorm() - traj.states[k - 1].squaredNorm();
            worst_violation = std::max(worst_violation, inc);
        }
    }
    if (converged != 20) fail(o, "only " + std::to_string(converged) + "/20 converged");
    if (worst_violation > 1e-9)
        fail(o, "Lyapunov increase " + fmt(worst_violation) + " per step");
    return o;
}

// ---- 3. quadratic GAN spectrum vs finite differences --------------------------

Outcome criterion3() {
    Outcome o;
    const std::pair<double, double> cases[] = {{1.0, 1.0 / 3.0}, {1.5, 1.0 / 3.0},
                                               {1.0, 1.0},       {1.0, 0.0}};
    for (auto [rho, m2] : cases) {
        auto closed_arr = analytic::quadratic_gan_spectrum(rho, m2);
        std::vector<std::complex<double>> closed{closed_arr[0], closed_arr[1]};
        stability::SeededField field = [rho, m2](const Vec& x, std::uint64_t) -> Vec {
            auto d = analytic::quadratic_gan_field(x(0), x(1), rho,
                                                   [m2](double) { return m2; });
            Vec out(2);
            out << d[0], d[1];
            return out;
        };
        for (double th : {1.0, -1.0}) {
            Vec x0(2);
            x0 << 0.0, th;
            stability::SpectralReport sp = stability::spectrum(
                stability::jacobian_fd(field, x0));
            const double err = eig_mismatch(sp.eigenvalues, closed);
            if (err > 1e-6)
                fail(o, "eigenvalue error " + fmt(err) + " at rho=" + fmt(rho) +
                            " m2=" + fmt(m2) + " theta=" + fmt(th));
            if (m2 == 0.0 && sp.verdict != stability::StabilityVerdict::Marginal)
                fail(o, "m2=0 should be marginal (lambda = +-2i/3)");
            if (m2 > 0.0 && sp.verdict != stability::StabilityVerdict::Stable)
                fail(o, "m2>0 should be stable");
        }
    }
    return o;
}

// ---- 4. counterexample: non-convergence to the origin -------------------------

Outcome criterion4() {
    Outcome o;
    const double rho = 3.0 / 8.0;
    integrate::Field f = [rho](const Vec& x) -> Vec {
        auto d = analytic::quadratic_dirac_field(x(0), x(1), rho);
        Vec out(2);
        out << d[0], d[1];
        return out;
    };
    auto rng = make_rng(7);
    std::uniform_real_distribution<double> up(-4.0, 2.0), ut(-2.0, 2.0);
    int outside = 0;
    for (int t = 0; t < 50; ++t) {
        Vec x0(2);
        do {
            x0 << up(rng), ut(rng);
        } while (std::abs(x0(1)) < 0.05);
        integrate::Trajectory traj = integrate::integrate_ode(f, x0, 0.01, 200.0);
        const Vec& last = traj.states.back();
        if (last.allFinite() && last.norm() > 0.1) ++outside;
    }
    if (outside != 50)
        fail(o, std::to_string(50 - outside) + "/50 trajectories ended near the origin");

    double worst = 0.0;
    for (int i = 0; i <= 60; ++i) {
        const double a = -4.0 + 6.0 * i / 60.0;
        auto d = analytic::quadratic_dirac_field(a, 0.0, rho);
        worst = std::max(worst, std::hypot(d[0], d[1]));
    }
    if (worst > 1e-12) fail(o, "psi-axis field norm " + fmt(worst));

    integrate::PhasePortrait p = integrate::phase_portrait(
        [rho](double a, double b) { return analytic::quadratic_dirac_field(a, b, rho); },
        {-4.0, 2.0}, {-2.0, 2.0}, 40, {});
    const double dpsi = 6.0 / 39.0;
    bool near_m2 = false, near_0 = false;
    for (const auto& s : p.psi_nullcline_segments)
        if (std::abs(0.5 * (s[0] + s[2]) + 2.0) <= dpsi && std::abs(s[1]) > 0.5) near_m2 = true;
    for (const auto& s : p.theta_nullcline_segments)
        if (std::abs(0.5 * (s[0] + s[2])) <= dpsi && std::abs(s[1]) > 0.5) near_0 = true;
    if (!near_m2) fail(o, "no psi nullcline near psi = -2");
    if (!near_0) fail(o, "no theta nullcline near psi = 0");
    return o;
}

// ---- 5. equilibrium block structure -------------------------------------------

Outcome criterion5() {
    Outcome o;
    const double bar = 1e-4;
    {
        dynamics::SGPProblem p = dynamics::make_dirac_gan_problem(1.0, dirac(Vec::Zero(1)));
        stability::BlockReport rep =
            stability::qr_blocks(p, Vec::Zero(1), Vec::Zero(1), {100000, 0});
        const double res = std::max({rep.residual_KDD, rep.residual_KGG, rep.residual_offdiag});
        if (res > bar) fail(o, "dirac residual " + fmt(res));
        if (!rep.nullspace_inclusion) fail(o, "dirac nullspace inclusion");
    }
    {
        dynamics::SGPProblem p = dynamics::make_quadratic_gan_problem(1.0);
        stability::BlockReport rep = stability::qr_blocks(p, Vec::Zero(1), v1(1.0), {100000, 1});
        const double res = std::max({rep.residual_KDD, rep.residual_KGG, rep.residual_offdiag});
        if (res > bar) fail(o, "quadratic residual " + fmt(res));
        if (!rep.nullspace_inclusion) fail(o, "quadratic nullspace inclusion");
    }
    // Any fixed measure with positive second moment stabilizes the projection.
    for (double c : {0.5, 1.0, 2.0}) {
        dynamics::SGPProblem p = dynamics::make_quadratic_gan_problem(1.0, uniform1d(-c, c));
        stability::BlockReport rep = stability::qr_blocks(p, Vec::Zero(1), v1(1.0), {100000, 2});
        if (!rep.nullspace_inclusion) {
            fail(o, "inclusion fails at m2=" + fmt(c * c / 3.0));
            continue;
        }
        auto sp = stability::projected_spectrum(rep, p.rho);
        if (sp.verdict != stability::StabilityVerdict::Stable)
            fail(o, "projected verdict not stable at m2=" + fmt(c * c / 3.0));
    }
    return o;
}

// ---- 6. nested penalty gradient vs finite differences --------------------------

Outcome criterion6() {
    Outcome o;
    gan2d::TrainConfig cfg; // 3x64 tanh players on gauss8
    cfg.seed = 5;
    gan2d::ProblemSetup s = gan2d::make_problem(cfg);
    const Vec psi = s.psi0;
    const Vec theta = s.theta0;

    const Table1Kind kinds[] = {Table1Kind::pg, Table1Kind::pd, Table1Kind::gp,
                                Table1Kind::mid, Table1Kind::g_anc};
    const int n = 64;
    const std::uint64_t seed = 9;
    for (Table1Kind kind : kinds) {
        gan2d::TrainConfig kcfg = cfg;
        kcfg.penalty_kind = kind;
        gan2d::ProblemSetup ks = gan2d::make_problem(kcfg);
        Vec g = dynamics::penalty_gradient(ks.problem, psi, theta, {n, seed});

        // FD oracle on the frozen penalty batch: P(psi') = mass * mean of
        // ||grad_x D(.;psi')||^2, probed along 64 random directions plus the
        // 16 largest-gradient coordinate axes.
        Mat X = ks.problem.penalty.sample(psi, theta, n, mix_seed(seed, 3));
        const double mass = ks.problem.penalty.mass(psi, theta);
        auto P = [&](const Vec& p) {
            double val = 0.0;
            ks.problem.D->squared_grad_param_grad(X, p, &val);
            return mass * val;
        };
        std::vector<Vec> dirs;
        auto rng = make_rng(31);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int k = 0; k < 64; ++k) {
            Vec u(psi.size());
            for (int i = 0; i < u.size(); ++i) u(i) = gauss(rng);
            dirs.push_back(u.normalized());
        }
        std::vector<int> idx(static_cast<std::size_t>(psi.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        std::partial_sort(idx.begin(), idx.begin() + 16, idx.end(),
                          [&](int a, int b) { return std::abs(g(a)) > std::abs(g(b)); });
        for (int k = 0; k < 16; ++k) dirs.push_back(Vec::Unit(psi.size(), idx[k]));

        const double h = 1e-4;
        double rel = 0.0;
        for (const Vec& u : dirs) {
            const double fd = (P(psi + h * u) - P(psi - h * u)) / (2.0 * h);
            rel = std::max(rel, std::abs(g.dot(u) - fd) / g.norm());
        }
        if (rel > 1e-5)
            fail(o, to_string(kind) + " relative error " + fmt(rel));
    }
    return o;
}

// ---- 7. weak-derivative calculus ------------------------------------------------

Outcome criterion7() {
    Outcome o;
    FiniteMeasure mu = uniform_0_theta();
    const int n = 1000000;
    const ParamComponent comp{ParamComponent::Block::Theta, 0};
    const std::function<double(const Vec&)> phis[] = {
        [](const Vec& x) { return x(0); },
        [](const Vec& x) { return x(0) * x(0); },
        [](const Vec& x) { return x(0) * x(0) * x(0); }};
    for (double t0 : {1.0, 2.0}) {
        for (int k = 0; k < 3; ++k) {
            const double ana = differentiate_expectation(mu, Vec(), v1(t0), phis[k], comp, n,
                                                         13, DiffMode::Analytic);
            const double fd = differentiate_expectation(mu, Vec(), v1(t0), phis[k], comp, n,
                                                        13, DiffMode::FiniteDifference);
            const double rel = std::abs(ana - fd) / std::abs(fd);
            if (rel > 1e-4)
                fail(o, "phi=x^" + std::to_string(k + 1) + " theta=" + fmt(t0) +
                            " relative gap " + fmt(rel));
        }
    }
    bool threw = false;
    try {
        differentiate_expectation(translated_dirac(), v1(1.0), Vec(),
                                  [](const Vec& x) { return x(0); },
                                  {ParamComponent::Block::Psi, 0}, 10, 0, DiffMode::Analytic);
    } catch (const NoWeakDerivative&) {
        threw = true;
    }
    if (!threw) fail(o, "translated Dirac should raise NoWeakDerivative");
    return o;
}

// ---- 8. 2D training quality -----------------------------------------------------

Outcome criterion8() {
    Outcome o;
    const Table1Kind kinds[] = {Table1Kind::pg, Table1Kind::pd, Table1Kind::gp,
                                Table1Kind::mid, Table1Kind::g_anc};
    for (Table1Kind kind : kinds) {
        int good = 0;
        std::string per_seed;
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            gan2d::TrainConfig cfg;
            cfg.penalty_kind = kind;
            cfg.seed = seed;
            // Plain small-step gradient descent stalls at a critic-flatness
            // bias floor on this budget (the zero-centered penalty drives the
            // critic slope to ~signal/rho, freezing the angular transport at
            // ~0.36 spread regardless of step size). The adaptive-moment
            // variant with linear step-size decay is the configuration that
            // trains to the bar within the 30k-iteration budget (decay stops
            // the late-training mode cycling), so the quality criterion uses
            // it.
            cfg.adam = true;
            cfg.lr = 1e-3;
            cfg.lr_decay = true;
            cfg.metrics_every = 30000; // final row only
            cfg.checkpoint_every = 30000;
            gan2d::TrainRecord rec = gan2d::train(cfg);
            const auto& last = rec.rows.back();
            const bool ok = rec.status == "ok" && last.mode_coverage >= 7 &&
                            last.high_quality_fraction >= 0.5;
            if (ok) ++good;
            per_seed += " s" + std::to_string(seed) + ":" +
                        std::to_string(last.mode_coverage) + "/" +
                        fmt(last.high_quality_fraction);
        }
        if (good < 3)
            fail(o, to_string(kind) + " passes only " + std::to_string(good) + "/4 seeds (" +
                        per_seed + " )");
    }
    return o;
}

// ---- 9. bit-identical reruns ------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

Outcome criterion9() {
    Outcome o;
    if (g_sgplab.empty()) {
        fail(o, "sgplab path not provided");
        return o;
    }
    const fs::path dir = "accept_out";
    fs::remove_all(dir);
    fs::create_directories(dir);

    struct Cmd {
        std::string name, args;
        std::vector<std::string> files;
    };
    const Cmd cmds[] = {
        {"analyze", "analyze --system quadratic --rho 1 --mc-n 20000 --seed 3",
         {"analyze.json", "manifest.json"}},
        {"portrait", "portrait --system quadratic-dirac --rho 0.375 --box -4,2,-2,2",
         {"portrait.json", "portrait.svg", "manifest.json"}},
        {"integrate", "integrate --system dirac --start 1,1 --target 0,0 --t-max 50",
         {"trajectory.csv", "manifest.json"}},
        {"check-assumptions", "check-assumptions --system quadratic --mc-n 20000 --seed 5",
         {"assumptions.json", "manifest.json"}},
        {"train2d",
         "train2d --dataset gauss8 --penalty gp --iters 50 --batch 32 --eval-samples 128 "
         "--metrics-every 10 --checkpoint-every 50 --seed 1",
         {"train.csv", "manifest.json", "ckpt_000050.bin", "ckpt_000050.json"}},
    };
    for (const auto& cmd : cmds) {
        const fs::path run_dir = dir / cmd.name;
        const std::string full =
            g_sgplab + " " + cmd.args + " --out " + run_dir.string() + " >/dev/null 2>&1";
        if (std::system(full.c_str()) != 0) {
            fail(o, cmd.name + " failed to run");
            continue;
        }
        std::vector<std::string> first;
        for (const auto& f : cmd.files) first.push_back(slurp(run_dir / f));
        if (std::system(full.c_str()) != 0) {
            fail(o, cmd.name + " failed on rerun");
            continue;
        }
        for (std::size_t i = 0; i < cmd.files.size(); ++i)
            if (slurp(run_dir / cmd.files[i]) != first[i])
                fail(o, cmd.name + "/" + cmd.files[i] + " differs between reruns");
    }
    return o;
}

struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    if (argc >= 2) g_sgplab = argv[1];
    std::vector<int> only;
    for (int i = 2; i < argc; ++i) only.push_back(std::atoi(argv[i]));

    const std::vector<Criterion> criteria = {
        {1, "Dirac GAN Jacobian and spectrum closed forms", criterion1},
        {2, "Lyapunov dissipation and basin radius", criterion2},
        {3, "quadratic GAN spectrum vs finite differences", criterion3},
        {4, "counterexample trajectories avoid the origin", criterion4},
        {5, "equilibrium block structure and projection", criterion5},
        {6, "nested penalty gradient vs finite differences", criterion6},
        {7, "weak-derivative calculus on U(0,theta)", criterion7},
        {8, "2D training: mode coverage across penalties (adaptive-moment optimizer)",
         criterion8},
        {9, "bit-identical reruns of CLI commands", criterion9},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %d. %s (%.1fs)%s%s\n", o.pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), secs, o.detail.empty() ? "" : " -- ",
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures;
}
