#include "sgp/gan2d.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nlohmann/json.hpp"
#include "sgp/rng.hpp"

namespace sgp::gan2d {

Dataset make_dataset(const std::string& kind, std::uint64_t base_seed) {
    Dataset ds;
    ds.name = kind;
    if (kind == "gauss8") {
        ds.component_std = 0.02;
        ds.centers.resize(2, 8);
        for (int k = 0; k < 8; ++k) {
            const double a = k * M_PI / 4.0;
            ds.centers.col(k) << 2.0 * std::cos(a), 2.0 * std::sin(a);
        }
    } else if (kind == "gauss25") {
        ds.component_std = 0.05;
        ds.centers.resize(2, 25);
        int k = 0;
        for (int i = -2; i <= 2; ++i)
            for (int j = -2; j <= 2; ++j) ds.centers.col(k++) << 2.0 * i, 2.0 * j;
    } else if (kind == "swissroll") {
        ds.component_std = 0.05;
        ds.centers.resize(2, 0);
    } else {
        throw ConfigError("unknown dataset: " + kind);
    }

    if (kind == "swissroll") {
        ds.sampler = [base_seed](int n, std::uint64_t seed) {
            auto rng = make_rng(mix_seed(base_seed, seed));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::normal_distribution<double> g(0.0, 1.0);
            Mat out(2, n);
            const double t_max = 4.5 * M_PI;
            for (int j = 0; j < n; ++j) {
                const double t = 1.5 * M_PI * (1.0 + 2.0 * u(rng));
                const double scale = 2.0 / t_max;
                out(0, j) = scale * t * std::cos(t) + 0.02 * g(rng);
                out(1, j) = scale * t * std::sin(t) + 0.02 * g(rng);
            }
            return out;
        };
    } else {
        const Mat centers = ds.centers;
        const double std_dev = ds.component_std;
        ds.sampler = [base_seed, centers, std_dev](int n, std::uint64_t seed) {
            auto rng = make_rng(mix_seed(base_seed, seed));
            std::uniform_int_distribution<int> pick(0, static_cast<int>(centers.cols()) - 1);
            std::normal_distribution<double> g(0.0, std_dev);
            Mat out(2, n);
            for (int j = 0; j < n; ++j) {
                const int k = pick(rng);
                out(0, j) = centers(0, k) + g(rng);
                out(1, j) = centers(1, k) + g(rng);
            }
            return out;
        };
    }
    return ds;
}

std::pair<int, double> mode_coverage(const Mat& samples, const Mat& centers, double radius) {
    if (samples.cols() == 0) throw ConfigError("mode_coverage needs samples");
    if (radius <= 0.0) throw ConfigError("mode_coverage needs radius > 0");
    const int K = static_cast<int>(centers.cols());
    std::vector<int> hits(K, 0);
    int near_any = 0;
    for (int j = 0; j < samples.cols(); ++j) {
        bool close = false;
        for (int k = 0; k < K; ++k) {
            if ((samples.col(j) - centers.col(k)).norm() <= radius) {
                ++hits[k];
                close = true;
            }
        }
        if (close) ++near_any;
    }
    int covered = 0;
    for (int k = 0; k < K; ++k)
        if (hits[k] >= 20) ++covered;
    return {covered, static_cast<double>(near_any) / samples.cols()};
}

ProblemSetup make_problem(const TrainConfig& cfg) {
    ProblemSetup s;
    s.data = make_dataset(cfg.dataset, cfg.seed);

    std::vector<int> d_dims{2};
    std::vector<int> g_dims{cfg.latent_dim};
    for (int h : cfg.hidden) {
        d_dims.push_back(h);
        g_dims.push_back(h);
    }
    d_dims.push_back(1);
    g_dims.push_back(2);

    Mlp d_net(d_dims), g_net(g_dims);
    d_net.init(mix_seed(cfg.seed, 101), cfg.d_init_scale);
    g_net.init(mix_seed(cfg.seed, 102), cfg.g_init_scale);
    s.psi0 = d_net.params();
    s.theta0 = g_net.params();

    s.problem.D = dynamics::mlp_discriminator(d_net);
    s.problem.G = dynamics::mlp_generator(g_net);
    s.problem.data = s.data.sampler;
    s.problem.latent = dynamics::gaussian_sampler(cfg.latent_dim);
    s.problem.rho = cfg.rho;

    std::optional<Vec> anchor = cfg.anchor;
    if (cfg.penalty_kind == Table1Kind::g_anc && !anchor) {
        Vec a(2);
        a << 2.0, -1.0;
        anchor = a;
    }
    auto gen = s.problem.G;
    auto latent = s.problem.latent;
    GenSampler gen_sampler = [gen, latent](const Vec& theta, int n, std::uint64_t seed) {
        return gen->forward(latent(n, seed), theta);
    };
    s.problem.penalty =
        make_table1_measure(cfg.penalty_kind, anchor, s.data.sampler, gen_sampler);
    return s;
}

Mat generate(const ProblemSetup& setup, const Vec& theta, int n, std::uint64_t seed) {
    return setup.problem.G->forward(setup.problem.latent(n, seed), theta);
}

namespace {

MetricsRow metrics_at(const ProblemSetup& s, const TrainConfig& cfg, int iter, const Vec& psi,
                      const Vec& theta) {
    MetricsRow row;
    row.iter = iter;
    const std::uint64_t eseed = mix_seed(cfg.seed, 0xE0000000ULL + iter);
    const int n = cfg.eval_samples;
    Mat Xd = s.problem.data(n, mix_seed(eseed, 1));
    Mat Xg = generate(s, theta, n, mix_seed(eseed, 2));
    const auto& D = *s.problem.D;
    row.wgan_loss = D.values(Xd, psi).mean() - D.values(Xg, psi).mean();

    Mat Xp = s.problem.penalty.sample(psi, theta, n, mix_seed(eseed, 3));
    double sq = 0.0;
    D.squared_grad_param_grad(Xp, psi, &sq);
    row.penalty_value = s.problem.penalty.mass(psi, theta) * sq;

    if (s.data.centers.cols() > 0) {
        auto [covered, hq] = mode_coverage(Xg, s.data.centers, 3.0 * s.data.component_std);
        row.mode_coverage = covered;
        row.high_quality_fraction = hq;
    }
    return row;
}

} // namespace

TrainRecord train(const TrainConfig& cfg) {
    ProblemSetup s = make_problem(cfg);
    Vec psi = s.psi0, theta = s.theta0;

    TrainRecord rec;
    rec.rows.push_back(metrics_at(s, cfg, 0, psi, theta));
    rec.checkpoints.push_back({0, psi, theta});

    // Adam state, used only when cfg.adam is set.
    Vec m_psi = Vec::Zero(psi.size()), v_psi = Vec::Zero(psi.size());
    Vec m_theta = Vec::Zero(theta.size()), v_theta = Vec::Zero(theta.size());
    const double b1 = 0.5, b2 = 0.9, eps = 1e-8;

    auto apply = [&](Vec& x, const Vec& drift, Vec& m, Vec& v, int t) {
        double lr = cfg.lr;
        if (cfg.lr_decay && cfg.iters > 0)
            lr *= 1.0 - static_cast<double>(t - 1) / cfg.iters;
        if (!cfg.adam) {
            x += lr * drift;
            return;
        }
        m = b1 * m + (1.0 - b1) * drift;
        v = b2 * v + (1.0 - b2) * drift.cwiseProduct(drift);
        const Vec mhat = m / (1.0 - std::pow(b1, t));
        const Vec vhat = v / (1.0 - std::pow(b2, t));
        x += lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
    };

    for (int it = 1; it <= cfg.iters; ++it) {
        try {
            for (int d = 1; d < cfg.d_steps_per_g; ++d) {
                dynamics::McConfig mc{cfg.batch, mix_seed(cfg.seed, 0xD0000000ULL +
                                                              static_cast<std::uint64_t>(it) * 8 + d)};
                auto [psid, td] = dynamics::vector_field(s.problem, psi, theta, mc);
                (void)td;
                apply(psi, psid, m_psi, v_psi, it);
            }
            dynamics::McConfig mc{cfg.batch, mix_seed(cfg.seed, static_cast<std::uint64_t>(it))};
            auto [psid, thetad] = dynamics::vector_field(s.problem, psi, theta, mc);
            apply(psi, psid, m_psi, v_psi, it);
            apply(theta, thetad, m_theta, v_theta, it);
        } catch (const NumericalFailure&) {
            rec.status = "numerical_failure";
            break;
        }
        if (!psi.allFinite() || !theta.allFinite()) {
            rec.status = "numerical_failure";
            break;
        }
        if (it % cfg.metrics_every == 0 || it == cfg.iters)
            rec.rows.push_back(metrics_at(s, cfg, it, psi, theta));
        if (it % cfg.checkpoint_every == 0 || it == cfg.iters) {
            rec.checkpoints.push_back({it, psi, theta});
            if (!cfg.out_dir.empty()) {
                Mat Xg = generate(s, theta, cfg.eval_samples, mix_seed(cfg.seed, 0xF00 + it));
                char name[64];
                std::snprintf(name, sizeof(name), "/samples_%06d.svg", it);
                scatter_svg(Xg, s.data.centers, cfg.out_dir + name);
            }
        }
    }
    rec.final_psi = psi;
    rec.final_theta = theta;
    return rec;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void record_to_csv(const TrainRecord& rec, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << "iter,wgan_loss,penalty_value,mode_coverage,high_quality_fraction\n";
    for (const auto& r : rec.rows)
        os << r.iter << "," << fmt(r.wgan_loss) << "," << fmt(r.penalty_value) << ","
           << r.mode_coverage << "," << fmt(r.high_quality_fraction) << "\n";
}

void save_checkpoint(const Checkpoint& ckpt, const TrainConfig& cfg,
                     const std::string& path_prefix) {
    {
        std::ofstream os(path_prefix + ".bin", std::ios::binary);
        if (!os) throw ConfigError("cannot open " + path_prefix + ".bin for writing");
        const auto write_vec = [&os](const Vec& v) {
            const std::uint64_t n = v.size();
            os.write(reinterpret_cast<const char*>(&n), sizeof(n));
            os.write(reinterpret_cast<const char*>(v.data()),
                     static_cast<std::streamsize>(n * sizeof(double)));
        };
        write_vec(ckpt.psi);
        write_vec(ckpt.theta);
    }
    nlohmann::json j;
    j["iter"] = ckpt.iter;
    j["seed"] = cfg.seed;
    j["arch"] = {{"hidden", cfg.hidden}, {"latent_dim", cfg.latent_dim}};
    j["psi_len"] = ckpt.psi.size();
    j["theta_len"] = ckpt.theta.size();
    std::ofstream os(path_prefix + ".json");
    if (!os) throw ConfigError("cannot open " + path_prefix + ".json for writing");
    os << j.dump(2) << "\n";
}

void scatter_svg(const Mat& samples, const Mat& centers, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    const double W = 480, lo = -3.0, hi = 3.0;
    auto sx = [&](double x) { return (x - lo) / (hi - lo) * W; };
    auto sy = [&](double y) { return W - (y - lo) / (hi - lo) * W; };
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << W
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int j = 0; j < samples.cols(); ++j)
        os << "<circle cx=\"" << sx(samples(0, j)) << "\" cy=\"" << sy(samples(1, j))
           << "\" r=\"1.5\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n";
    for (int k = 0; k < centers.cols(); ++k)
        os << "<circle cx=\"" << sx(centers(0, k)) << "\" cy=\"" << sy(centers(1, k))
           << "\" r=\"3\" fill=\"none\" stroke=\"#d62728\"/>\n";
    os << "</svg>\n";
}

} // namespace sgp::gan2d
