#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "sgp/analytic.hpp"
#include "sgp/dynamics.hpp"
#include "sgp/gan2d.hpp"
#include "sgp/integrate.hpp"
#include "sgp/measure.hpp"
#include "sgp/stability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgp;

namespace {

// --- small parsing helpers ---------------------------------------------------

std::vector<double> parse_doubles(const std::string& s, char sep = ',') {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse number '" + tok + "' in '" + s + "'");
        }
    }
    return out;
}

std::array<double, 2> parse_point(const std::string& s) {
    auto v = parse_doubles(s);
    if (v.size() != 2) throw ConfigError("expected 'x,y' but got '" + s + "'");
    return {v[0], v[1]};
}

std::array<double, 4> parse_box(const std::string& s) {
    auto v = parse_doubles(s);
    if (v.size() != 4)
        throw ConfigError("expected 'psi_min,psi_max,theta_min,theta_max' but got '" + s + "'");
    if (v[0] >= v[1] || v[2] >= v[3]) throw ConfigError("box bounds must be increasing");
    return {v[0], v[1], v[2], v[3]};
}

std::vector<std::array<double, 2>> parse_starts(const std::string& s) {
    std::vector<std::array<double, 2>> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ';')) out.push_back(parse_point(tok));
    return out;
}

// Mass specification for the Dirac GAN penalty, e.g. "const:1".
double parse_const_mass(const std::string& spec) {
    const std::string prefix = "const:";
    if (spec.rfind(prefix, 0) != 0)
        throw ConfigError("unsupported mass spec '" + spec + "' (expected const:<value>)");
    auto v = parse_doubles(spec.substr(prefix.size()));
    if (v.size() != 1) throw ConfigError("mass spec needs a single value: " + spec);
    if (v[0] < 0.0) throw ConfigError("mass must be nonnegative");
    return v[0];
}

fs::path prepare_out_dir(const std::string& out) {
    if (out.empty()) throw ConfigError("--out directory is required");
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out + ": " + ec.message());
    // Probe writability early so failures exit with a clean diagnostic.
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream os(probe);
        if (!os) throw ConfigError("output directory is not writable: " + out);
    }
    fs::remove(probe, ec);
    return dir;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
    os << j.dump(2) << "\n";
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    return j;
}

// Flags override config-file values: a config key applies only when the
// matching flag was not given on the command line.
template <typename T>
void merge_cfg(const json& j, const CLI::Option* opt, const char* key, T& var) {
    if (opt->count() == 0 && j.contains(key)) {
        try {
            var = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad config value for '") + key + "': " + e.what());
        }
    }
}

int worker_count() {
    const char* env = std::getenv("SGPLAB_WORKERS");
    if (!env) return 1;
    try {
        const int w = std::stoi(env);
        if (w < 1) throw std::invalid_argument(env);
        return w;
    } catch (const std::exception&) {
        throw ConfigError(std::string("SGPLAB_WORKERS must be a positive integer, got ") + env);
    }
}

// --- JSON serialization of reports -------------------------------------------

json to_json(const stability::SpectralReport& rep) {
    json j;
    json evs = json::array();
    for (const auto& ev : rep.eigenvalues) evs.push_back({ev.real(), ev.imag()});
    j["eigenvalues"] = evs;
    j["max_real_part"] = rep.max_real_part;
    j["verdict"] = stability::to_string(rep.verdict);
    json rows = json::array();
    for (int i = 0; i < rep.jacobian.rows(); ++i) {
        json row = json::array();
        for (int k = 0; k < rep.jacobian.cols(); ++k) row.push_back(rep.jacobian(i, k));
        rows.push_back(row);
    }
    j["jacobian"] = rows;
    return j;
}

json matrix_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

json to_json(const stability::BlockReport& rep) {
    json j;
    j["Q"] = matrix_json(rep.Q);
    j["R"] = matrix_json(rep.R);
    j["residual_KDD"] = rep.residual_KDD;
    j["residual_KGG"] = rep.residual_KGG;
    j["residual_offdiag"] = rep.residual_offdiag;
    j["nullspace_inclusion"] = rep.nullspace_inclusion;
    j["rho"] = rep.rho;
    return j;
}

json to_json(const dynamics::AssumptionReport& rep) {
    json entries = json::array();
    for (const auto& e : rep.entries) {
        json je;
        je["name"] = e.name;
        je["verdict"] = dynamics::to_string(e.verdict);
        je["witness_value"] = e.witness_value;
        json w = json::array();
        for (int i = 0; i < e.witness_point.size(); ++i) w.push_back(e.witness_point(i));
        je["witness_point"] = w;
        je["note"] = e.note;
        entries.push_back(je);
    }
    return json{{"entries", entries}};
}

// --- SGP problems addressable from the command line ---------------------------

struct NamedProblem {
    dynamics::SGPProblem problem;
    Vec psi_star, theta_star;
};

NamedProblem make_named_problem(const std::string& system, double rho,
                                const std::string& mass_spec) {
    NamedProblem np;
    if (system == "dirac") {
        const double m = parse_const_mass(mass_spec);
        np.problem = dynamics::make_dirac_gan_problem(
            rho, with_mass(dirac(Vec::Zero(1)),
                           [m](const Vec&, const Vec&) { return m; }, false, false));
        np.psi_star = Vec::Zero(1);
        np.theta_star = Vec::Zero(1);
    } else if (system == "quadratic") {
        np.problem = dynamics::make_quadratic_gan_problem(rho);
        np.psi_star = Vec::Zero(1);
        np.theta_star = Vec::Ones(1);
    } else {
        throw ConfigError("unknown analyzable system: " + system +
                          " (expected dirac or quadratic)");
    }
    return np;
}

// --- commands ------------------------------------------------------------------

struct CommonOpts {
    std::uint64_t seed = 0;
    int mc_n = 100000;
    std::string out;
    std::string config;
};

void add_common(CLI::App* cmd, CommonOpts& c, CLI::Option*& seed_opt, CLI::Option*& mcn_opt,
                CLI::Option*& out_opt) {
    seed_opt = cmd->add_option("--seed", c.seed, "root RNG seed");
    mcn_opt = cmd->add_option("--mc-n", c.mc_n, "Monte Carlo sample count");
    out_opt = cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--config", c.config, "JSON config file (flags override)");
}

int run_analyze(const CommonOpts& c, const std::string& system, double rho,
                const std::string& mass) {
    if (c.mc_n < 1) throw ConfigError("--mc-n must be >= 1");
    fs::path dir = prepare_out_dir(c.out);
    NamedProblem np = make_named_problem(system, rho, mass);

    const int dpsi = np.problem.D->psi_dim();
    const int dtheta = np.problem.G->theta_dim();
    Vec x0(dpsi + dtheta);
    x0 << np.psi_star, np.theta_star;
    auto field = [&](const Vec& x, std::uint64_t seed) -> Vec {
        auto [pd, td] = dynamics::vector_field(np.problem, x.head(dpsi), x.tail(dtheta),
                                               {c.mc_n, seed});
        Vec out(dpsi + dtheta);
        out << pd, td;
        return out;
    };
    Mat J = stability::jacobian_fd(field, x0, 0.0, c.seed);
    stability::SpectralReport sp = stability::spectrum(J);
    stability::BlockReport blocks =
        stability::qr_blocks(np.problem, np.psi_star, np.theta_star, {c.mc_n, c.seed});

    json j;
    j["system"] = system;
    j["spectrum"] = to_json(sp);
    j["blocks"] = to_json(blocks);
    if (blocks.nullspace_inclusion)
        j["projected_spectrum"] = to_json(stability::projected_spectrum(blocks, rho));
    else
        j["projected_spectrum"] = nullptr;
    write_json(j, dir / "analyze.json");

    json manifest{{"command", "analyze"}, {"system", system},     {"rho", rho},
                  {"mass", mass},         {"seed", c.seed},       {"mc_n", c.mc_n},
                  {"out", c.out}};
    write_json(manifest, dir / "manifest.json");
    return 0;
}

int run_portrait(const CommonOpts& c, const std::string& system, double rho,
                 const std::string& box_s, int resolution, const std::string& starts_s,
                 double dt, double t_max) {
    fs::path dir = prepare_out_dir(c.out);
    analytic::ToySystem2D sys = analytic::make_toy_system(system, rho);
    auto box = parse_box(box_s);
    auto starts = parse_starts(starts_s);

    integrate::PhasePortrait p = integrate::phase_portrait(
        sys.field, {box[0], box[1]}, {box[2], box[3]}, resolution, starts, dt, t_max);
    integrate::portrait_to_svg(p, (dir / "portrait.svg").string());
    integrate::portrait_to_json(p, (dir / "portrait.json").string());

    json manifest{{"command", "portrait"},
                  {"system", system},
                  {"rho", rho},
                  {"box", {box[0], box[1], box[2], box[3]}},
                  {"resolution", resolution},
                  {"starts", starts_s},
                  {"dt", dt},
                  {"t_max", t_max},
                  {"seed", c.seed},
                  {"out", c.out}};
    write_json(manifest, dir / "manifest.json");
    return 0;
}

int run_integrate(const CommonOpts& c, const std::string& system, double rho,
                  const std::string& start_s, double dt, double t_max,
                  const std::string& method, double lr, int steps,
                  const std::string& target_s, double tol) {
    fs::path dir = prepare_out_dir(c.out);
    analytic::ToySystem2D sys = analytic::make_toy_system(system, rho);
    auto start = parse_point(start_s);
    Vec x0(2);
    x0 << start[0], start[1];

    integrate::StopCondition stop;
    stop.tol = tol;
    if (!target_s.empty()) {
        auto t = parse_point(target_s);
        Vec tv(2);
        tv << t[0], t[1];
        stop.target = tv;
    }

    integrate::Trajectory traj;
    if (method == "rk4") {
        auto f = [&sys](const Vec& x) -> Vec {
            auto [fp, ft] = sys.field(x(0), x(1));
            Vec out(2);
            out << fp, ft;
            return out;
        };
        traj = integrate::integrate_ode(f, x0, dt, t_max, stop);
    } else if (method == "gd") {
        auto f = [&sys](const Vec& x, std::uint64_t) -> Vec {
            auto [fp, ft] = sys.field(x(0), x(1));
            Vec out(2);
            out << fp, ft;
            return out;
        };
        traj = integrate::simultaneous_gd(f, x0, lr, steps, c.seed, stop);
    } else {
        throw ConfigError("unknown integration method: " + method + " (expected rk4 or gd)");
    }
    integrate::trajectory_to_csv(traj, (dir / "trajectory.csv").string());

    json manifest{{"command", "integrate"},
                  {"system", system},
                  {"rho", rho},
                  {"start", start_s},
                  {"dt", dt},
                  {"t_max", t_max},
                  {"method", method},
                  {"lr", lr},
                  {"steps", steps},
                  {"target", target_s},
                  {"tol", tol},
                  {"seed", c.seed},
                  {"out", c.out},
                  {"terminal_reason", integrate::to_string(traj.terminal_reason)}};
    write_json(manifest, dir / "manifest.json");
    return 0;
}

int run_check_assumptions(const CommonOpts& c, const std::string& system, double rho,
                          const std::string& mass, const std::string& psi_star_s,
                          const std::string& theta_star_s, double tol) {
    fs::path dir = prepare_out_dir(c.out);
    NamedProblem np = make_named_problem(system, rho, mass);
    if (!psi_star_s.empty()) {
        auto v = parse_doubles(psi_star_s);
        np.psi_star = Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (!theta_star_s.empty()) {
        auto v = parse_doubles(theta_star_s);
        np.theta_star = Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    dynamics::CheckConfig cfg;
    cfg.n = c.mc_n;
    cfg.seed = c.seed;
    cfg.tol = tol;
    dynamics::AssumptionReport rep =
        dynamics::check_assumptions(np.problem, np.psi_star, np.theta_star, cfg);
    write_json(to_json(rep), dir / "assumptions.json");

    json manifest{{"command", "check-assumptions"},
                  {"system", system},
                  {"rho", rho},
                  {"mass", mass},
                  {"psi_star", psi_star_s},
                  {"theta_star", theta_star_s},
                  {"tol", tol},
                  {"seed", c.seed},
                  {"mc_n", c.mc_n},
                  {"out", c.out}};
    write_json(manifest, dir / "manifest.json");
    return 0;
}

int run_train2d(const CommonOpts& c, const gan2d::TrainConfig& base,
                const std::string& seeds_s) {
    fs::path dir = prepare_out_dir(c.out);
    std::vector<std::uint64_t> seeds;
    if (seeds_s.empty()) {
        seeds.push_back(base.seed);
    } else {
        for (double v : parse_doubles(seeds_s)) {
            if (v < 0 || v != std::floor(v))
                throw ConfigError("--seeds must be nonnegative integers");
            seeds.push_back(static_cast<std::uint64_t>(v));
        }
    }

    auto run_one = [&](std::uint64_t seed) {
        gan2d::TrainConfig cfg = base;
        cfg.seed = seed;
        fs::path run_dir = seeds.size() == 1 ? dir : dir / ("seed_" + std::to_string(seed));
        fs::create_directories(run_dir);
        cfg.out_dir = run_dir.string();
        gan2d::TrainRecord rec = gan2d::train(cfg);
        gan2d::record_to_csv(rec, (run_dir / "train.csv").string());
        for (const auto& ckpt : rec.checkpoints) {
            char name[32];
            std::snprintf(name, sizeof(name), "ckpt_%06d", ckpt.iter);
            gan2d::save_checkpoint(ckpt, cfg, (run_dir / name).string());
        }
        return rec.status;
    };

    const int workers = std::min<int>(worker_count(), static_cast<int>(seeds.size()));
    std::vector<std::string> statuses(seeds.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) statuses[i] = run_one(seeds[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < seeds.size(); i = next++)
                    statuses[i] = run_one(seeds[i]);
            });
        for (auto& t : pool) t.join();
    }

    json runs = json::array();
    bool failed = false;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        runs.push_back({{"seed", seeds[i]}, {"status", statuses[i]}});
        failed = failed || statuses[i] != "ok";
    }
    json manifest{{"command", "train2d"},
                  {"dataset", base.dataset},
                  {"penalty", to_string(base.penalty_kind)},
                  {"rho", base.rho},
                  {"lr", base.lr},
                  {"batch", base.batch},
                  {"iters", base.iters},
                  {"d_steps_per_g", base.d_steps_per_g},
                  {"adam", base.adam},
                  {"hidden", base.hidden},
                  {"latent_dim", base.latent_dim},
                  {"eval_samples", base.eval_samples},
                  {"d_init_scale", base.d_init_scale},
                  {"g_init_scale", base.g_init_scale},
                  {"seeds", seeds},
                  {"out", c.out},
                  {"runs", runs}};
    write_json(manifest, dir / "manifest.json");
    if (failed) throw NumericalFailure("one or more training runs ended in numerical failure");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for gradient-penalized WGAN training dynamics"};
    app.require_subcommand(1);

    // analyze -----------------------------------------------------------------
    CommonOpts an_c;
    std::string an_system = "dirac", an_mass = "const:1";
    double an_rho = 1.0;
    CLI::App* analyze = app.add_subcommand("analyze", "equilibrium spectrum and Q/R blocks");
    CLI::Option *an_seed, *an_mcn, *an_out;
    add_common(analyze, an_c, an_seed, an_mcn, an_out);
    CLI::Option* an_sys_o = analyze->add_option("--system", an_system, "dirac | quadratic");
    CLI::Option* an_rho_o = analyze->add_option("--rho", an_rho, "penalty weight");
    CLI::Option* an_mass_o = analyze->add_option("--mass", an_mass, "penalty mass, const:<v>");

    // portrait ----------------------------------------------------------------
    CommonOpts po_c;
    std::string po_system = "dirac", po_box = "-2,2,-2,2", po_starts = "1,1;-1,1;0.5,-1.5";
    double po_rho = 1.0, po_dt = 0.01, po_tmax = 40.0;
    int po_res = 40;
    CLI::App* portrait = app.add_subcommand("portrait", "phase portrait SVG + lattice JSON");
    CLI::Option *po_seed, *po_mcn, *po_out;
    add_common(portrait, po_c, po_seed, po_mcn, po_out);
    CLI::Option* po_sys_o =
        portrait->add_option("--system", po_system, "dirac | quadratic | quadratic-dirac");
    CLI::Option* po_rho_o = portrait->add_option("--rho", po_rho, "penalty weight");
    CLI::Option* po_box_o = portrait->add_option("--box", po_box, "psi_min,psi_max,theta_min,theta_max");
    CLI::Option* po_res_o = portrait->add_option("--resolution", po_res, "lattice resolution");
    CLI::Option* po_sta_o = portrait->add_option("--starts", po_starts, "x,y;x,y;... trajectory starts");
    CLI::Option* po_dt_o = portrait->add_option("--dt", po_dt, "RK4 step");
    CLI::Option* po_tm_o = portrait->add_option("--t-max", po_tmax, "integration horizon");

    // integrate ----------------------------------------------------------------
    CommonOpts in_c;
    std::string in_system = "dirac", in_start = "1,1", in_method = "rk4", in_target;
    double in_rho = 1.0, in_dt = 0.01, in_tmax = 40.0, in_lr = 0.01, in_tol = 1e-4;
    int in_steps = 1000;
    CLI::App* integ = app.add_subcommand("integrate", "single trajectory to CSV");
    CLI::Option *in_seed, *in_mcn, *in_out;
    add_common(integ, in_c, in_seed, in_mcn, in_out);
    CLI::Option* in_sys_o =
        integ->add_option("--system", in_system, "dirac | quadratic | quadratic-dirac");
    CLI::Option* in_rho_o = integ->add_option("--rho", in_rho, "penalty weight");
    CLI::Option* in_sta_o = integ->add_option("--start", in_start, "initial point x,y");
    CLI::Option* in_dt_o = integ->add_option("--dt", in_dt, "RK4 step");
    CLI::Option* in_tm_o = integ->add_option("--t-max", in_tmax, "integration horizon");
    CLI::Option* in_me_o = integ->add_option("--method", in_method, "rk4 | gd");
    CLI::Option* in_lr_o = integ->add_option("--lr", in_lr, "gd learning rate");
    CLI::Option* in_st_o = integ->add_option("--steps", in_steps, "gd step count");
    CLI::Option* in_ta_o = integ->add_option("--target", in_target, "stop target x,y");
    CLI::Option* in_to_o = integ->add_option("--tol", in_tol, "stop tolerance");

    // check-assumptions ----------------------------------------------------------
    CommonOpts ca_c;
    std::string ca_system = "dirac", ca_mass = "const:1", ca_psi, ca_theta;
    double ca_rho = 1.0, ca_tol = 1e-4;
    CLI::App* check = app.add_subcommand("check-assumptions", "assumption report JSON");
    CLI::Option *ca_seed, *ca_mcn, *ca_out;
    add_common(check, ca_c, ca_seed, ca_mcn, ca_out);
    CLI::Option* ca_sys_o = check->add_option("--system", ca_system, "dirac | quadratic");
    CLI::Option* ca_rho_o = check->add_option("--rho", ca_rho, "penalty weight");
    CLI::Option* ca_mass_o = check->add_option("--mass", ca_mass, "penalty mass, const:<v>");
    CLI::Option* ca_psi_o = check->add_option("--psi-star", ca_psi, "equilibrium psi (csv)");
    CLI::Option* ca_the_o = check->add_option("--theta-star", ca_theta, "equilibrium theta (csv)");
    CLI::Option* ca_tol_o = check->add_option("--tol", ca_tol, "verdict tolerance");

    // train2d ----------------------------------------------------------------------
    CommonOpts tr_c;
    gan2d::TrainConfig tr;
    std::string tr_penalty = "mid", tr_anchor, tr_seeds;
    CLI::App* train = app.add_subcommand("train2d", "desk-scale 2D WGAN training");
    CLI::Option *tr_seed, *tr_mcn, *tr_out;
    add_common(train, tr_c, tr_seed, tr_mcn, tr_out);
    CLI::Option* tr_ds_o = train->add_option("--dataset", tr.dataset, "gauss8 | gauss25 | swissroll");
    CLI::Option* tr_pe_o = train->add_option("--penalty", tr_penalty, "pg | pd | gp | mid | g_anc");
    CLI::Option* tr_an_o = train->add_option("--anchor", tr_anchor, "g_anc anchor x,y");
    CLI::Option* tr_rho_o = train->add_option("--rho", tr.rho, "penalty weight");
    CLI::Option* tr_lr_o = train->add_option("--lr", tr.lr, "learning rate");
    CLI::Option* tr_ba_o = train->add_option("--batch", tr.batch, "batch size");
    CLI::Option* tr_it_o = train->add_option("--iters", tr.iters, "iterations");
    CLI::Option* tr_dsg_o = train->add_option("--d-steps", tr.d_steps_per_g, "discriminator steps per generator step");
    CLI::Option* tr_ad_o = train->add_flag("--adam", tr.adam, "adaptive-moment updates");
    CLI::Option* tr_ld_o = train->add_flag("--lr-decay", tr.lr_decay, "linear step-size decay to zero");
    CLI::Option* tr_me_o = train->add_option("--metrics-every", tr.metrics_every, "metrics cadence");
    CLI::Option* tr_ck_o = train->add_option("--checkpoint-every", tr.checkpoint_every, "checkpoint cadence");
    CLI::Option* tr_ev_o = train->add_option("--eval-samples", tr.eval_samples, "evaluation sample count");
    CLI::Option* tr_se_o = train->add_option("--seeds", tr_seeds, "sweep seeds, e.g. 0,1,2,3");
    CLI::Option* tr_dis_o = train->add_option("--d-init-scale", tr.d_init_scale,
                                              "discriminator Glorot multiplier");
    CLI::Option* tr_gis_o = train->add_option("--g-init-scale", tr.g_init_scale,
                                              "generator Glorot multiplier");

    try {
        app.parse(argc, argv);

        if (*analyze) {
            json cfg = load_config(an_c.config);
            merge_cfg(cfg, an_seed, "seed", an_c.seed);
            merge_cfg(cfg, an_mcn, "mc_n", an_c.mc_n);
            merge_cfg(cfg, an_out, "out", an_c.out);
            merge_cfg(cfg, an_sys_o, "system", an_system);
            merge_cfg(cfg, an_rho_o, "rho", an_rho);
            merge_cfg(cfg, an_mass_o, "mass", an_mass);
            return run_analyze(an_c, an_system, an_rho, an_mass);
        }
        if (*portrait) {
            json cfg = load_config(po_c.config);
            merge_cfg(cfg, po_seed, "seed", po_c.seed);
            merge_cfg(cfg, po_mcn, "mc_n", po_c.mc_n);
            merge_cfg(cfg, po_out, "out", po_c.out);
            merge_cfg(cfg, po_sys_o, "system", po_system);
            merge_cfg(cfg, po_rho_o, "rho", po_rho);
            merge_cfg(cfg, po_box_o, "box", po_box);
            merge_cfg(cfg, po_res_o, "resolution", po_res);
            merge_cfg(cfg, po_sta_o, "starts", po_starts);
            merge_cfg(cfg, po_dt_o, "dt", po_dt);
            merge_cfg(cfg, po_tm_o, "t_max", po_tmax);
            return run_portrait(po_c, po_system, po_rho, po_box, po_res, po_starts, po_dt,
                                po_tmax);
        }
        if (*integ) {
            json cfg = load_config(in_c.config);
            merge_cfg(cfg, in_seed, "seed", in_c.seed);
            merge_cfg(cfg, in_mcn, "mc_n", in_c.mc_n);
            merge_cfg(cfg, in_out, "out", in_c.out);
            merge_cfg(cfg, in_sys_o, "system", in_system);
            merge_cfg(cfg, in_rho_o, "rho", in_rho);
            merge_cfg(cfg, in_sta_o, "start", in_start);
            merge_cfg(cfg, in_dt_o, "dt", in_dt);
            merge_cfg(cfg, in_tm_o, "t_max", in_tmax);
            merge_cfg(cfg, in_me_o, "method", in_method);
            merge_cfg(cfg, in_lr_o, "lr", in_lr);
            merge_cfg(cfg, in_st_o, "steps", in_steps);
            merge_cfg(cfg, in_ta_o, "target", in_target);
            merge_cfg(cfg, in_to_o, "tol", in_tol);
            return run_integrate(in_c, in_system, in_rho, in_start, in_dt, in_tmax, in_method,
                                 in_lr, in_steps, in_target, in_tol);
        }
        if (*check) {
            json cfg = load_config(ca_c.config);
            merge_cfg(cfg, ca_seed, "seed", ca_c.seed);
            merge_cfg(cfg, ca_mcn, "mc_n", ca_c.mc_n);
            merge_cfg(cfg, ca_out, "out", ca_c.out);
            merge_cfg(cfg, ca_sys_o, "system", ca_system);
            merge_cfg(cfg, ca_rho_o, "rho", ca_rho);
            merge_cfg(cfg, ca_mass_o, "mass", ca_mass);
            merge_cfg(cfg, ca_psi_o, "psi_star", ca_psi);
            merge_cfg(cfg, ca_the_o, "theta_star", ca_theta);
            merge_cfg(cfg, ca_tol_o, "tol", ca_tol);
            return run_check_assumptions(ca_c, ca_system, ca_rho, ca_mass, ca_psi, ca_theta,
                                         ca_tol);
        }
        if (*train) {
            json cfg = load_config(tr_c.config);
            merge_cfg(cfg, tr_seed, "seed", tr_c.seed);
            merge_cfg(cfg, tr_out, "out", tr_c.out);
            merge_cfg(cfg, tr_ds_o, "dataset", tr.dataset);
            merge_cfg(cfg, tr_pe_o, "penalty", tr_penalty);
            merge_cfg(cfg, tr_an_o, "anchor", tr_anchor);
            merge_cfg(cfg, tr_rho_o, "rho", tr.rho);
            merge_cfg(cfg, tr_lr_o, "lr", tr.lr);
            merge_cfg(cfg, tr_ba_o, "batch", tr.batch);
            merge_cfg(cfg, tr_it_o, "iters", tr.iters);
            merge_cfg(cfg, tr_dsg_o, "d_steps_per_g", tr.d_steps_per_g);
            merge_cfg(cfg, tr_ad_o, "adam", tr.adam);
            merge_cfg(cfg, tr_ld_o, "lr_decay", tr.lr_decay);
            merge_cfg(cfg, tr_me_o, "metrics_every", tr.metrics_every);
            merge_cfg(cfg, tr_ck_o, "checkpoint_every", tr.checkpoint_every);
            merge_cfg(cfg, tr_ev_o, "eval_samples", tr.eval_samples);
            merge_cfg(cfg, tr_se_o, "seeds", tr_seeds);
            merge_cfg(cfg, tr_dis_o, "d_init_scale", tr.d_init_scale);
            merge_cfg(cfg, tr_gis_o, "g_init_scale", tr.g_init_scale);
            (void)tr_mcn;
            tr.seed = tr_c.seed;
            tr.penalty_kind = table1_kind_from_string(tr_penalty);
            if (!tr_anchor.empty()) {
                auto a = parse_point(tr_anchor);
                Vec av(2);
                av << a[0], a[1];
                tr.anchor = av;
            }
            if (tr.batch < 1 || tr.iters < 0 || tr.lr <= 0.0 || tr.d_steps_per_g < 1)
                throw ConfigError("train2d needs batch >= 1, iters >= 0, lr > 0, d-steps >= 1");
            return run_train2d(tr_c, tr, tr_seeds);
        }
        return 2; // unreachable: require_subcommand
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const StructureViolation& e) {
        std::cerr << "structure violation: " << e.what() << "\n";
        return 3;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
