#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nlohmann/json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_bin; // path to the sgplab executable, from the last CLI argument

int run(const std::string& args) {
    const std::string cmd = g_bin + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

json load(const fs::path& path) { return json::parse(slurp(path)); }

struct Sandbox {
    fs::path dir;
    explicit Sandbox(const std::string& name) : dir(fs::path("cli_out") / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    std::string sub(const std::string& s) const { return (dir / s).string(); }
};

} // namespace

TEST_CASE("no subcommand or bad flags exit 2 without writing files") {
    Sandbox sb("empty");
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("portrait --system nosuch --out " + sb.sub("x")) == 2);
    CHECK(run("analyze --system dirac --mass linear:1 --out " + sb.sub("y")) == 2);
    CHECK_FALSE(fs::exists(sb.sub("x") + "/portrait.svg"));
}

TEST_CASE("analyze reports the Dirac GAN spectrum") {
    Sandbox sb("analyze");
    CHECK(run("analyze --system dirac --rho 1 --mass const:1 --mc-n 10000 --out " +
              sb.sub("a")) == 0);
    json j = load(sb.dir / "a" / "analyze.json");
    REQUIRE(j["spectrum"]["eigenvalues"].size() == 2);
    bool found = false;
    for (const auto& ev : j["spectrum"]["eigenvalues"]) {
        std::complex<double> l(ev[0].get<double>(), ev[1].get<double>());
        if (std::abs(l - std::complex<double>(-0.5, std::sqrt(3.0) / 2.0)) < 1e-6) found = true;
    }
    CHECK(found);
    CHECK(j["spectrum"]["verdict"] == "stable");
    CHECK(j["blocks"]["nullspace_inclusion"] == true);
    CHECK(j["projected_spectrum"]["verdict"] == "stable");

    json manifest = load(sb.dir / "a" / "manifest.json");
    CHECK(manifest["command"] == "analyze");
    CHECK(manifest["rho"] == 1.0);
    CHECK(manifest["mass"] == "const:1");
}

TEST_CASE("portrait emits nullclines at psi = 0 and psi = -2") {
    Sandbox sb("portrait");
    const std::string args =
        "portrait --system quadratic-dirac --rho 0.375 --box -4,2,-2,2 --out ";
    CHECK(run(args + sb.sub("p")) == 0);
    CHECK(fs::exists(sb.dir / "p" / "portrait.svg"));
    json j = load(sb.dir / "p" / "portrait.json");
    const double dpsi = 6.0 / (j["resolution"].get<int>() - 1);

    bool near_m2 = false, near_0 = false;
    for (const auto& s : j["psi_nullcline_segments"]) {
        const double xm = 0.5 * (s[0].get<double>() + s[2].get<double>());
        if (std::abs(xm + 2.0) <= dpsi && std::abs(s[1].get<double>()) > 0.5) near_m2 = true;
    }
    for (const auto& s : j["theta_nullcline_segments"]) {
        const double xm = 0.5 * (s[0].get<double>() + s[2].get<double>());
        if (std::abs(xm) <= dpsi && std::abs(s[1].get<double>()) > 0.5) near_0 = true;
    }
    CHECK(near_m2);
    CHECK(near_0);

    // Byte-identical outputs on rerun with the same config.
    const std::string svg1 = slurp(sb.dir / "p" / "portrait.svg");
    const std::string json1 = slurp(sb.dir / "p" / "portrait.json");
    CHECK(run(args + sb.sub("p")) == 0);
    CHECK(slurp(sb.dir / "p" / "portrait.svg") == svg1);
    CHECK(slurp(sb.dir / "p" / "portrait.json") == json1);
}

TEST_CASE("integrate writes a convergent trajectory CSV") {
    Sandbox sb("integrate");
    const std::string args =
        "integrate --system dirac --rho 1 --start 1,1 --target 0,0 --t-max 100 --out ";
    CHECK(run(args + sb.sub("t")) == 0);
    const std::string csv = slurp(sb.dir / "t" / "trajectory.csv");
    CHECK(csv.rfind("t,x0,x1\n", 0) == 0);
    json manifest = load(sb.dir / "t" / "manifest.json");
    CHECK(manifest["terminal_reason"] == "converged");

    CHECK(run(args + sb.sub("t2")) == 0);
    CHECK(slurp(sb.dir / "t2" / "trajectory.csv") == csv);

    CHECK(run("integrate --system dirac --method sgd --out " + sb.sub("bad")) == 2);
}

TEST_CASE("check-assumptions passes at the quadratic GAN equilibrium") {
    Sandbox sb("check");
    CHECK(run("check-assumptions --system quadratic --rho 1 --mc-n 5000 --out " +
              sb.sub("c")) == 0);
    json j = load(sb.dir / "c" / "assumptions.json");
    bool a1_pass = false, a6c_pass = false;
    for (const auto& e : j["entries"]) {
        if (e["name"] == "A1") a1_pass = e["verdict"] == "pass";
        if (e["name"] == "A6c") a6c_pass = e["verdict"] == "pass";
    }
    CHECK(a1_pass);
    CHECK(a6c_pass);
}

TEST_CASE("config files merge under explicit flags") {
    Sandbox sb("config");
    {
        std::ofstream os(sb.sub("cfg.json"));
        os << R"({"system": "quadratic-dirac", "rho": 0.375, "box": "-4,2,-2,2"})";
    }
    CHECK(run("portrait --config " + sb.sub("cfg.json") + " --out " + sb.sub("p1")) == 0);
    json m1 = load(sb.dir / "p1" / "manifest.json");
    CHECK(m1["system"] == "quadratic-dirac");
    CHECK(m1["rho"] == 0.375);

    // The flag wins over the config value.
    CHECK(run("portrait --config " + sb.sub("cfg.json") + " --rho 1.5 --out " + sb.sub("p2")) ==
          0);
    json m2 = load(sb.dir / "p2" / "manifest.json");
    CHECK(m2["rho"] == 1.5);

    {
        std::ofstream os(sb.sub("broken.json"));
        os << "{not json";
    }
    CHECK(run("portrait --config " + sb.sub("broken.json") + " --out " + sb.sub("p3")) == 2);
}

TEST_CASE("train2d runs, is reproducible and sweeps seeds") {
    Sandbox sb("train");
    const std::string args =
        "train2d --dataset gauss8 --penalty mid --iters 3 --batch 16 --eval-samples 64 "
        "--metrics-every 1 --checkpoint-every 3 --out ";
    CHECK(run(args + sb.sub("r1")) == 0);
    CHECK(fs::exists(sb.dir / "r1" / "train.csv"));
    CHECK(fs::exists(sb.dir / "r1" / "ckpt_000003.bin"));
    const std::string csv = slurp(sb.dir / "r1" / "train.csv");

    CHECK(run(args + sb.sub("r2")) == 0);
    CHECK(slurp(sb.dir / "r2" / "train.csv") == csv);

    CHECK(run(args + sb.sub("sweep") + " --seeds 0,1") == 0);
    CHECK(fs::exists(sb.dir / "sweep" / "seed_0" / "train.csv"));
    CHECK(fs::exists(sb.dir / "sweep" / "seed_1" / "train.csv"));
    CHECK(slurp(sb.dir / "sweep" / "seed_0" / "train.csv") == csv); // same seed, same bytes
    json m = load(sb.dir / "sweep" / "manifest.json");
    CHECK(m["runs"].size() == 2);
    CHECK(m["runs"][0]["status"] == "ok");
}

int main(int argc, char** argv) {
    doctest::Context ctx;
    // The harness appends the sgplab path after any doctest options.
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli [doctest options] <path-to-sgplab>\n");
        return 1;
    }
    g_bin = argv[argc - 1];
    ctx.applyCommandLine(argc - 1, argv);
    return ctx.run();
}
