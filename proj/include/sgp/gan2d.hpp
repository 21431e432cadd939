#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sgp/dynamics.hpp"
#include "sgp/measure.hpp"

namespace sgp::gan2d {

using sgp::Mat;
using sgp::Vec;

struct Dataset {
    std::string name;
    PointSampler sampler;
    Mat centers;      // 2 x K mixture centers; empty for swissroll
    double component_std = 0.0;
};

// "gauss8": 8 Gaussians on a circle of radius 2, std 0.02.
// "gauss25": 5x5 grid with spacing 2, std 0.05.
// "swissroll": 2D spiral scaled into [-2,2]^2.
// base_seed is folded into every sampler call, so two datasets built with the
// same base seed produce identical batches.
Dataset make_dataset(const std::string& kind, std::uint64_t base_seed);

// covered = number of centers with >= 20 samples within radius;
// high_quality_fraction = fraction of samples within radius of any center.
std::pair<int, double> mode_coverage(const Mat& samples, const Mat& centers, double radius);

struct TrainConfig {
    std::string dataset = "gauss8";
    Table1Kind penalty_kind = Table1Kind::mid;
    std::optional<Vec> anchor; // defaults to (2,-1) for g_anc
    double rho = 10.0;
    double lr = 1e-4;
    int batch = 256;
    int iters = 30000;
    int d_steps_per_g = 1;
    std::uint64_t seed = 0;
    bool adam = false;     // adaptive-moment variant
    bool lr_decay = false; // linear step-size decay to zero over iters
    int metrics_every = 100;
    int checkpoint_every = 5000;
    std::vector<int> hidden{64, 64, 64};
    int latent_dim = 2;
    // Glorot multipliers. The generator default spreads its initial samples
    // across the data region, which plain small-step gradient descent needs.
    double d_init_scale = 1.0;
    double g_init_scale = 2.5;
    int eval_samples = 2048;
    std::string out_dir; // when set: sample scatter SVGs every checkpoint_every
};

struct MetricsRow {
    int iter = 0;
    double wgan_loss = 0.0;
    double penalty_value = 0.0;
    int mode_coverage = 0;
    double high_quality_fraction = 0.0;
};

struct Checkpoint {
    int iter = 0;
    Vec psi;
    Vec theta;
};

struct TrainRecord {
    std::vector<MetricsRow> rows;
    std::vector<Checkpoint> checkpoints;
    Vec final_psi, final_theta;
    std::string status = "ok"; // or "numerical_failure"
};

// Alternating simultaneous-style training; each iteration draws fresh batches
// and steps both players along the dynamics module's drift (single source of
// truth for gradients). Deterministic given cfg.seed.
TrainRecord train(const TrainConfig& cfg);

// The SGP problem a config trains (players, samplers, penalty), plus the
// initial parameter vectors. Exposed so diagnostics can evaluate the same
// drift the trainer steps along.
struct ProblemSetup {
    dynamics::SGPProblem problem;
    Vec psi0, theta0;
    Dataset data;
};
ProblemSetup make_problem(const TrainConfig& cfg);

// Generator samples at given parameters, for metrics and plotting.
Mat generate(const ProblemSetup& setup, const Vec& theta, int n, std::uint64_t seed);

void record_to_csv(const TrainRecord& rec, const std::string& path);
void save_checkpoint(const Checkpoint& ckpt, const TrainConfig& cfg,
                     const std::string& path_prefix);
void scatter_svg(const Mat& samples, const Mat& centers, const std::string& path);

} // namespace sgp::gan2d
