#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgp/errors.hpp"

namespace sgp::integrate {

using Vec = Eigen::VectorXd;

enum class TerminalReason { Converged, MaxTime, Diverged, NumericalFailure };
std::string to_string(TerminalReason r);

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    TerminalReason terminal_reason = TerminalReason::MaxTime;
};

using Field = std::function<Vec(const Vec&)>;
// Field with a per-step seed, for stochastic drifts.
using SeededField = std::function<Vec(const Vec&, std::uint64_t seed)>;

struct StopCondition {
    std::optional<Vec> target;
    double tol = 1e-4;
};

// Classical fixed-step RK4. Terminates Converged when ||state - target|| <=
// tol, Diverged when ||state|| > 1e6, NumericalFailure on a non-finite field
// value (recorded as the terminal reason, not thrown).
Trajectory integrate_ode(const Field& field, const Vec& x0, double dt, double t_max,
                         const StopCondition& stop = {});

// Explicit-Euler simultaneous updates x_{k+1} = x_k + lr field(x_k), with
// per-step seeds derived from root_seed. Same termination rules; times are
// k * lr so discrete runs line up with ODE time.
Trajectory simultaneous_gd(const SeededField& field, const Vec& x0, double lr, int steps,
                           std::uint64_t root_seed, const StopCondition& stop = {});

using Field2D = std::function<std::array<double, 2>(double, double)>;

struct PhasePortrait {
    double psi_min = 0, psi_max = 0, theta_min = 0, theta_max = 0;
    int resolution = 0;
    // Lattice values, row-major over (i: psi index, j: theta index).
    std::vector<std::array<double, 2>> grid_points;
    std::vector<std::array<double, 2>> arrows; // unit norm, zero at equilibria
    // Polyline segments where one component vanishes (marching squares).
    std::vector<std::array<double, 4>> psi_nullcline_segments;   // x1,y1,x2,y2
    std::vector<std::array<double, 4>> theta_nullcline_segments;
    std::vector<Trajectory> sample_trajectories;
    std::vector<std::array<double, 2>> equilibria; // grid cells with ~zero field
};

PhasePortrait phase_portrait(const Field2D& field, std::array<double, 2> psi_range,
                             std::array<double, 2> theta_range, int resolution,
                             const std::vector<std::array<double, 2>>& starts,
                             double dt = 0.01, double t_max = 40.0);

// --- File outputs ------------------------------------------------------------

// CSV columns: t, x0, x1, ...
void trajectory_to_csv(const Trajectory& traj, const std::string& path);

void portrait_to_svg(const PhasePortrait& p, const std::string& path);
void portrait_to_json(const PhasePortrait& p, const std::string& path);

} // namespace sgp::integrate
