#include "sgp/integrate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nlohmann/json.hpp"
#include "sgp/rng.hpp"

namespace sgp::integrate {

std::string to_string(TerminalReason r) {
    switch (r) {
        case TerminalReason::Converged: return "converged";
        case TerminalReason::MaxTime: return "max_time";
        case TerminalReason::Diverged: return "diverged";
        case TerminalReason::NumericalFailure: return "numerical_failure";
    }
    return "?";
}

namespace {

constexpr double kDivergenceNorm = 1e6;

bool reached(const StopCondition& stop, const Vec& x) {
    return stop.target && (x - *stop.target).norm() <= stop.tol;
}

} // namespace

Trajectory integrate_ode(const Field& field, const Vec& x0, double dt, double t_max,
                         const StopCondition& stop) {
    if (dt <= 0.0 || t_max < dt) throw ConfigError("integrate_ode needs 0 < dt <= t_max");
    Trajectory traj;
    Vec x = x0;
    double t = 0.0;
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (reached(stop, x)) {
        traj.terminal_reason = TerminalReason::Converged;
        return traj;
    }

    const auto steps = static_cast<long>(std::floor(t_max / dt + 0.5));
    for (long k = 0; k < steps; ++k) {
        Vec k1 = field(x);
        Vec k2 = field(x + 0.5 * dt * k1);
        Vec k3 = field(x + 0.5 * dt * k2);
        Vec k4 = field(x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = (k + 1) * dt;
        traj.times.push_back(t);
        traj.states.push_back(x);
        if (!x.allFinite()) {
            traj.terminal_reason = TerminalReason::NumericalFailure;
            return traj;
        }
        if (x.norm() > kDivergenceNorm) {
            traj.terminal_reason = TerminalReason::Diverged;
            return traj;
        }
        if (reached(stop, x)) {
            traj.terminal_reason = TerminalReason::Converged;
            return traj;
        }
    }
    traj.terminal_reason = TerminalReason::MaxTime;
    return traj;
}

Trajectory simultaneous_gd(const SeededField& field, const Vec& x0, double lr, int steps,
                           std::uint64_t root_seed, const StopCondition& stop) {
    if (lr <= 0.0) throw ConfigError("simultaneous_gd needs lr > 0");
    Trajectory traj;
    Vec x = x0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    for (int k = 0; k < steps; ++k) {
        Vec f = field(x, mix_seed(root_seed, static_cast<std::uint64_t>(k)));
        x += lr * f;
        traj.times.push_back((k + 1) * lr);
        traj.states.push_back(x);
        if (!x.allFinite()) {
            traj.terminal_reason = TerminalReason::NumericalFailure;
            return traj;
        }
        if (x.norm() > kDivergenceNorm) {
            traj.terminal_reason = TerminalReason::Diverged;
            return traj;
        }
        if (reached(stop, x)) {
            traj.terminal_reason = TerminalReason::Converged;
            return traj;
        }
    }
    traj.terminal_reason = TerminalReason::MaxTime;
    return traj;
}

namespace {

// Zero crossings of one scalar lattice component, as line segments per cell
// (marching squares on the sign lattice, linear interpolation on edges).
void trace_nullcline(const std::vector<double>& v, int res, double x_min, double dx,
                     double y_min, double dy,
                     std::vector<std::array<double, 4>>& segments) {
    auto at = [&](int i, int j) { return v[static_cast<std::size_t>(i) * res + j]; };
    auto xc = [&](int i) { return x_min + i * dx; };
    auto yc = [&](int j) { return y_min + j * dy; };

    for (int i = 0; i + 1 < res; ++i) {
        for (int j = 0; j + 1 < res; ++j) {
            const double c00 = at(i, j), c10 = at(i + 1, j);
            const double c01 = at(i, j + 1), c11 = at(i + 1, j + 1);
            std::vector<std::array<double, 2>> pts;
            auto edge = [&](double a, double b, double xa, double ya, double xb, double yb) {
                if ((a < 0) == (b < 0)) return;
                if (a == b) return;
                const double s = a / (a - b);
                pts.push_back({xa + s * (xb - xa), ya + s * (yb - ya)});
            };
            edge(c00, c10, xc(i), yc(j), xc(i + 1), yc(j));         // bottom
            edge(c01, c11, xc(i), yc(j + 1), xc(i + 1), yc(j + 1)); // top
            edge(c00, c01, xc(i), yc(j), xc(i), yc(j + 1));         // left
            edge(c10, c11, xc(i + 1), yc(j), xc(i + 1), yc(j + 1)); // right
            for (std::size_t k = 0; k + 1 < pts.size(); k += 2)
                segments.push_back({pts[k][0], pts[k][1], pts[k + 1][0], pts[k + 1][1]});
        }
    }
}

} // namespace

PhasePortrait phase_portrait(const Field2D& field, std::array<double, 2> psi_range,
                             std::array<double, 2> theta_range, int resolution,
                             const std::vector<std::array<double, 2>>& starts, double dt,
                             double t_max) {
    if (resolution < 8) throw ConfigError("phase portrait resolution must be >= 8");
    PhasePortrait p;
    p.psi_min = psi_range[0];
    p.psi_max = psi_range[1];
    p.theta_min = theta_range[0];
    p.theta_max = theta_range[1];
    p.resolution = resolution;

    const double dpsi = (p.psi_max - p.psi_min) / (resolution - 1);
    const double dtheta = (p.theta_max - p.theta_min) / (resolution - 1);
    std::vector<double> fpsi(static_cast<std::size_t>(resolution) * resolution);
    std::vector<double> ftheta(fpsi.size());

    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            const double psi = p.psi_min + i * dpsi;
            const double theta = p.theta_min + j * dtheta;
            auto [fp, ft] = field(psi, theta);
            const std::size_t idx = static_cast<std::size_t>(i) * resolution + j;
            fpsi[idx] = fp;
            ftheta[idx] = ft;
            p.grid_points.push_back({psi, theta});
            const double nrm = std::hypot(fp, ft);
            if (nrm <= 1e-12) {
                p.arrows.push_back({0.0, 0.0});
                p.equilibria.push_back({psi, theta});
            } else {
                p.arrows.push_back({fp / nrm, ft / nrm});
            }
        }
    }

    trace_nullcline(fpsi, resolution, p.psi_min, dpsi, p.theta_min, dtheta,
                    p.psi_nullcline_segments);
    trace_nullcline(ftheta, resolution, p.psi_min, dpsi, p.theta_min, dtheta,
                    p.theta_nullcline_segments);

    for (const auto& s : starts) {
        Vec x0(2);
        x0 << s[0], s[1];
        auto f = [&field](const Vec& x) -> Vec {
            auto [fp, ft] = field(x(0), x(1));
            Vec out(2);
            out << fp, ft;
            return out;
        };
        p.sample_trajectories.push_back(integrate_ode(f, x0, dt, t_max));
    }
    return p;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void trajectory_to_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    const int dim = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
    os << "t";
    for (int i = 0; i < dim; ++i) os << ",x" << i;
    os << "\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        os << fmt(traj.times[k]);
        for (int i = 0; i < dim; ++i) os << "," << fmt(traj.states[k](i));
        os << "\n";
    }
}

void portrait_to_svg(const PhasePortrait& p, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    const double W = 640, H = 640, pad = 40;
    auto sx = [&](double psi) {
        return pad + (psi - p.psi_min) / (p.psi_max - p.psi_min) * (W - 2 * pad);
    };
    auto sy = [&](double theta) {
        return H - pad - (theta - p.theta_min) / (p.theta_max - p.theta_min) * (H - 2 * pad);
    };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const double alen = 0.35 * (W - 2 * pad) / p.resolution;
    os << "<g stroke=\"#888\" stroke-width=\"1\">\n";
    for (std::size_t k = 0; k < p.grid_points.size(); ++k) {
        const auto& g = p.grid_points[k];
        const auto& a = p.arrows[k];
        if (a[0] == 0.0 && a[1] == 0.0) continue;
        const double x0 = sx(g[0]), y0 = sy(g[1]);
        const double x1 = x0 + a[0] * alen, y1 = y0 - a[1] * alen;
        os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y1
           << "\"/>\n";
        // arrowhead dot
        os << "<circle cx=\"" << x1 << "\" cy=\"" << y1 << "\" r=\"1.2\" fill=\"#888\"/>\n";
    }
    os << "</g>\n";

    auto draw_segments = [&](const std::vector<std::array<double, 4>>& segs,
                             const char* color) {
        os << "<g stroke=\"" << color << "\" stroke-width=\"2\">\n";
        for (const auto& s : segs)
            os << "<line x1=\"" << sx(s[0]) << "\" y1=\"" << sy(s[1]) << "\" x2=\"" << sx(s[2])
               << "\" y2=\"" << sy(s[3]) << "\"/>\n";
        os << "</g>\n";
    };
    draw_segments(p.psi_nullcline_segments, "#d62728");   // psi_dot = 0
    draw_segments(p.theta_nullcline_segments, "#1f77b4"); // theta_dot = 0

    os << "<g stroke=\"#2ca02c\" stroke-width=\"1.5\" fill=\"none\">\n";
    for (const auto& traj : p.sample_trajectories) {
        os << "<polyline points=\"";
        for (const auto& x : traj.states) os << sx(x(0)) << "," << sy(x(1)) << " ";
        os << "\"/>\n";
    }
    os << "</g>\n";

    for (const auto& e : p.equilibria)
        os << "<circle cx=\"" << sx(e[0]) << "\" cy=\"" << sy(e[1])
           << "\" r=\"3\" fill=\"black\"/>\n";
    os << "</svg>\n";
}

void portrait_to_json(const PhasePortrait& p, const std::string& path) {
    nlohmann::json j;
    j["box"] = {{"psi_min", p.psi_min},
                {"psi_max", p.psi_max},
                {"theta_min", p.theta_min},
                {"theta_max", p.theta_max}};
    j["resolution"] = p.resolution;
    j["grid"] = p.grid_points;
    j["arrows"] = p.arrows;
    j["psi_nullcline_segments"] = p.psi_nullcline_segments;
    j["theta_nullcline_segments"] = p.theta_nullcline_segments;
    j["equilibria"] = p.equilibria;
    nlohmann::json trajs = nlohmann::json::array();
    for (const auto& t : p.sample_trajectories) {
        nlohmann::json jt;
        jt["times"] = t.times;
        nlohmann::json states = nlohmann::json::array();
        for (const auto& x : t.states) states.push_back({x(0), x(1)});
        jt["states"] = states;
        jt["terminal_reason"] = to_string(t.terminal_reason);
        trajs.push_back(jt);
    }
    j["trajectories"] = trajs;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << j.dump(2) << "\n";
}

} // namespace sgp::integrate
