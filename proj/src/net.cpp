#include "sgp/net.hpp"

#include <cmath>
#include <random>

#include "sgp/rng.hpp"

namespace sgp {

Mlp::Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw ConfigError("Mlp needs at least input and output dims");
    int off = 0;
    for (std::size_t l = 1; l < dims_.size(); ++l) {
        w_offset_.push_back(off);
        off += dims_[l] * dims_[l - 1];
        b_offset_.push_back(off);
        off += dims_[l];
    }
    n_params_ = off;
    params_ = Eigen::VectorXd::Zero(n_params_);
}

void Mlp::set_params(const Eigen::VectorXd& p) {
    if (p.size() != n_params_) throw ConfigError("parameter vector length mismatch");
    params_ = p;
}

void Mlp::init(std::uint64_t seed, double scale) {
    auto rng = make_rng(seed);
    for (std::size_t l = 1; l < dims_.size(); ++l) {
        const int fan_in = dims_[l - 1], fan_out = dims_[l];
        const double limit = scale * std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        double* w = params_.data() + w_offset_[l - 1];
        for (int k = 0; k < fan_in * fan_out; ++k) w[k] = u(rng);
        double* b = params_.data() + b_offset_[l - 1];
        for (int k = 0; k < fan_out; ++k) b[k] = 0.0;
    }
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
    return {params_.data() + w_offset_[layer], dims_[layer + 1], dims_[layer]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
    return {params_.data() + b_offset_[layer], dims_[layer + 1]};
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight_grad(Eigen::VectorXd& g, int layer) const {
    return {g.data() + w_offset_[layer], dims_[layer + 1], dims_[layer]};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias_grad(Eigen::VectorXd& g, int layer) const {
    return {g.data() + b_offset_[layer], dims_[layer + 1]};
}

Mlp::Cache Mlp::forward_cached(const Eigen::MatrixXd& X) const {
    Cache c;
    const int L = static_cast<int>(dims_.size()) - 1;
    c.act.resize(L + 1);
    c.act[0] = X;
    for (int l = 0; l < L; ++l) {
        Eigen::MatrixXd z = (weight(l) * c.act[l]).colwise() + bias(l);
        c.act[l + 1] = (l + 1 < L) ? z.array().tanh().matrix() : std::move(z);
    }
    return c;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X) const {
    return forward_cached(X).act.back();
}

Eigen::VectorXd Mlp::grad_params(const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& out_adjoint) const {
    const int L = static_cast<int>(dims_.size()) - 1;
    Cache c = forward_cached(X);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_params_);
    Eigen::MatrixXd delta = out_adjoint;
    for (int l = L - 1; l >= 0; --l) {
        weight_grad(g, l) = delta * c.act[l].transpose();
        bias_grad(g, l) = delta.rowwise().sum();
        if (l > 0) {
            delta = weight(l).transpose() * delta;
            delta.array() *= 1.0 - c.act[l].array().square();
        }
    }
    return g;
}

Eigen::MatrixXd Mlp::grad_input(const Eigen::MatrixXd& X,
                                const Eigen::MatrixXd& out_adjoint) const {
    const int L = static_cast<int>(dims_.size()) - 1;
    Cache c = forward_cached(X);
    Eigen::MatrixXd delta = out_adjoint;
    for (int l = L - 1; l >= 1; --l) {
        delta = weight(l).transpose() * delta;
        delta.array() *= 1.0 - c.act[l].array().square();
    }
    return weight(0).transpose() * delta;
}

Eigen::MatrixXd Mlp::grad_x(const Eigen::MatrixXd& X) const {
    if (output_dim() != 1) throw ConfigError("grad_x requires a scalar output");
    return grad_input(X, Eigen::MatrixXd::Ones(1, X.cols()));
}

Eigen::VectorXd Mlp::tangent_reverse(const Eigen::MatrixXd& X,
                                     const std::vector<int>& input_dirs,
                                     const std::vector<Eigen::RowVectorXd>& gbar_in,
                                     double* sq_value) const {
    if (output_dim() != 1) throw ConfigError("second-order pass requires a scalar output");
    const int L = static_cast<int>(dims_.size()) - 1;
    const int N = static_cast<int>(X.cols());
    const int S = static_cast<int>(input_dirs.size());
    Cache c = forward_cached(X);

    // Forward tangent pass, one stream per input direction. T[s][l] is the
    // post-activation tangent, Spre[s][l] the pre-activation tangent at
    // hidden layer l (1-based like act).
    std::vector<std::vector<Eigen::MatrixXd>> T(S), Spre(S);
    std::vector<Eigen::RowVectorXd> g(S);
    for (int s = 0; s < S; ++s) {
        T[s].resize(L);
        Spre[s].resize(L);
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dims_[0], N);
        t.row(input_dirs[s]).setOnes();
        T[s][0] = std::move(t);
        for (int l = 1; l < L; ++l) {
            Spre[s][l] = weight(l - 1) * T[s][l - 1];
            T[s][l] = (Spre[s][l].array() * (1.0 - c.act[l].array().square())).matrix();
        }
        g[s] = weight(L - 1) * T[s][L - 1]; // dD/dx_{input_dirs[s]} per sample
    }

    std::vector<Eigen::RowVectorXd> gbar = gbar_in;
    if (gbar.empty()) {
        // Squared-gradient-norm mode: P = (1/N) sum_n sum_s g_s(n)^2.
        gbar.resize(S);
        double total = 0.0;
        for (int s = 0; s < S; ++s) {
            gbar[s] = (2.0 / N) * g[s];
            total += g[s].squaredNorm();
        }
        if (sq_value) *sq_value = total / N;
    } else if (sq_value) {
        double total = 0.0;
        for (int s = 0; s < S; ++s) total += g[s].squaredNorm();
        *sq_value = total / N;
    }

    // Reverse pass over the tangent-augmented computation.
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params_);
    Eigen::MatrixXd abar; // adjoint of act[l], accumulated across streams
    std::vector<Eigen::MatrixXd> tbar(S);

    // Output layer: g_s = W_L t_{L-1,s}; b and the value path carry nothing.
    {
        auto wg = weight_grad(grad, L - 1);
        for (int s = 0; s < S; ++s) {
            wg += gbar[s] * T[s][L - 1].transpose();
            tbar[s] = weight(L - 1).transpose() * gbar[s];
        }
        abar = Eigen::MatrixXd::Zero(dims_[L - 1], N);
    }

    for (int l = L - 1; l >= 1; --l) {
        // phi'(z) = 1 - a^2, phi''(z) = -2 a (1 - a^2), in terms of a = act[l].
        Eigen::ArrayXXd phi1 = 1.0 - c.act[l].array().square();
        Eigen::ArrayXXd phi2 = -2.0 * c.act[l].array() * phi1;

        Eigen::MatrixXd zbar = (abar.array() * phi1).matrix();
        std::vector<Eigen::MatrixXd> sbar(S);
        for (int s = 0; s < S; ++s) {
            zbar.array() += tbar[s].array() * Spre[s][l].array() * phi2;
            sbar[s] = (tbar[s].array() * phi1).matrix();
        }

        auto wg = weight_grad(grad, l - 1);
        wg += zbar * c.act[l - 1].transpose();
        for (int s = 0; s < S; ++s) wg += sbar[s] * T[s][l - 1].transpose();
        bias_grad(grad, l - 1) += zbar.rowwise().sum();

        if (l > 1) {
            abar = weight(l - 1).transpose() * zbar;
            for (int s = 0; s < S; ++s) tbar[s] = weight(l - 1).transpose() * sbar[s];
        }
    }
    return grad;
}

Eigen::VectorXd Mlp::squared_grad_param_grad(const Eigen::MatrixXd& X, double* value) const {
    std::vector<int> dirs(input_dim());
    for (int i = 0; i < input_dim(); ++i) dirs[i] = i;
    return tangent_reverse(X, dirs, {}, value);
}

Eigen::MatrixXd Mlp::mixed_grad(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd out(n_params_, input_dim());
    Eigen::MatrixXd X = x;
    for (int i = 0; i < input_dim(); ++i) {
        std::vector<Eigen::RowVectorXd> gbar{Eigen::RowVectorXd::Ones(1)};
        out.col(i) = tangent_reverse(X, {i}, gbar, nullptr);
    }
    return out;
}

} // namespace sgp
