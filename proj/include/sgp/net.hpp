#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sgp/errors.hpp"

namespace sgp {

// Fully connected network with tanh hidden layers and a linear output layer.
// Parameters live in one flat vector so optimizers and checkpoints can treat
// the network as a point in R^p. All passes are batched, one column per
// sample.
//
// Besides the usual value/gradient passes, the network exposes second-order
// quantities built from a forward tangent pass composed with a reverse pass:
// the parameter gradient of ||grad_x D||^2 and the mixed derivative
// d^2 D / dparam dx. Both are exact, not finite differences.
class Mlp {
public:
    explicit Mlp(std::vector<int> dims);

    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int param_count() const { return n_params_; }
    const std::vector<int>& dims() const { return dims_; }

    const Eigen::VectorXd& params() const { return params_; }
    void set_params(const Eigen::VectorXd& p);

    // Glorot-uniform init scaled by `scale`, deterministic per seed.
    void init(std::uint64_t seed, double scale = 1.0);

    // Forward pass: X is input_dim x N, result is output_dim x N.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;

    // Gradient wrt parameters of sum_n adjoint(:,n) . out(:,n).
    Eigen::VectorXd grad_params(const Eigen::MatrixXd& X,
                                const Eigen::MatrixXd& out_adjoint) const;

    // Input-space VJP: d(sum_n adjoint(:,n) . out(:,n)) / dX, input_dim x N.
    Eigen::MatrixXd grad_input(const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& out_adjoint) const;

    // For scalar-output nets: grad_x of the output per sample, input_dim x N.
    Eigen::MatrixXd grad_x(const Eigen::MatrixXd& X) const;

    // For scalar-output nets: parameter gradient of
    //   (1/N) sum_n ||grad_x D(x_n)||^2,
    // with the mean squared gradient norm returned through *value.
    Eigen::VectorXd squared_grad_param_grad(const Eigen::MatrixXd& X,
                                            double* value = nullptr) const;

    // For scalar-output nets: mixed derivative matrix at a single point,
    // (param_count x input_dim), column i = d/dparams of dD/dx_i.
    Eigen::MatrixXd mixed_grad(const Eigen::VectorXd& x) const;

private:
    struct Cache {
        std::vector<Eigen::MatrixXd> act; // act[0] = X, act[l] post-layer output
    };
    Cache forward_cached(const Eigen::MatrixXd& X) const;

    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
    Eigen::Map<Eigen::MatrixXd> weight_grad(Eigen::VectorXd& g, int layer) const;
    Eigen::Map<Eigen::VectorXd> bias_grad(Eigen::VectorXd& g, int layer) const;

    // Shared core for the second-order passes: parameter gradient of
    // sum_n sum_i gbar_i(n) * g_i(n), where g_i = dD/dx_i and the tangent
    // seed runs over the selected input directions.
    Eigen::VectorXd tangent_reverse(const Eigen::MatrixXd& X,
                                    const std::vector<int>& input_dirs,
                                    const std::vector<Eigen::RowVectorXd>& gbar,
                                    double* sq_value) const;

    std::vector<int> dims_;
    std::vector<int> w_offset_, b_offset_;
    int n_params_ = 0;
    Eigen::VectorXd params_;
};

} // namespace sgp
