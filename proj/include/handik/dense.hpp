#pragma once

#include <Eigen/Core>
#include <Eigen/StdVector>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace handik {

/// Flat parameter / gradient storage. The base address is aligned to the
/// widest SIMD width so vectorized reductions over mapped layers always split
/// the same way, which keeps results bit-identical between runs.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

/// Fully connected ReLU network with a linear output layer. All weights and
/// biases live in one flat parameter vector, so optimizers and checkpoints
/// treat a net as a single array.
class DenseNet {
public:
    DenseNet() = default;
    /// dims = {input, hidden..., output}; dims.size() - 1 weight layers.
    explicit DenseNet(std::vector<int> dims);

    int layer_count() const { return static_cast<int>(dims_.size()) - 1; }
    const std::vector<int>& dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    std::size_t param_count() const { return params_.size(); }

    ParamVector& params() { return params_; }
    const ParamVector& params() const { return params_; }

    /// Column-major out x in.
    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<Eigen::VectorXd> bias(int layer);
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
    std::size_t weight_offset(int layer) const { return offsets_[layer]; }
    std::size_t bias_offset(int layer) const { return offsets_[layer] + std::size_t(dims_[layer + 1]) * dims_[layer]; }

    /// Weights ~ N(0, 2 / fan_in), biases zero.
    void init_kaiming(std::mt19937_64& rng);

    struct Cache {
        /// Layer inputs (post-activation), one column per sample.
        std::vector<Eigen::MatrixXd> inputs;
    };

    /// X is input_dim x batch.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
    /// Accumulates dL/dparams into `grad` (same layout as params()).
    void backward(const Cache& cache, const Eigen::MatrixXd& grad_out, ParamVector& grad) const;

    bool operator==(const DenseNet& o) const { return dims_ == o.dims_ && params_ == o.params_; }

private:
    std::vector<int> dims_;
    std::vector<std::size_t> offsets_;
    ParamVector params_;
};

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    ParamVector m;
    ParamVector v;

    explicit AdamState(std::size_t n = 0, double lr_ = 1e-3) : lr(lr_), m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update in place.
void adam_step(AdamState& state, ParamVector& params, const ParamVector& grads);

}  // namespace handik
