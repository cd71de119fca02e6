#include "handik/dense.hpp"

#include <cmath>
#include <stdexcept>

namespace handik {

DenseNet::DenseNet(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw std::invalid_argument("DenseNet needs at least one layer");
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        if (dims_[l] <= 0 || dims_[l + 1] <= 0) throw std::invalid_argument("DenseNet layer dims must be positive");
        offsets_.push_back(n);
        n += std::size_t(dims_[l + 1]) * dims_[l] + dims_[l + 1];
    }
    params_.assign(n, 0.0);
}

Eigen::Map<Eigen::MatrixXd> DenseNet::weight(int l) {
    return {params_.data() + offsets_[l], dims_[l + 1], dims_[l]};
}
Eigen::Map<const Eigen::MatrixXd> DenseNet::weight(int l) const {
    return {params_.data() + offsets_[l], dims_[l + 1], dims_[l]};
}
Eigen::Map<Eigen::VectorXd> DenseNet::bias(int l) { return {params_.data() + bias_offset(l), dims_[l + 1]}; }
Eigen::Map<const Eigen::VectorXd> DenseNet::bias(int l) const {
    return {params_.data() + bias_offset(l), dims_[l + 1]};
}

void DenseNet::init_kaiming(std::mt19937_64& rng) {
    for (int l = 0; l < layer_count(); ++l) {
        std::normal_distribution<double> n(0.0, std::sqrt(2.0 / dims_[l]));
        auto w = weight(l);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = n(rng);
        bias(l).setZero();
    }
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& x, Cache* cache) const {
    if (x.rows() != input_dim()) throw std::invalid_argument("DenseNet: input has wrong dimension");
    if (cache) cache->inputs.assign(1, x);
    Eigen::MatrixXd h = x;
    for (int l = 0; l < layer_count(); ++l) {
        Eigen::MatrixXd z = weight(l) * h;
        z.colwise() += bias(l);
        if (l + 1 < layer_count()) {
            z = z.cwiseMax(0.0);
            if (cache) cache->inputs.push_back(z);
        }
        h = std::move(z);
    }
    return h;
}

void DenseNet::backward(const Cache& cache, const Eigen::MatrixXd& grad_out, ParamVector& grad) const {
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    Eigen::MatrixXd g = grad_out;
    for (int l = layer_count() - 1; l >= 0; --l) {
        const Eigen::MatrixXd& in = cache.inputs[l];
        Eigen::Map<Eigen::MatrixXd>(grad.data() + offsets_[l], dims_[l + 1], dims_[l]).noalias() += g * in.transpose();
        Eigen::Map<Eigen::VectorXd>(grad.data() + bias_offset(l), dims_[l + 1]) += g.rowwise().sum();
        if (l == 0) break;
        Eigen::MatrixXd back = weight(l).transpose() * g;
        // ReLU mask: the cached input is the post-activation of layer l - 1.
        g = (in.array() > 0.0).select(back, 0.0);
    }
}

void adam_step(AdamState& s, ParamVector& params, const ParamVector& grads) {
    if (params.size() != grads.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
        throw std::invalid_argument("adam_step: size mismatch");
    }
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
        s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
        const double mhat = s.m[i] / c1;
        const double vhat = s.v[i] / c2;
        params[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

}  // namespace handik
