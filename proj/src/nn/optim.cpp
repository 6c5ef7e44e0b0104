#include "delight/nn/optim.hpp"

#include <cmath>

namespace dlt::nn {

Adam::Adam(std::vector<OptGroup> groups, double beta1, double beta2, double eps)
    : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(groups_.size());
    v_.resize(groups_.size());
    for (size_t g = 0; g < groups_.size(); ++g) {
        m_[g].resize(groups_[g].params.size());
        v_[g].resize(groups_[g].params.size());
        for (size_t i = 0; i < groups_[g].params.size(); ++i) {
            const Eigen::Index n = Eigen::Index(groups_[g].params[i].numel());
            m_[g][i] = Eigen::ArrayXd::Zero(n);
            v_[g][i] = Eigen::ArrayXd::Zero(n);
        }
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t g = 0; g < groups_.size(); ++g) {
        const double lr = groups_[g].lr;
        for (size_t i = 0; i < groups_[g].params.size(); ++i) {
            Tensor& p = groups_[g].params[i];
            const Eigen::ArrayXd& grad = p.grad();
            m_[g][i] = beta1_ * m_[g][i] + (1.0 - beta1_) * grad;
            v_[g][i] = beta2_ * v_[g][i] + (1.0 - beta2_) * grad.square();
            p.value() -= lr * (m_[g][i] / bc1) / ((v_[g][i] / bc2).sqrt() + eps_);
        }
    }
}

void Adam::zeroGrad() {
    for (auto& g : groups_)
        for (auto& p : g.params) p.zeroGrad();
}

double Adam::clipGradNorm(double maxNorm) {
    double sq = 0.0;
    for (auto& g : groups_)
        for (auto& p : g.params) sq += p.grad().square().sum();
    const double norm = std::sqrt(sq);
    if (maxNorm > 0.0 && norm > maxNorm) {
        const double s = maxNorm / norm;
        for (auto& g : groups_)
            for (auto& p : g.params) p.grad() *= s;
    }
    return norm;
}

}  // namespace dlt::nn
