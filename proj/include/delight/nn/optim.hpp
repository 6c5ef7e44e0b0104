#pragma once

#include <vector>

#include "delight/nn/tensor.hpp"

namespace dlt::nn {

struct OptGroup {
    std::vector<Tensor> params;
    double lr = 1e-4;
};

// Plain Adam, double precision, deterministic.
class Adam {
  public:
    explicit Adam(std::vector<OptGroup> groups, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    void step();
    void zeroGrad();
    // Scales all gradients so their global L2 norm is at most maxNorm
    // (no-op when maxNorm <= 0). Returns the pre-clip norm.
    double clipGradNorm(double maxNorm);
    int stepCount() const { return t_; }
    void setLr(size_t group, double lr) { groups_[group].lr = lr; }

  private:
    std::vector<OptGroup> groups_;
    std::vector<std::vector<Eigen::ArrayXd>> m_, v_;
    double beta1_, beta2_, eps_;
    int t_ = 0;
};

}  // namespace dlt::nn
